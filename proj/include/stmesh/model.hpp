#pragma once

// Spatial meshes, temporal connectivity, the embedded spacetime slab, face
// triangulated polyhedra and the output tetrahedral mesh.

#include <stmesh/errors.hpp>
#include <stmesh/geometry.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace stmesh {

using Edge = std::pair<NodeId, NodeId>;
using TetIdx = std::array<NodeId, 4>;

inline Edge make_edge(NodeId a, NodeId b) { return a < b ? Edge{a, b} : Edge{b, a}; }

inline TriIdx sorted_tri(TriIdx t) {
    std::sort(t.begin(), t.end());
    return t;
}

/// Rotates a triangle so its smallest id comes first, keeping orientation.
inline TriIdx canonical_rotation(const TriIdx& t) {
    int k = 0;
    if (t[1] < t[k]) k = 1;
    if (t[2] < t[k]) k = 2;
    return {t[k], t[(k + 1) % 3], t[(k + 2) % 3]};
}

struct TriMesh2D {
    std::vector<Point2> nodes;
    std::vector<TriIdx> triangles;

    std::size_t node_count() const { return nodes.size(); }

    /// Sorted, deduplicated undirected edges.
    std::vector<Edge> edges() const {
        std::vector<Edge> e;
        e.reserve(triangles.size() * 3);
        for (const auto& t : triangles) {
            for (int i = 0; i < 3; ++i) {
                e.push_back(make_edge(t[i], t[(i + 1) % 3]));
            }
        }
        std::sort(e.begin(), e.end());
        e.erase(std::unique(e.begin(), e.end()), e.end());
        return e;
    }

    /// Edges used by exactly one triangle.
    std::vector<Edge> boundary_edges() const {
        std::map<Edge, int> count;
        for (const auto& t : triangles) {
            for (int i = 0; i < 3; ++i) {
                ++count[make_edge(t[i], t[(i + 1) % 3])];
            }
        }
        std::vector<Edge> out;
        for (const auto& [e, c] : count) {
            if (c == 1) {
                out.push_back(e);
            }
        }
        return out;
    }

    /// Throws IndexOutOfRange or NonManifoldMesh when the mesh is not a
    /// consistently CCW oriented 2-complex.
    void validate() const {
        const auto n = static_cast<NodeId>(nodes.size());
        for (const auto& p : nodes) {
            if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
                throw NonManifoldMesh("non-finite node coordinate");
            }
        }
        std::set<TriIdx> seen;
        std::set<Edge> directed;
        for (std::size_t i = 0; i < triangles.size(); ++i) {
            const auto& t = triangles[i];
            for (NodeId v : t) {
                if (v < 0 || v >= n) {
                    throw IndexOutOfRange("triangle " + std::to_string(i) + " references node " + std::to_string(v));
                }
            }
            if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
                throw NonManifoldMesh("triangle " + std::to_string(i) + " repeats a node");
            }
            if (!seen.insert(sorted_tri(t)).second) {
                throw NonManifoldMesh("duplicate triangle " + std::to_string(i));
            }
            if (orient2d(nodes[t[0]], nodes[t[1]], nodes[t[2]]) <= 0.0) {
                throw NonManifoldMesh("triangle " + std::to_string(i) + " is not counter-clockwise");
            }
            for (int k = 0; k < 3; ++k) {
                if (!directed.insert({t[k], t[(k + 1) % 3]}).second) {
                    throw NonManifoldMesh("edge " + std::to_string(t[k]) + "-" + std::to_string(t[(k + 1) % 3]) +
                                          " is shared by more than two triangles or misoriented");
                }
            }
        }
    }
};

struct NextNodeMap {
    std::vector<NodeId> next;
};

/// Two consecutive layers embedded in (x, y, t).  Lower node i has global id
/// i at t = t0; upper node j has global id |V_lower| + j at t = t0 + dt.
struct SpacetimeLayerPair {
    TriMesh2D lower;
    TriMesh2D upper;
    NextNodeMap next;
    double dt = 1.0;
    double t0 = 0.0;

    NodeId lower_count() const { return static_cast<NodeId>(lower.nodes.size()); }
    NodeId upper_count() const { return static_cast<NodeId>(upper.nodes.size()); }
    NodeId upper_id(NodeId j) const { return lower_count() + j; }
    /// Global id of the next node of lower node v.
    NodeId next_id(NodeId v) const { return upper_id(next.next[v]); }
    bool is_upper(NodeId g) const { return g >= lower_count(); }

    std::vector<Point3> points() const {
        std::vector<Point3> p;
        p.reserve(lower.nodes.size() + upper.nodes.size());
        for (const auto& q : lower.nodes) {
            p.push_back({q.x, q.y, t0});
        }
        for (const auto& q : upper.nodes) {
            p.push_back({q.x, q.y, t0 + dt});
        }
        return p;
    }

    /// Bounding-box diagonal of the embedded nodes.
    double bbox_diagonal() const {
        const auto pts = points();
        if (pts.empty()) {
            return 1.0;
        }
        Point3 lo = pts[0], hi = pts[0];
        for (const auto& q : pts) {
            lo = {std::min(lo.x, q.x), std::min(lo.y, q.y), std::min(lo.t, q.t)};
            hi = {std::max(hi.x, q.x), std::max(hi.y, q.y), std::max(hi.t, q.t)};
        }
        return norm(hi - lo);
    }
};

inline SpacetimeLayerPair build_layer_pair(TriMesh2D lower, TriMesh2D upper, NextNodeMap next, double dt,
                                           double t0 = 0.0) {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw Error("dt must be positive");
    }
    lower.validate();
    upper.validate();
    if (next.next.size() != lower.nodes.size()) {
        throw IndexOutOfRange("next map has " + std::to_string(next.next.size()) + " entries for " +
                              std::to_string(lower.nodes.size()) + " lower nodes");
    }
    for (std::size_t i = 0; i < next.next.size(); ++i) {
        const NodeId j = next.next[i];
        if (j < 0 || j >= static_cast<NodeId>(upper.nodes.size())) {
            throw IndexOutOfRange("next(" + std::to_string(i) + ") = " + std::to_string(j) + " is not an upper node");
        }
    }
    return SpacetimeLayerPair{std::move(lower), std::move(upper), std::move(next), dt, t0};
}

/// A stack of layers with temporal connectivity between consecutive ones.
/// Layer i sits at t = t0 + i * dt; its node v has global id offset(i) + v.
struct LayerSequence {
    std::vector<TriMesh2D> layers;
    std::vector<NextNodeMap> nexts;
    double dt = 1.0;
    double t0 = 0.0;

    double layer_time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }

    NodeId offset(std::size_t layer) const {
        NodeId o = 0;
        for (std::size_t i = 0; i < layer; ++i) o += static_cast<NodeId>(layers[i].nodes.size());
        return o;
    }
    NodeId total_nodes() const { return offset(layers.size()); }

    SpacetimeLayerPair pair(std::size_t i) const {
        return build_layer_pair(layers[i], layers[i + 1], nexts[i], dt, layer_time(i));
    }

    std::vector<Point3> points() const {
        std::vector<Point3> p;
        for (std::size_t i = 0; i < layers.size(); ++i) {
            for (const auto& q : layers[i].nodes) p.push_back({q.x, q.y, layer_time(i)});
        }
        return p;
    }

    static LayerSequence from_pair(const SpacetimeLayerPair& p) {
        LayerSequence s{{p.lower, p.upper}, {p.next}, p.dt, p.t0};
        return s;
    }
};

enum class FaceTag : std::uint8_t { LowerCap, UpperCap, Lateral };

/// Closed surface over a compact local node table.  Local ids are assigned in
/// ascending global id order, so comparing local ids compares global ids.
struct Polyhedron {
    std::vector<NodeId> ids;     // local -> global
    std::vector<Point3> points;  // local coordinates
    std::vector<TriIdx> triangles; // local ids, outward oriented
    std::vector<FaceTag> tags;

    NodeId size() const { return static_cast<NodeId>(ids.size()); }

    SurfaceView view() const { return {points, triangles}; }

    /// Builds from global-id triangles and the global point table.
    static Polyhedron from_global(const std::vector<TriIdx>& tris, const std::vector<FaceTag>& tags,
                                  const std::vector<Point3>& global_points) {
        Polyhedron p;
        for (const auto& t : tris) {
            p.ids.insert(p.ids.end(), t.begin(), t.end());
        }
        std::sort(p.ids.begin(), p.ids.end());
        p.ids.erase(std::unique(p.ids.begin(), p.ids.end()), p.ids.end());
        for (NodeId g : p.ids) {
            p.points.push_back(global_points.at(g));
        }
        auto local = [&](NodeId g) {
            return static_cast<NodeId>(std::lower_bound(p.ids.begin(), p.ids.end(), g) - p.ids.begin());
        };
        for (const auto& t : tris) {
            p.triangles.push_back({local(t[0]), local(t[1]), local(t[2])});
        }
        p.tags = tags;
        p.tags.resize(p.triangles.size(), FaceTag::Lateral);
        return p;
    }

    bool closed() const {
        try {
            require_closed(view());
        } catch (const OpenSurface&) {
            return false;
        }
        return true;
    }

    std::vector<std::set<NodeId>> adjacency() const {
        std::vector<std::set<NodeId>> adj(ids.size());
        for (const auto& t : triangles) {
            for (int i = 0; i < 3; ++i) {
                adj[t[i]].insert(t[(i + 1) % 3]);
                adj[t[(i + 1) % 3]].insert(t[i]);
            }
        }
        return adj;
    }

    int euler_characteristic() const {
        std::set<Edge> e;
        std::set<NodeId> v;
        for (const auto& t : triangles) {
            for (int i = 0; i < 3; ++i) {
                e.insert(make_edge(t[i], t[(i + 1) % 3]));
                v.insert(t[i]);
            }
        }
        return static_cast<int>(v.size()) - static_cast<int>(e.size()) + static_cast<int>(triangles.size());
    }

    /// Enclosed volume by the divergence theorem.
    double volume() const {
        double v = 0.0;
        if (points.empty()) {
            return v;
        }
        const Point3 o = points[0];
        for (const auto& t : triangles) {
            v += dot(points[t[0]] - o, cross(points[t[1]] - o, points[t[2]] - o));
        }
        return v / 6.0;
    }
};

struct TetMesh {
    std::vector<Point3> nodes;
    std::vector<TetIdx> tets;
    std::vector<std::int32_t> provenance; // source partition per tet

    friend bool operator==(const TetMesh&, const TetMesh&) = default;
};

/// Reorders a tet so its signed volume is nonnegative.
inline TetIdx orient_positive(TetIdx t, const std::vector<Point3>& pts) {
    if (det3(pts[t[0]], pts[t[1]], pts[t[2]], pts[t[3]]) < 0.0) {
        std::swap(t[2], t[3]);
    }
    return t;
}

} // namespace stmesh
