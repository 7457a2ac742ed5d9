#pragma once

// Fixtures, generators and reference oracles shared by the test binaries.

#include <stmesh/conquer.hpp>
#include <stmesh/geometry.hpp>
#include <stmesh/lateral.hpp>
#include <stmesh/model.hpp>
#include <stmesh/synthetic.hpp>
#include <stmesh/validate.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <vector>

namespace testsupport {

using namespace stmesh;

inline TetIdx sorted_tet(TetIdx t) {
    std::sort(t.begin(), t.end());
    return t;
}

inline std::set<TetIdx> tet_set(const std::vector<TetIdx>& tets) {
    std::set<TetIdx> s;
    for (const auto& t : tets) s.insert(sorted_tet(t));
    return s;
}

/// One triangle below, one above, identity next.
inline SpacetimeLayerPair prism_pair(const std::array<Point2, 3>& a, const std::array<Point2, 3>& b, double dt = 1.0) {
    TriMesh2D lo{{a[0], a[1], a[2]}, {{0, 1, 2}}};
    TriMesh2D up{{b[0], b[1], b[2]}, {{0, 1, 2}}};
    return build_layer_pair(lo, up, NextNodeMap{{0, 1, 2}}, dt);
}

inline std::array<Point3, 6> prism_points(const SpacetimeLayerPair& p) {
    const auto pts = p.points();
    return {pts[0], pts[1], pts[2], pts[3], pts[4], pts[5]};
}

/// Equilateral triangle on the unit circle and its copy rotated by theta,
/// with b_i the image of a_{(i + shift) % 3}.
inline SpacetimeLayerPair twisted_prism(double theta, int shift = 0) {
    std::array<Point2, 3> a, b;
    for (int i = 0; i < 3; ++i) {
        const double ang = 2.0 * std::numbers::pi * i / 3.0;
        a[i] = {std::cos(ang), std::sin(ang)};
        const double bang = 2.0 * std::numbers::pi * ((i + shift) % 3) / 3.0 + theta;
        b[i] = {std::cos(bang), std::sin(bang)};
    }
    return prism_pair(a, b);
}

/// Quasi-ill-posed prism: the staircase laterals enclose a polyhedron with
/// no tetrahedralization; flipping a0-b1 to a1-b0 fixes it.
inline SpacetimeLayerPair quasi_ill_posed_prism() {
    return prism_pair({Point2{0, 0}, Point2{4, 0}, Point2{0, 4}}, {Point2{2, 0}, Point2{0, 3}, Point2{0, 2}}, 4.0);
}

/// Closed prism surface (local ids a_i = i, b_i = 3 + i) with the lateral
/// diagonals of a scheme; outward for a CCW lower triangle.
inline Polyhedron prism_polyhedron(const std::array<Point3, 6>& P, int scheme) {
    const auto o = scheme_order(scheme);
    const auto pos = [&](int k) { return std::find(o.begin(), o.end(), k) - o.begin(); };
    std::vector<TriIdx> tris{{0, 2, 1}, {3, 4, 5}};
    std::vector<FaceTag> tags{FaceTag::LowerCap, FaceTag::UpperCap};
    for (auto [i, j] : {std::pair{0, 1}, std::pair{1, 2}, std::pair{2, 0}}) {
        if (pos(i) < pos(j)) {
            tris.push_back({i, j, 3 + j});
            tris.push_back({i, 3 + j, 3 + i});
        } else {
            tris.push_back({i, j, 3 + i});
            tris.push_back({j, 3 + j, 3 + i});
        }
        tags.push_back(FaceTag::Lateral);
        tags.push_back(FaceTag::Lateral);
    }
    std::vector<Point3> pts(P.begin(), P.end());
    return Polyhedron::from_global(tris, tags, pts);
}

/// Staircase tets of a prismatic spacetime: for each lower triangle with
/// sorted ids i < j < k, the three monotone index paths through (i j k) and
/// their primed copies.
inline std::set<TetIdx> staircase_oracle(const TriMesh2D& m) {
    const NodeId n = static_cast<NodeId>(m.nodes.size());
    std::set<TetIdx> out;
    for (auto t : m.triangles) {
        std::sort(t.begin(), t.end());
        const NodeId i = t[0], j = t[1], k = t[2];
        out.insert(sorted_tet({i, j, k, n + k}));
        out.insert(sorted_tet({i, j, n + j, n + k}));
        out.insert(sorted_tet({i, n + i, n + j, n + k}));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Random 2D meshes

/// Jittered structured grid on [0, w] x [0, h], each cell split along a
/// random diagonal.  Jitter is below a quarter of the spacing so all
/// triangles stay CCW.
inline TriMesh2D random_grid_mesh(int w, int h, std::mt19937_64& rng, double jitter = 0.15) {
    std::uniform_real_distribution<double> u(-jitter, jitter);
    std::bernoulli_distribution coin(0.5);
    TriMesh2D m;
    for (int y = 0; y <= h; ++y) {
        for (int x = 0; x <= w; ++x) {
            const bool edge = x == 0 || y == 0 || x == w || y == h;
            m.nodes.push_back({x + (edge ? 0.0 : u(rng)), y + (edge ? 0.0 : u(rng))});
        }
    }
    auto id = [&](int x, int y) { return static_cast<NodeId>(y * (w + 1) + x); };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const NodeId a = id(x, y), b = id(x + 1, y), c = id(x + 1, y + 1), d = id(x, y + 1);
            if (coin(rng)) {
                m.triangles.push_back({a, b, c});
                m.triangles.push_back({a, c, d});
            } else {
                m.triangles.push_back({a, b, d});
                m.triangles.push_back({b, c, d});
            }
        }
    }
    return m;
}

/// Random ids: the same mesh with nodes relabelled by a permutation.
inline TriMesh2D relabel(const TriMesh2D& m, const std::vector<NodeId>& perm) {
    TriMesh2D r;
    r.nodes.resize(m.nodes.size());
    for (std::size_t v = 0; v < m.nodes.size(); ++v) r.nodes[perm[v]] = m.nodes[v];
    for (const auto& t : m.triangles) r.triangles.push_back({perm[t[0]], perm[t[1]], perm[t[2]]});
    return r;
}

inline std::vector<NodeId> random_permutation(std::size_t n, std::mt19937_64& rng) {
    std::vector<NodeId> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<NodeId>(i);
    std::shuffle(p.begin(), p.end(), rng);
    return p;
}

/// Next map by nearest node after moving every node by f.
template <class F>
NextNodeMap nearest_next(const TriMesh2D& lower, const TriMesh2D& upper, F&& f) {
    NextNodeMap nm;
    for (const auto& p : lower.nodes) {
        const Point2 q = f(p);
        double best = 1e300;
        NodeId arg = 0;
        for (std::size_t w = 0; w < upper.nodes.size(); ++w) {
            const double dx = upper.nodes[w].x - q.x, dy = upper.nodes[w].y - q.y;
            if (dx * dx + dy * dy < best) {
                best = dx * dx + dy * dy;
                arg = static_cast<NodeId>(w);
            }
        }
        nm.next.push_back(arg);
    }
    return nm;
}

// ---------------------------------------------------------------------------
// Random closed polyhedra with at most 8 nodes

/// Convex hull of points in general position by brute force over triples.
inline Polyhedron convex_hull(const std::vector<Point3>& pts) {
    const int n = static_cast<int>(pts.size());
    std::vector<TriIdx> tris;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = j + 1; k < n; ++k) {
                int pos = 0, neg = 0;
                for (int l = 0; l < n; ++l) {
                    if (l == i || l == j || l == k) continue;
                    const double d = det3(pts[i], pts[j], pts[k], pts[l]);
                    (d > 0 ? pos : neg)++;
                }
                if (pos == 0) tris.push_back({i, j, k});
                else if (neg == 0) tris.push_back({i, k, j});
            }
    return Polyhedron::from_global(tris, {}, pts);
}

inline std::vector<Point3> random_points(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Point3> p;
    for (int i = 0; i < n; ++i) p.push_back({u(rng), u(rng), u(rng)});
    return p;
}

/// Whether the surface is embedded: non-adjacent triangles do not touch,
/// edges do not pierce triangles.
inline bool embedded_surface(const Polyhedron& poly, const Tolerance& tol = {}) {
    const auto& P = poly.points;
    const auto& T = poly.triangles;
    std::set<Edge> edges;
    for (const auto& t : T)
        for (int k = 0; k < 3; ++k) edges.insert(make_edge(t[k], t[(k + 1) % 3]));
    for (const auto& [u, v] : edges) {
        for (const auto& t : T) {
            if (u == t[0] || u == t[1] || u == t[2] || v == t[0] || v == t[1] || v == t[2]) continue;
            if (segment_hits_triangle(P[u], P[v], P[t[0]], P[t[1]], P[t[2]], tol)) return false;
        }
    }
    return true;
}

/// Prism-like polyhedra: a lower polygon (triangle or quad), its copy
/// above twisted and jittered, random lateral diagonals.  Produces both
/// tetrahedralizable and Schonhardt-like indivisible shapes.
inline std::optional<Polyhedron> random_twisted_prism(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    const int k = coin(rng) ? 3 : 4;
    const double twist = 0.9 * u(rng);
    std::vector<Point3> pts;
    for (int i = 0; i < k; ++i) {
        const double a = 2.0 * std::numbers::pi * i / k + 0.25 * u(rng);
        const double r = 1.0 + 0.2 * u(rng);
        pts.push_back({r * std::cos(a), r * std::sin(a), 0.1 * u(rng)});
    }
    for (int i = 0; i < k; ++i) {
        const double a = 2.0 * std::numbers::pi * i / k + twist + 0.2 * u(rng);
        const double r = 1.0 + 0.2 * u(rng);
        pts.push_back({r * std::cos(a), r * std::sin(a), 1.0 + 0.1 * u(rng)});
    }
    std::vector<TriIdx> tris;
    // Caps: fan triangulations, lower reversed.
    const int diag = coin(rng) ? 0 : 1;
    auto cap = [&](int base, bool flip) {
        for (int i = 1; i + 1 < k; ++i) {
            NodeId a = base + (diag + 0) % k, b = base + (diag + i) % k, c = base + (diag + i + 1) % k;
            if (flip) std::swap(b, c);
            tris.push_back({a, b, c});
        }
    };
    cap(0, true);
    cap(k, false);
    for (int i = 0; i < k; ++i) {
        const int j = (i + 1) % k;
        if (coin(rng)) {
            tris.push_back({i, j, k + j});
            tris.push_back({i, k + j, k + i});
        } else {
            tris.push_back({i, j, k + i});
            tris.push_back({j, k + j, k + i});
        }
    }
    Polyhedron p = Polyhedron::from_global(tris, {}, pts);
    if (!p.closed() || !embedded_surface(p) || p.volume() <= 1e-6) return std::nullopt;
    return p;
}

/// Convex hull of 5..8 points with one vertex pushed toward the centroid,
/// kept only when the surface stays embedded and outward.
inline std::optional<Polyhedron> random_dented_hull(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> n(5, 8);
    auto pts = random_points(n(rng), rng);
    Polyhedron hull = convex_hull(pts);
    if (hull.size() < 5) return std::nullopt;
    std::uniform_int_distribution<int> pick(0, hull.size() - 1);
    std::uniform_real_distribution<double> depth(0.2, 1.2);
    Point3 c{};
    for (const auto& q : hull.points) c = c + (1.0 / hull.size()) * q;
    const int v = pick(rng);
    hull.points[v] = hull.points[v] + depth(rng) * (c - hull.points[v]);
    if (!embedded_surface(hull) || hull.volume() <= 1e-6) return std::nullopt;
    return hull;
}

// ---------------------------------------------------------------------------
// Brute-force tetrahedralization search

/// Exhaustive advancing-front search over tetrahedralizations whose edges
/// are surface edges or 2-hop pairs of the surface graph.  A tet grows from
/// the lowest open face into its empty side; it must stay inside the
/// polyhedron and must not overlap placed tets.  Complete for such
/// tetrahedralizations because every open face has exactly one tet on its
/// empty side in any solution.
class BruteForceTetrahedralizer {
  public:
    explicit BruteForceTetrahedralizer(const Polyhedron& p, const Tolerance& tol = {}) : poly_(p), tol_(tol) {
        const auto adj = p.adjacency();
        for (NodeId a = 0; a < p.size(); ++a) {
            for (NodeId b : adj[a]) {
                allowed_.insert(make_edge(a, b));
                for (NodeId c : adj[b]) {
                    if (c != a) allowed_.insert(make_edge(a, c));
                }
            }
        }
        for (const auto& t : p.triangles)
            for (int k = 0; k < 3; ++k) surface_edges_.insert(make_edge(t[k], t[(k + 1) % 3]));
        Point3 lo = p.points[0], hi = lo;
        for (const auto& q : p.points) {
            lo = {std::min(lo.x, q.x), std::min(lo.y, q.y), std::min(lo.t, q.t)};
            hi = {std::max(hi.x, q.x), std::max(hi.y, q.y), std::max(hi.t, q.t)};
        }
        eps_ = 1e-10 * norm(hi - lo);
        tol_ = tol.with_scale(norm(hi - lo));
    }

    std::optional<std::vector<TetIdx>> solve() {
        std::map<TriIdx, TriIdx> open; // sorted -> oriented, empty side negative
        for (const auto& t : poly_.triangles) open[sorted_tri(t)] = t;
        std::set<TriIdx> closed;
        std::vector<TetIdx> placed;
        if (search(open, closed, placed)) return placed;
        return std::nullopt;
    }

  private:
    bool edge_ok(NodeId a, NodeId b) const {
        const Edge e = make_edge(a, b);
        if (!allowed_.count(e)) return false;
        if (surface_edges_.count(e)) return true;
        return segment_inside_polyhedron(a, b, poly_.view(), tol_, false);
    }

    bool tet_ok(const TetIdx& t, const std::vector<TetIdx>& placed) const {
        const auto& P = poly_.points;
        for (int x = 0; x < 4; ++x)
            for (int y = x + 1; y < 4; ++y)
                if (!edge_ok(t[x], t[y])) return false;
        const std::array<Point3, 4> V{P[t[0]], P[t[1]], P[t[2]], P[t[3]]};
        for (NodeId v = 0; v < poly_.size(); ++v) {
            if (v == t[0] || v == t[1] || v == t[2] || v == t[3]) continue;
            if (point_in_tet(P[v], V, tol_)) return false;
        }
        for (int f = 0; f < 4; ++f) {
            const NodeId a = t[(f + 1) % 4], b = t[(f + 2) % 4], c = t[(f + 3) % 4];
            for (const auto& [u, v] : surface_edges_) {
                if (u == a || u == b || u == c || v == a || v == b || v == c) continue;
                if (segment_hits_triangle(P[u], P[v], P[a], P[b], P[c], tol_)) return false;
            }
        }
        for (const auto& q : placed) {
            const std::array<Point3, 4> W{P[q[0]], P[q[1]], P[q[2]], P[q[3]]};
            if (tets_properly_intersect(V, W, eps_)) return false;
        }
        return true;
    }

    bool search(std::map<TriIdx, TriIdx>& open, std::set<TriIdx>& closed, std::vector<TetIdx>& placed) {
        if (open.empty()) return true;
        const auto& P = poly_.points;
        const auto [key, face] = *open.begin();
        for (NodeId d = 0; d < poly_.size(); ++d) {
            if (d == face[0] || d == face[1] || d == face[2]) continue;
            if (orient3d(P[face[0]], P[face[1]], P[face[2]], P[d], tol_) >= 0) continue;
            const TetIdx tet{face[0], face[1], face[2], d};
            if (!tet_ok(tet, placed)) continue;
            // New faces, oriented with the tet on their positive side.
            std::vector<TriIdx> fresh;
            bool ok = true;
            for (const auto& f : std::array<TriIdx, 3>{{{face[0], face[1], d}, {face[1], face[2], d}, {face[2], face[0], d}}}) {
                TriIdx g = f;
                const NodeId other = f == TriIdx{face[0], face[1], d} ? face[2] : (f == TriIdx{face[1], face[2], d} ? face[0] : face[1]);
                if (orient3d(P[g[0]], P[g[1]], P[g[2]], P[other], tol_) < 0) std::swap(g[1], g[2]);
                const TriIdx s = sorted_tri(g);
                if (closed.count(s)) {
                    ok = false;
                    break;
                }
                fresh.push_back(g);
            }
            if (!ok) continue;
            // Apply.
            auto saved_open = open;
            auto saved_closed = closed;
            open.erase(key);
            closed.insert(key);
            for (const auto& g : fresh) {
                const TriIdx s = sorted_tri(g);
                if (auto it = open.find(s); it != open.end()) {
                    open.erase(it);
                    closed.insert(s);
                } else {
                    open[s] = g; // tet on the positive side, empty side negative
                }
            }
            placed.push_back(tet);
            if (search(open, closed, placed)) return true;
            placed.pop_back();
            open = std::move(saved_open);
            closed = std::move(saved_closed);
        }
        return false;
    }

    const Polyhedron& poly_;
    Tolerance tol_;
    double eps_ = 0.0;
    std::set<Edge> allowed_;
    std::set<Edge> surface_edges_;
};

} // namespace testsupport
