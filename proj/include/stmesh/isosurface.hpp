#pragma once

// Marching tetrahedra over a spacetime tet mesh.

#include <stmesh/geometry.hpp>
#include <stmesh/mesher.hpp>
#include <stmesh/model.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <vector>

namespace stmesh {

struct IsoSurface {
    std::vector<Point3> vertices;
    std::vector<Edge> vertex_edges; // mesh edge each vertex lies on
    std::vector<TriIdx> triangles;
    std::size_t soup_triangles = 0;
};

namespace detail {

// Vertices are edge keys until welding.
using IsoTri = std::array<Edge, 3>;

inline void tet_iso(const TetIdx& t, const std::vector<double>& v, double iso, const std::vector<Point3>& pts,
                    std::vector<IsoTri>& out) {
    std::array<int, 4> above{}, below{};
    int na = 0, nb = 0;
    for (int k = 0; k < 4; ++k) {
        if (v[t[k]] > iso) above[na++] = k; else below[nb++] = k;
    }
    if (na == 0 || nb == 0) return;
    auto e = [&](int a, int b) { return make_edge(t[a], t[b]); };
    std::vector<IsoTri> tris;
    if (na == 1 || nb == 1) {
        const bool single_above = na == 1;
        const int s = single_above ? above[0] : below[0];
        const auto& others = single_above ? below : above;
        tris.push_back({e(s, others[0]), e(s, others[1]), e(s, others[2])});
    } else {
        const int a0 = above[0], a1 = above[1], b0 = below[0], b1 = below[1];
        tris.push_back({e(a0, b0), e(a0, b1), e(a1, b1)});
        tris.push_back({e(a0, b0), e(a1, b1), e(a1, b0)});
    }
    // Orient so normals point toward increasing values.
    Point3 ca{}, cb{};
    for (int k = 0; k < na; ++k) ca = ca + (1.0 / na) * pts[t[above[k]]];
    for (int k = 0; k < nb; ++k) cb = cb + (1.0 / nb) * pts[t[below[k]]];
    const Point3 up = ca - cb;
    auto at = [&](const Edge& ed) {
        const double s = (iso - v[ed.first]) / (v[ed.second] - v[ed.first]);
        return pts[ed.first] + s * (pts[ed.second] - pts[ed.first]);
    };
    for (auto& tr : tris) {
        const Point3 p = at(tr[0]), q = at(tr[1]), r = at(tr[2]);
        if (dot(cross(q - p, r - p), up) < 0.0) std::swap(tr[1], tr[2]);
        out.push_back(tr);
    }
}

} // namespace detail

/// Extracts the isosurface of the PL field.  Node values equal to the
/// isovalue are nudged up by 1e-12 * peak first.  Crossing vertices are
/// welded on their mesh edge, so shared edges produce shared vertices.
inline IsoSurface marching_tets(const TetMesh& mesh, std::vector<double> values, double iso, int threads = 1) {
    double peak = 0.0;
    for (double x : values) peak = std::max(peak, std::abs(x));
    const double nudge = 1e-12 * (peak > 0.0 ? peak : 1.0);
    for (double& x : values) {
        if (x == iso) x += nudge;
    }
    std::vector<std::vector<detail::IsoTri>> per(mesh.tets.size());
    parallel_for(mesh.tets.size(), threads,
                 [&](std::size_t i) { detail::tet_iso(mesh.tets[i], values, iso, mesh.nodes, per[i]); });
    IsoSurface s;
    std::map<Edge, NodeId> index;
    for (const auto& tris : per) {
        for (const auto& tr : tris) {
            TriIdx out{};
            for (int k = 0; k < 3; ++k) {
                auto [it, fresh] = index.emplace(tr[k], static_cast<NodeId>(s.vertices.size()));
                if (fresh) {
                    const auto& [a, b] = tr[k];
                    const double u = (iso - values[a]) / (values[b] - values[a]);
                    s.vertices.push_back(mesh.nodes[a] + u * (mesh.nodes[b] - mesh.nodes[a]));
                    s.vertex_edges.push_back(tr[k]);
                }
                out[k] = it->second;
            }
            s.triangles.push_back(out);
            ++s.soup_triangles;
        }
    }
    return s;
}

/// Surface edges used by exactly one triangle.
inline std::vector<Edge> open_edges(const IsoSurface& s) {
    std::map<Edge, int> count;
    for (const auto& t : s.triangles) {
        for (int k = 0; k < 3; ++k) ++count[make_edge(t[k], t[(k + 1) % 3])];
    }
    std::vector<Edge> out;
    for (const auto& [e, c] : count) {
        if (c == 1) out.push_back(e);
    }
    return out;
}

/// Open edges that do not lie on a boundary face of the tet mesh.  Zero for
/// a surface that is closed wherever it stays inside the domain.
inline std::size_t interior_open_edges(const TetMesh& mesh, const IsoSurface& s) {
    std::map<TriIdx, int> faces;
    for (const auto& t : mesh.tets) {
        for (int f = 0; f < 4; ++f) ++faces[sorted_tri({t[(f + 1) % 4], t[(f + 2) % 4], t[(f + 3) % 4]})];
    }
    std::size_t n = 0;
    for (const auto& [a, b] : open_edges(s)) {
        std::vector<NodeId> nodes{s.vertex_edges[a].first, s.vertex_edges[a].second, s.vertex_edges[b].first,
                                  s.vertex_edges[b].second};
        std::sort(nodes.begin(), nodes.end());
        nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
        if (nodes.size() != 3) {
            ++n;
            continue;
        }
        const auto it = faces.find({nodes[0], nodes[1], nodes[2]});
        if (it == faces.end() || it->second != 1) ++n;
    }
    return n;
}

} // namespace stmesh
