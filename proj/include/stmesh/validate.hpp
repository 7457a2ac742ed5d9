#pragma once

// Independent checks of a spacetime tetrahedral mesh against its input
// layers: no new nodes, input simplices present, proper face sharing,
// positive volumes, volume conservation and no overlapping tets.

#include <stmesh/geometry.hpp>
#include <stmesh/model.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace stmesh {

struct CheckResult {
    std::string name;
    bool passed = true;
    std::string message;
};

struct ValidationReport {
    std::vector<CheckResult> checks;
    double tet_volume = 0.0;
    double boundary_volume = 0.0;

    bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
    }
    const CheckResult& check(const std::string& name) const {
        for (const auto& c : checks) {
            if (c.name == name) return c;
        }
        throw Error("no check named " + name);
    }
    std::string summary() const {
        std::string s;
        for (const auto& c : checks) {
            if (!c.passed) s += c.name + ": " + c.message + "; ";
        }
        return s.empty() ? "all checks passed" : s;
    }
};

namespace detail {

inline bool sat_overlap(const std::array<Point3, 4>& A, const std::array<Point3, 4>& B, double eps) {
    std::array<Point3, 44> axes;
    std::size_t na = 0;
    auto add_faces = [&](const std::array<Point3, 4>& T) {
        for (int f = 0; f < 4; ++f) {
            axes[na++] = cross(T[(f + 2) % 4] - T[(f + 1) % 4], T[(f + 3) % 4] - T[(f + 1) % 4]);
        }
    };
    add_faces(A);
    add_faces(B);
    static constexpr int E[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    for (const auto& ea : E) {
        for (const auto& eb : E) {
            axes[na++] = cross(A[ea[1]] - A[ea[0]], B[eb[1]] - B[eb[0]]);
        }
    }
    for (const auto& ax : axes) {
        const double len = norm(ax);
        if (len == 0.0) continue;
        const Point3 n = (1.0 / len) * ax;
        double amin = dot(A[0], n), amax = amin, bmin = dot(B[0], n), bmax = bmin;
        for (int i = 1; i < 4; ++i) {
            amin = std::min(amin, dot(A[i], n));
            amax = std::max(amax, dot(A[i], n));
            bmin = std::min(bmin, dot(B[i], n));
            bmax = std::max(bmax, dot(B[i], n));
        }
        if (amax <= bmin + eps || bmax <= amin + eps) return false;
    }
    return true;
}

inline std::array<Point3, 4> tet_points(const TetMesh& m, const TetIdx& t) {
    return {m.nodes[t[0]], m.nodes[t[1]], m.nodes[t[2]], m.nodes[t[3]]};
}

inline double overlap_eps(const TetMesh& m) {
    if (m.nodes.empty()) return 0.0;
    Point3 lo = m.nodes[0], hi = m.nodes[0];
    for (const auto& q : m.nodes) {
        lo = {std::min(lo.x, q.x), std::min(lo.y, q.y), std::min(lo.t, q.t)};
        hi = {std::max(hi.x, q.x), std::max(hi.y, q.y), std::max(hi.t, q.t)};
    }
    return 1e-10 * norm(hi - lo);
}

} // namespace detail

/// Whether two tets share interior points (touching along faces, edges or
/// vertices does not count).
inline bool tets_properly_intersect(const std::array<Point3, 4>& a, const std::array<Point3, 4>& b, double eps) {
    return detail::sat_overlap(a, b, eps);
}

/// All-pairs reference for the hashed overlap check.
inline std::vector<std::pair<int, int>> overlapping_pairs_bruteforce(const TetMesh& m) {
    const double eps = detail::overlap_eps(m);
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < static_cast<int>(m.tets.size()); ++i) {
        for (int j = i + 1; j < static_cast<int>(m.tets.size()); ++j) {
            if (detail::sat_overlap(detail::tet_points(m, m.tets[i]), detail::tet_points(m, m.tets[j]), eps)) {
                out.push_back({i, j});
            }
        }
    }
    return out;
}

/// Overlapping tet pairs found through a uniform spatial hash.  The cell
/// extent along each axis is the median tet bounding-box extent on it.
inline std::vector<std::pair<int, int>> overlapping_pairs(const TetMesh& m) {
    const int n = static_cast<int>(m.tets.size());
    std::vector<std::pair<int, int>> out;
    if (n < 2) return out;
    std::vector<std::array<Point3, 2>> box(n);
    std::array<std::vector<double>, 3> ext;
    for (int i = 0; i < n; ++i) {
        const auto P = detail::tet_points(m, m.tets[i]);
        Point3 lo = P[0], hi = P[0];
        for (const auto& q : P) {
            lo = {std::min(lo.x, q.x), std::min(lo.y, q.y), std::min(lo.t, q.t)};
            hi = {std::max(hi.x, q.x), std::max(hi.y, q.y), std::max(hi.t, q.t)};
        }
        box[i] = {lo, hi};
        ext[0].push_back(hi.x - lo.x);
        ext[1].push_back(hi.y - lo.y);
        ext[2].push_back(hi.t - lo.t);
    }
    std::array<double, 3> cell{};
    for (int k = 0; k < 3; ++k) {
        std::nth_element(ext[k].begin(), ext[k].begin() + n / 2, ext[k].end());
        cell[k] = ext[k][n / 2] > 0.0 ? ext[k][n / 2] : 1.0;
    }
    auto key = [&](const Point3& p) {
        return std::array<long, 3>{static_cast<long>(std::floor(p.x / cell[0])),
                                   static_cast<long>(std::floor(p.y / cell[1])),
                                   static_cast<long>(std::floor(p.t / cell[2]))};
    };
    std::map<std::array<long, 3>, std::vector<int>> grid;
    for (int i = 0; i < n; ++i) {
        const auto a = key(box[i][0]), b = key(box[i][1]);
        for (long x = a[0]; x <= b[0]; ++x)
            for (long y = a[1]; y <= b[1]; ++y)
                for (long z = a[2]; z <= b[2]; ++z) grid[{x, y, z}].push_back(i);
    }
    const double eps = detail::overlap_eps(m);
    for (const auto& [c, ids] : grid) {
        for (std::size_t p = 0; p < ids.size(); ++p) {
            for (std::size_t q = p + 1; q < ids.size(); ++q) {
                const int i = ids[p], j = ids[q];
                // Test each pair only in the lowest cell both boxes cover.
                const auto ai = key(box[i][0]), aj = key(box[j][0]);
                const std::array<long, 3> first{std::max(ai[0], aj[0]), std::max(ai[1], aj[1]), std::max(ai[2], aj[2])};
                if (first != c) continue;
                const auto &bi = box[i], &bj = box[j];
                if (bi[1].x <= bj[0].x + eps || bj[1].x <= bi[0].x + eps || bi[1].y <= bj[0].y + eps ||
                    bj[1].y <= bi[0].y + eps || bi[1].t <= bj[0].t + eps || bj[1].t <= bi[0].t + eps) {
                    continue;
                }
                if (detail::sat_overlap(detail::tet_points(m, m.tets[i]), detail::tet_points(m, m.tets[j]), eps)) {
                    out.push_back({std::min(i, j), std::max(i, j)});
                }
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Runs checks (a)-(g) of a tet mesh against the layer sequence it was built from.
inline ValidationReport validate_tetmesh(const TetMesh& mesh, const LayerSequence& seq, const Tolerance& tol = {}) {
    ValidationReport r;
    const NodeId total = seq.total_nodes();
    const std::size_t nl = seq.layers.size();
    std::vector<int> layer_of(static_cast<std::size_t>(std::max<NodeId>(total, 0)));
    for (std::size_t i = 0; i < nl; ++i) {
        const NodeId o = seq.offset(i);
        for (NodeId v = 0; v < static_cast<NodeId>(seq.layers[i].nodes.size()); ++v) layer_of[o + v] = static_cast<int>(i);
    }

    // (a) no Steiner points: node table is exactly the embedded input nodes.
    CheckResult a{"a_node_count", true, ""};
    const auto expected = seq.points();
    if (static_cast<NodeId>(mesh.nodes.size()) != total) {
        a = {"a_node_count", false,
             "mesh has " + std::to_string(mesh.nodes.size()) + " nodes, input has " + std::to_string(total)};
    } else {
        for (NodeId v = 0; v < total; ++v) {
            if (!(mesh.nodes[v] == expected[v])) {
                a = {"a_node_count", false, "node " + std::to_string(v) + " moved"};
                break;
            }
        }
    }
    bool indices_ok = true;
    for (const auto& t : mesh.tets) {
        for (NodeId v : t) {
            if (v < 0 || v >= static_cast<NodeId>(mesh.nodes.size())) indices_ok = false;
        }
        if (indices_ok && a.passed) {
            int lo = layer_of[t[0]], hi = lo;
            for (NodeId v : t) {
                lo = std::min(lo, layer_of[v]);
                hi = std::max(hi, layer_of[v]);
            }
            if (hi - lo != 1) {
                a = {"a_node_count", false, "a tet does not span two consecutive layers"};
            }
        }
    }
    if (!indices_ok) {
        a = {"a_node_count", false, "tet references a missing node"};
        r.checks.push_back(a);
        for (const char* name : {"b_input_triangles", "c_temporal_edges", "d_face_sharing", "e_positive_volume",
                                 "f_volume_conservation", "g_no_overlap"}) {
            r.checks.push_back({name, false, "skipped: invalid node indices"});
        }
        return r;
    }
    r.checks.push_back(a);

    std::map<TriIdx, std::vector<int>> faces; // sorted face -> tets
    std::set<Edge> edges;
    for (int i = 0; i < static_cast<int>(mesh.tets.size()); ++i) {
        const auto& t = mesh.tets[i];
        for (int f = 0; f < 4; ++f) faces[sorted_tri({t[(f + 1) % 4], t[(f + 2) % 4], t[(f + 3) % 4]})].push_back(i);
        for (int x = 0; x < 4; ++x)
            for (int y = x + 1; y < 4; ++y) edges.insert(make_edge(t[x], t[y]));
    }

    // (b) input triangles.
    CheckResult b{"b_input_triangles", true, ""};
    std::size_t missing = 0;
    for (std::size_t i = 0; i < nl; ++i) {
        const NodeId o = seq.offset(i);
        for (const auto& t : seq.layers[i].triangles) {
            if (!faces.count(sorted_tri({o + t[0], o + t[1], o + t[2]}))) ++missing;
        }
    }
    if (missing) b = {"b_input_triangles", false, std::to_string(missing) + " input triangles missing"};
    r.checks.push_back(b);

    // (c) temporal edges.
    CheckResult c{"c_temporal_edges", true, ""};
    missing = 0;
    for (std::size_t i = 0; i + 1 < nl; ++i) {
        const NodeId o = seq.offset(i), o2 = seq.offset(i + 1);
        for (NodeId v = 0; v < static_cast<NodeId>(seq.nexts[i].next.size()); ++v) {
            if (!edges.count(make_edge(o + v, o2 + seq.nexts[i].next[v]))) ++missing;
        }
    }
    if (missing) c = {"c_temporal_edges", false, std::to_string(missing) + " temporal edges missing"};
    r.checks.push_back(c);

    // (d) face sharing.  Faces used once must be caps of the first or last
    // layer or lie on the lateral domain boundary.
    std::vector<std::set<Edge>> bedges(nl);
    std::vector<std::set<NodeId>> bnodes(nl);
    std::vector<std::set<TriIdx>> layer_tris(nl);
    for (std::size_t i = 0; i < nl; ++i) {
        const NodeId o = seq.offset(i);
        for (const auto& [u, v] : seq.layers[i].boundary_edges()) {
            bedges[i].insert({o + u, o + v});
            bnodes[i].insert(o + u);
            bnodes[i].insert(o + v);
        }
        for (const auto& t : seq.layers[i].triangles) layer_tris[i].insert(sorted_tri({o + t[0], o + t[1], o + t[2]}));
    }
    CheckResult d{"d_face_sharing", true, ""};
    std::size_t over = 0, stray = 0, middle_once = 0, band_bad = 0;
    std::map<Edge, int> band_use;
    std::vector<std::pair<TriIdx, int>> boundary_faces; // face, owning tet
    for (const auto& [f, ts] : faces) {
        if (ts.size() > 2) {
            ++over;
            continue;
        }
        if (ts.size() == 2) {
            continue;
        }
        const int l0 = layer_of[f[0]];
        const bool flat = layer_of[f[1]] == l0 && layer_of[f[2]] == l0;
        if (flat) {
            if (!layer_tris[l0].count(f)) {
                ++stray;
            } else if (l0 != 0 && l0 != static_cast<int>(nl) - 1) {
                ++middle_once;
            } else {
                boundary_faces.push_back({f, ts[0]});
            }
            continue;
        }
        bool band = true;
        for (int k = 0; k < 3 && band; ++k) {
            if (!bnodes[layer_of[f[k]]].count(f[k])) band = false;
        }
        for (int k = 0; k < 3 && band; ++k) {
            const NodeId u = f[k], v = f[(k + 1) % 3];
            if (layer_of[u] == layer_of[v]) {
                if (!bedges[layer_of[u]].count(make_edge(u, v))) band = false;
            }
        }
        if (!band) {
            ++stray;
            continue;
        }
        for (int k = 0; k < 3; ++k) {
            const NodeId u = f[k], v = f[(k + 1) % 3];
            if (layer_of[u] == layer_of[v]) ++band_use[make_edge(u, v)];
        }
        boundary_faces.push_back({f, ts[0]});
    }
    for (std::size_t i = 0; i < nl; ++i) {
        const int want = (nl == 1) ? 0 : ((i == 0 || i + 1 == nl) ? 1 : 2);
        for (const auto& e : bedges[i]) {
            const auto it = band_use.find(e);
            if ((it == band_use.end() ? 0 : it->second) != want) ++band_bad;
        }
    }
    if (over || stray || middle_once || band_bad) {
        d = {"d_face_sharing", false,
             std::to_string(over) + " faces in >2 tets, " + std::to_string(stray) + " unmatched interior faces, " +
                 std::to_string(middle_once) + " middle-layer triangles used once, " + std::to_string(band_bad) +
                 " boundary edges with wrong lateral coverage"};
    }
    r.checks.push_back(d);

    // (e) positive volumes.
    CheckResult e{"e_positive_volume", true, ""};
    std::size_t bad = 0;
    const auto vtol = tol.with_scale(std::max(1e-300, detail::overlap_eps(mesh) * 1e10));
    for (const auto& t : mesh.tets) {
        if (orient3d(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]], mesh.nodes[t[3]], vtol) <= 0) ++bad;
        r.tet_volume += tet_volume(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]], mesh.nodes[t[3]]);
    }
    if (bad) e = {"e_positive_volume", false, std::to_string(bad) + " tets with non-positive volume"};
    r.checks.push_back(e);

    // (f) volume of the boundary surface by the divergence theorem; each
    // boundary face is oriented away from the tet that owns it.
    const Point3 o = mesh.nodes.empty() ? Point3{} : mesh.nodes[0];
    double bv = 0.0;
    for (const auto& [f, ti] : boundary_faces) {
        const auto& t = mesh.tets[ti];
        NodeId apex = t[0];
        for (NodeId v : t) {
            if (v != f[0] && v != f[1] && v != f[2]) apex = v;
        }
        const Point3 &A = mesh.nodes[f[0]], &B = mesh.nodes[f[1]], &C = mesh.nodes[f[2]];
        double s = dot(A - o, cross(B - o, C - o));
        if (det3(A, B, C, mesh.nodes[apex]) > 0.0) s = -s;
        bv += s;
    }
    r.boundary_volume = bv / 6.0;
    CheckResult fchk{"f_volume_conservation", true, ""};
    const double scale = std::max(std::abs(r.tet_volume), std::abs(r.boundary_volume));
    if (!(std::abs(r.tet_volume - r.boundary_volume) <= 1e-9 * scale) || !d.passed) {
        fchk = {"f_volume_conservation", false,
                "tet volume " + std::to_string(r.tet_volume) + " vs boundary volume " + std::to_string(r.boundary_volume) +
                    (d.passed ? "" : " (boundary surface not closed)")};
    }
    r.checks.push_back(fchk);

    // (g) no proper overlaps.
    CheckResult g{"g_no_overlap", true, ""};
    const auto pairs = overlapping_pairs(mesh);
    if (!pairs.empty()) {
        g = {"g_no_overlap", false,
             std::to_string(pairs.size()) + " overlapping tet pairs, first " + std::to_string(pairs[0].first) + "/" +
                 std::to_string(pairs[0].second)};
    }
    r.checks.push_back(g);
    return r;
}

inline ValidationReport validate_tetmesh(const TetMesh& mesh, const SpacetimeLayerPair& pair, const Tolerance& tol = {}) {
    return validate_tetmesh(mesh, LayerSequence::from_pair(pair), tol);
}

/// Same checks for a tetrahedralization of a single closed polyhedron (local
/// ids).  Input triangles are the surface triangles; there are no temporal
/// edges, so check (c) always passes.
inline ValidationReport validate_polyhedron_tets(const Polyhedron& poly, const std::vector<TetIdx>& tets,
                                                 const Tolerance& tol = {}) {
    ValidationReport r;
    TetMesh mesh{poly.points, tets, {}};
    bool indices_ok = true;
    for (const auto& t : tets) {
        for (NodeId v : t) {
            if (v < 0 || v >= poly.size()) indices_ok = false;
        }
    }
    r.checks.push_back({"a_node_count", indices_ok, indices_ok ? "" : "tet references a node outside the polyhedron"});
    if (!indices_ok) return r;

    std::map<TriIdx, std::vector<int>> faces;
    for (int i = 0; i < static_cast<int>(tets.size()); ++i) {
        const auto& t = tets[i];
        for (int f = 0; f < 4; ++f) faces[sorted_tri({t[(f + 1) % 4], t[(f + 2) % 4], t[(f + 3) % 4]})].push_back(i);
    }
    std::set<TriIdx> surface;
    for (const auto& t : poly.triangles) surface.insert(sorted_tri(t));
    std::size_t missing = 0;
    for (const auto& t : surface) {
        if (!faces.count(t)) ++missing;
    }
    r.checks.push_back({"b_input_triangles", missing == 0, missing ? std::to_string(missing) + " surface triangles missing" : ""});
    r.checks.push_back({"c_temporal_edges", true, ""});

    std::size_t bad_faces = 0;
    for (const auto& [f, ts] : faces) {
        const std::size_t want = surface.count(f) ? 1 : 2;
        if (ts.size() != want) ++bad_faces;
    }
    r.checks.push_back({"d_face_sharing", bad_faces == 0, bad_faces ? std::to_string(bad_faces) + " faces with wrong usage" : ""});

    std::size_t bad = 0;
    const auto vtol = tol.with_scale(std::max(1e-300, detail::overlap_eps(mesh) * 1e10));
    for (const auto& t : tets) {
        const auto& P = poly.points;
        if (orient3d(P[t[0]], P[t[1]], P[t[2]], P[t[3]], vtol) <= 0) ++bad;
        r.tet_volume += tet_volume(P[t[0]], P[t[1]], P[t[2]], P[t[3]]);
    }
    r.checks.push_back({"e_positive_volume", bad == 0, bad ? std::to_string(bad) + " tets with non-positive volume" : ""});

    r.boundary_volume = poly.volume();
    const double scale = std::max(std::abs(r.tet_volume), std::abs(r.boundary_volume));
    const bool vol_ok = std::abs(r.tet_volume - r.boundary_volume) <= 1e-9 * scale && bad_faces == 0;
    r.checks.push_back({"f_volume_conservation", vol_ok,
                        vol_ok ? "" : "tet volume " + std::to_string(r.tet_volume) + " vs boundary volume " +
                                          std::to_string(r.boundary_volume)});

    const auto pairs = overlapping_pairs(mesh);
    r.checks.push_back({"g_no_overlap", pairs.empty(), pairs.empty() ? "" : std::to_string(pairs.size()) + " overlapping tet pairs"});
    return r;
}

} // namespace stmesh
