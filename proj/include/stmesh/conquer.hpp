#pragma once

// Conquer stage: triangulates a closed polyhedron by repeatedly removing a
// surface node together with the cone over a triangulation of its link
// cycle, backtracking over pivot and link-triangulation choices.

#include <stmesh/errors.hpp>
#include <stmesh/geometry.hpp>
#include <stmesh/model.hpp>

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace stmesh {

inline int estimate_tree_depth(int n_nodes) { return 2 * (n_nodes - 3) + 1; }

/// Current surface during elimination (local node ids, outward oriented).
using Surface = std::vector<TriIdx>;

namespace detail {

inline std::map<NodeId, std::set<NodeId>> surface_adjacency(const Surface& s) {
    std::map<NodeId, std::set<NodeId>> adj;
    for (const auto& t : s) {
        for (int i = 0; i < 3; ++i) {
            adj[t[i]].insert(t[(i + 1) % 3]);
            adj[t[(i + 1) % 3]].insert(t[i]);
        }
    }
    return adj;
}

// Neighbors of p in cyclic order, or nullopt if the link is not one cycle.
inline std::optional<std::vector<NodeId>> link_cycle(const Surface& s, NodeId p) {
    std::map<NodeId, NodeId> succ;
    for (const auto& t : s) {
        for (int i = 0; i < 3; ++i) {
            if (t[i] == p) {
                if (!succ.emplace(t[(i + 1) % 3], t[(i + 2) % 3]).second) return std::nullopt;
            }
        }
    }
    if (succ.size() < 3) return std::nullopt;
    std::vector<NodeId> cyc;
    NodeId v = succ.begin()->first;
    const NodeId start = v;
    do {
        cyc.push_back(v);
        auto it = succ.find(v);
        if (it == succ.end()) return std::nullopt;
        v = it->second;
        if (cyc.size() > succ.size()) return std::nullopt;
    } while (v != start);
    if (cyc.size() != succ.size()) return std::nullopt;
    // Start at the smallest id for determinism.
    std::rotate(cyc.begin(), std::min_element(cyc.begin(), cyc.end()), cyc.end());
    return cyc;
}

inline std::vector<Edge> diagonals_of(const std::vector<TriIdx>& tris, const std::vector<NodeId>& cyc) {
    std::set<Edge> cycle_edges;
    for (std::size_t i = 0; i < cyc.size(); ++i) cycle_edges.insert(make_edge(cyc[i], cyc[(i + 1) % cyc.size()]));
    std::set<Edge> d;
    for (const auto& t : tris) {
        for (int k = 0; k < 3; ++k) {
            const Edge e = make_edge(t[k], t[(k + 1) % 3]);
            if (!cycle_edges.count(e)) d.insert(e);
        }
    }
    return {d.begin(), d.end()};
}

// Replaces the fan at p with new triangles, cancelling opposite duplicates.
// Returns nullopt if a same-orientation duplicate appears.
inline std::optional<Surface> replace_fan(const Surface& s, NodeId p, const std::vector<TriIdx>& add) {
    std::map<TriIdx, int> count; // canonical rotation -> multiplicity
    for (const auto& t : s) {
        if (t[0] == p || t[1] == p || t[2] == p) continue;
        ++count[canonical_rotation(t)];
    }
    for (const auto& t : add) {
        const TriIdx c = canonical_rotation(t);
        const TriIdx opp = canonical_rotation({t[0], t[2], t[1]});
        if (count.count(c)) return std::nullopt;
        if (auto it = count.find(opp); it != count.end()) {
            count.erase(it);
        } else {
            count[c] = 1;
        }
    }
    Surface out;
    for (const auto& [t, n] : count) out.push_back(t);
    return out;
}

// Every edge in exactly two triangles with opposite directions and every
// node link a single cycle.
inline bool manifold(const Surface& s) {
    std::set<Edge> directed;
    for (const auto& t : s) {
        for (int k = 0; k < 3; ++k) {
            if (!directed.insert({t[k], t[(k + 1) % 3]}).second) return false;
        }
    }
    for (const auto& [a, b] : directed) {
        if (!directed.count({b, a})) return false;
    }
    std::set<NodeId> nodes;
    for (const auto& t : s) nodes.insert(t.begin(), t.end());
    for (NodeId v : nodes) {
        if (!link_cycle(s, v)) return false;
    }
    return true;
}

} // namespace detail

/// One candidate elimination of a pivot.
struct Elimination {
    std::vector<TetIdx> tets; // pivot first, then a new surface triangle
    std::vector<Edge> diagonals;
    Surface surface;
};

/// Static context shared by one elimination search.
struct ConquerContext {
    std::vector<Point3> points;             // local coordinates
    std::set<Edge> two_hop;                 // allowed edges of the original surface graph
    std::vector<Edge> required;             // edges every solution must contain
    Tolerance tol;
};

inline ConquerContext make_context(const Polyhedron& poly, const Tolerance& tol,
                                   const std::vector<Edge>& required_edges = {}) {
    ConquerContext c;
    c.points = poly.points;
    c.tol = tol;
    const auto adj = poly.adjacency();
    for (NodeId u = 0; u < static_cast<NodeId>(adj.size()); ++u) {
        for (NodeId v : adj[u]) {
            c.two_hop.insert(make_edge(u, v));
            for (NodeId w : adj[v]) {
                if (w != u) c.two_hop.insert(make_edge(u, w));
            }
        }
    }
    for (const auto& [a, b] : required_edges) c.required.push_back(make_edge(a, b));
    std::sort(c.required.begin(), c.required.end());
    c.required.erase(std::unique(c.required.begin(), c.required.end()), c.required.end());
    return c;
}

/// Nodes of minimum surface degree, ascending.
inline std::vector<NodeId> choose_pivots(const Surface& s) {
    const auto adj = detail::surface_adjacency(s);
    std::size_t best = SIZE_MAX;
    for (const auto& [v, n] : adj) best = std::min(best, n.size());
    std::vector<NodeId> out;
    for (const auto& [v, n] : adj) {
        if (n.size() == best) out.push_back(v);
    }
    return out;
}

inline std::vector<NodeId> choose_pivots(const Polyhedron& poly) { return choose_pivots(poly.triangles); }

/// Search order: the minimum-degree pivots first, then every other node by
/// ascending (degree, id).  Restricting to minimum degree alone misses
/// tetrahedralizations that need a higher-degree node eliminated first.
inline std::vector<NodeId> pivot_order(const Surface& s) {
    auto out = choose_pivots(s);
    const auto adj = detail::surface_adjacency(s);
    std::vector<std::pair<std::size_t, NodeId>> rest;
    for (const auto& [v, n] : adj) {
        if (std::find(out.begin(), out.end(), v) == out.end()) rest.push_back({n.size(), v});
    }
    std::sort(rest.begin(), rest.end());
    for (const auto& [d, v] : rest) out.push_back(v);
    return out;
}

/// Feasible eliminations of a pivot, ordered by their diagonal lists.
inline std::vector<Elimination> enumerate_eliminations(const Surface& s, NodeId p, const ConquerContext& ctx) {
    const auto cyc = detail::link_cycle(s, p);
    if (!cyc) return {};
    const auto adj = detail::surface_adjacency(s);
    const auto& P = ctx.points;
    const auto& tol = ctx.tol;
    const SurfaceView view{P, s};
    const auto& c = *cyc;
    const int d = static_cast<int>(c.size());

    std::set<Edge> surface_edges;
    for (const auto& t : s) {
        for (int k = 0; k < 3; ++k) surface_edges.insert(make_edge(t[k], t[(k + 1) % 3]));
    }
    std::vector<NodeId> active;
    for (const auto& [v, n] : adj) active.push_back(v);

    // Chord and cone-tet feasibility, each decided once.
    std::vector<signed char> chord(d * d, -1);
    auto chord_ok = [&](int i, int j) {
        if (j == i + 1 || (i == 0 && j == d - 1)) return true;
        auto& m = chord[i * d + j];
        if (m < 0) {
            const Edge e = make_edge(c[i], c[j]);
            m = ctx.two_hop.count(e) &&
                (surface_edges.count(e) || segment_inside_polyhedron(e.first, e.second, view, tol, false));
        }
        return m == 1;
    };
    std::map<std::array<int, 3>, bool> cone;
    auto cone_ok = [&](int i, int j, int k) {
        auto [it, fresh] = cone.try_emplace({i, j, k}, false);
        if (!fresh) return it->second;
        const NodeId a = c[i], b = c[j], q = c[k];
        // Tets lie on the inner side of the fan.
        if (orient3d(P[a], P[b], P[q], P[p], tol) <= 0) return false;
        const TetIdx t{p, a, b, q};
        const std::array<Point3, 4> V{P[t[0]], P[t[1]], P[t[2]], P[t[3]]};
        // No other node inside the tet, no surface edge through a tet face.
        for (NodeId v : active) {
            if (v == t[0] || v == t[1] || v == t[2] || v == t[3]) continue;
            if (point_in_tet(P[v], V, tol)) return false;
        }
        for (int f = 0; f < 4; ++f) {
            const NodeId x = t[(f + 1) % 4], y = t[(f + 2) % 4], z = t[(f + 3) % 4];
            for (const auto& [u, v] : surface_edges) {
                if (u == x || u == y || u == z || v == x || v == y || v == z) continue;
                if (segment_hits_triangle(P[u], P[v], P[x], P[y], P[z], tol)) return false;
            }
        }
        it->second = true;
        return true;
    };
    // Triangulations of the sub-polygon lo..hi using feasible pieces only.
    std::map<std::pair<int, int>, std::vector<std::vector<TriIdx>>> memo;
    std::function<const std::vector<std::vector<TriIdx>>&(int, int)> sub = [&](int lo, int hi)
        -> const std::vector<std::vector<TriIdx>>& {
        if (auto it = memo.find({lo, hi}); it != memo.end()) return it->second;
        std::vector<std::vector<TriIdx>> out;
        if (hi - lo < 2) {
            out.push_back({});
        } else {
            // Edge (lo, hi) lies in exactly one triangle (lo, k, hi).
            for (int k = lo + 1; k < hi; ++k) {
                if (!chord_ok(lo, k) || !chord_ok(k, hi) || !cone_ok(lo, k, hi)) continue;
                const auto& left = sub(lo, k);
                const auto& right = sub(k, hi);
                for (const auto& a : left) {
                    for (const auto& b : right) {
                        std::vector<TriIdx> t = a;
                        t.insert(t.end(), b.begin(), b.end());
                        t.push_back({c[lo], c[k], c[hi]});
                        out.push_back(std::move(t));
                    }
                }
            }
        }
        return memo.emplace(std::pair{lo, hi}, std::move(out)).first->second;
    };
    const auto tris = sub(0, d - 1);

    std::vector<Elimination> out;
    for (const auto& T : tris) {
        Elimination e;
        e.diagonals = detail::diagonals_of(T, c);
        bool ok = true;
        for (const auto& t : T) e.tets.push_back({p, t[0], t[1], t[2]});
        // Tets sharing a diagonal face must not fold over each other.
        for (std::size_t i = 0; ok && i < T.size(); ++i) {
            for (std::size_t j = i + 1; ok && j < T.size(); ++j) {
                std::vector<NodeId> shared, apex;
                for (NodeId a : T[i]) {
                    if (std::find(T[j].begin(), T[j].end(), a) != T[j].end()) shared.push_back(a);
                }
                if (shared.size() != 2) continue;
                for (NodeId a : T[i]) if (a != shared[0] && a != shared[1]) apex.push_back(a);
                for (NodeId a : T[j]) if (a != shared[0] && a != shared[1]) apex.push_back(a);
                const auto side = opposite_sides(P[apex[0]], P[apex[1]], {P[p], P[shared[0]], P[shared[1]]}, tol);
                if (side != Side::Opposite) ok = false;
            }
        }
        if (!ok) continue;
        auto next = detail::replace_fan(s, p, T);
        if (!next || !detail::manifold(*next)) continue;
        e.surface = std::move(*next);
        out.push_back(std::move(e));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Elimination& a, const Elimination& b) { return a.diagonals < b.diagonals; });
    return out;
}

struct ConquerOptions {
    long budget = 10000;
    std::vector<std::string>* trace = nullptr;
};

/// Tetrahedralizes a closed polyhedron without new nodes.  Returned tets use
/// local ids and are positively oriented.  Throws Indivisible when the search
/// exhausts, BudgetExhausted when it runs out of visits.
inline std::vector<TetIdx> node_elimination(const Polyhedron& poly, const Tolerance& tol,
                                            const ConquerOptions& opt = {},
                                            const std::vector<Edge>& required_edges = {}) {
    require_closed(poly.view());
    if (poly.size() < 4) throw Indivisible();
    const ConquerContext ctx = make_context(poly, tol, required_edges);
    long visits = 0;
    std::vector<TetIdx> tets;
    auto log = [&](const std::string& m) {
        if (opt.trace) opt.trace->push_back(m);
    };
    // A required edge is realized once it has been a surface edge: every
    // surface edge ends up in some tet.  It is lost once an endpoint leaves
    // the surface before that.
    const auto& req = ctx.required;
    auto edges_of = [](const Surface& s) {
        std::set<Edge> out;
        for (const auto& t : s) {
            for (int k = 0; k < 3; ++k) out.insert(make_edge(t[k], t[(k + 1) % 3]));
        }
        return out;
    };
    std::vector<char> realized(req.size(), 0);
    {
        const auto e0 = edges_of(poly.triangles);
        for (std::size_t i = 0; i < req.size(); ++i) realized[i] = e0.count(req[i]) > 0;
    }
    // Returns false when the step loses a required edge.
    auto advance = [&](const Elimination& e) {
        const auto es = edges_of(e.surface);
        std::set<NodeId> alive;
        for (const auto& t : e.surface) alive.insert(t.begin(), t.end());
        for (std::size_t i = 0; i < req.size(); ++i) {
            if (realized[i]) continue;
            bool hit = es.count(req[i]) > 0;
            for (const auto& t : e.tets) {
                const bool a = std::find(t.begin(), t.end(), req[i].first) != t.end();
                const bool b = std::find(t.begin(), t.end(), req[i].second) != t.end();
                hit = hit || (a && b);
            }
            if (hit) {
                realized[i] = 1;
            } else if (!alive.count(req[i].first) || !alive.count(req[i].second)) {
                return false;
            }
        }
        return true;
    };
    // Remaining surfaces already shown indivisible, as sorted triangle sets
    // plus the realized flags.
    std::set<std::pair<std::vector<TriIdx>, std::vector<char>>> dead;
    auto key = [&](const Surface& s) {
        std::vector<TriIdx> k;
        for (const auto& t : s) k.push_back(sorted_tri(t));
        std::sort(k.begin(), k.end());
        return std::pair{std::move(k), realized};
    };
    std::function<bool(const Surface&)> solve = [&](const Surface& s) -> bool {
        if (s.empty()) return true;
        auto k = key(s);
        if (dead.count(k)) return false;
        if (++visits > opt.budget) throw BudgetExhausted(visits - 1);
        for (NodeId p : pivot_order(s)) {
            // Pivot choices are tree nodes too.
            if (++visits > opt.budget) throw BudgetExhausted(visits - 1);
            const auto elims = enumerate_eliminations(s, p, ctx);
            log("pivot " + std::to_string(poly.ids[p]) + " options " + std::to_string(elims.size()));
            for (const auto& e : elims) {
                std::string d;
                for (const auto& [a, b] : e.diagonals) d += " " + std::to_string(poly.ids[a]) + "-" + std::to_string(poly.ids[b]);
                log("eliminate " + std::to_string(poly.ids[p]) + (d.empty() ? "" : " diagonals" + d));
                const auto saved = realized;
                if (!advance(e)) {
                    realized = saved;
                    log("drops a required edge");
                    continue;
                }
                const std::size_t mark = tets.size();
                tets.insert(tets.end(), e.tets.begin(), e.tets.end());
                if (solve(e.surface)) return true;
                tets.resize(mark);
                realized = saved;
                log("backtrack " + std::to_string(poly.ids[p]));
            }
        }
        dead.insert(std::move(k));
        return false;
    };
    if (!solve(poly.triangles)) {
        log("indivisible");
        throw Indivisible();
    }
    for (auto& t : tets) t = orient_positive(t, poly.points);
    return tets;
}

} // namespace stmesh
