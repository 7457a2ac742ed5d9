#pragma once

// Divide-and-conquer spacetime mesher.

#include <stmesh/conquer.hpp>
#include <stmesh/decompose.hpp>
#include <stmesh/errors.hpp>
#include <stmesh/lateral.hpp>
#include <stmesh/model.hpp>
#include <stmesh/validate.hpp>

#include <algorithm>
#include <atomic>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace stmesh {

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

struct MesherConfig {
    Tolerance tol;
    int threads = 1;
    long budget = 10000;
    int max_inner = 0;
    std::size_t scheme_cap = 4096;
    bool validate = true;
    std::vector<std::string>* trace = nullptr; // conquer search log
};

struct MeshStats {
    std::size_t partitions = 0;
    std::size_t prisms = 0;
    std::size_t quasi_ill_posed = 0;
    std::size_t retried = 0;
    Decomposition decomposition;
};

namespace detail {

// Prism view of a partition: one triangle each side, three quads, and the
// next map sending the lower triangle onto the upper one.
inline std::optional<Prism> as_prism(const Partition25D& p, const Decomposition& d, const SpacetimeLayerPair& pair) {
    if (p.lower_tris.size() != 1 || p.upper_tris.size() != 1 || p.faces.size() != 3) return std::nullopt;
    for (int f : p.faces) {
        if (d.faces[f].m() != 1 || d.faces[f].n() != 1) return std::nullopt;
    }
    auto a = pair.lower.triangles[p.lower_tris[0]];
    std::sort(a.begin(), a.end());
    Prism pr{{a[0], a[1], a[2]}, {pair.next_id(a[0]), pair.next_id(a[1]), pair.next_id(a[2])}};
    std::array<NodeId, 3> up{};
    const auto& ut = pair.upper.triangles[p.upper_tris[0]];
    for (int k = 0; k < 3; ++k) up[k] = pair.upper_id(ut[k]);
    std::array<NodeId, 3> b = pr.b;
    std::sort(b.begin(), b.end());
    std::sort(up.begin(), up.end());
    if (b != up) return std::nullopt;
    return pr;
}

// Choice index of face f realizing the lower-upper diagonal (lo, up).
inline std::optional<std::size_t> choice_for_diagonal(const LateralFace& f, NodeId lo, NodeId up) {
    const auto paths = all_paths(f);
    for (std::size_t c = 0; c < paths.size(); ++c) {
        for (const auto& [x, y] : face_diagonals(f, paths[c])) {
            if (x == lo && y == up) return c;
        }
    }
    return std::nullopt;
}

// Face choices a prism scheme imposes.
inline std::map<int, std::size_t> prism_choices(const Prism& pr, int scheme, const Partition25D& p,
                                                const Decomposition& d) {
    std::map<int, std::size_t> out;
    for (auto [i, j] : {std::pair{0, 1}, std::pair{0, 2}, std::pair{1, 2}}) {
        const auto [l, u] = scheme_diagonal(scheme, i, j);
        const NodeId lo = pr.node(l), up = pr.node(u);
        for (int f : p.faces) {
            const auto& F = d.faces[f];
            const bool match = (F.lower[0] == pr.a[i] && F.lower[1] == pr.a[j]) ||
                               (F.lower[0] == pr.a[j] && F.lower[1] == pr.a[i]);
            if (match) {
                if (auto c = choice_for_diagonal(F, lo, up)) out[f] = *c;
            }
        }
    }
    return out;
}

} // namespace detail

/// Mesher for one layer pair.  All tets use the pair's global ids.
class SlabMesher {
  public:
    SlabMesher(const SpacetimeLayerPair& pair, const MesherConfig& cfg)
        : pair_(pair), cfg_(cfg), tol_(cfg.tol.with_scale(pair.bbox_diagonal())), points_(pair.points()) {}

    TetMesh run(MeshStats* stats = nullptr) {
        const auto cut = detect_cutting_edges(pair_);
        d_ = decompose_domain(pair_, cut);
        try {
            refine_all(d_, pair_, cfg_.max_inner);
        } catch (const NoPentaFace& e) {
            throw IllPosedSpacetime(e.what());
        }
        const auto& parts = d_.partitions;
        const std::size_t n = parts.size();
        prisms_.assign(n, std::nullopt);
        for (std::size_t i = 0; i < n; ++i) prisms_[i] = detail::as_prism(parts[i], d_, pair_);
        owners_.assign(d_.faces.size(), {});
        for (const auto& p : parts) {
            for (int f : p.faces) owners_[f].push_back(p.id);
        }
        choice_.assign(d_.faces.size(), 0);
        locked_.assign(d_.faces.size(), false);
        tets_.assign(n, {});
        scheme_.assign(n, 0);

        // Phase 1: canonical laterals everywhere, partitions independent.
        std::vector<char> ok(n, 0);
        parallel_for(n, cfg_.threads, [&](std::size_t i) {
            if (auto t = solve(static_cast<int>(i), choice_, nullptr)) {
                tets_[i] = std::move(*t);
                ok[i] = 1;
            }
        });

        // Phase 2: failed partitions in id order try other lateral schemes;
        // neighbors sharing a flipped face must re-solve under the new choice.
        std::size_t retried = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (ok[i]) continue;
            ++retried;
            if (!retry(static_cast<int>(i))) {
                std::ostringstream os;
                os << "partition " << i << " (lower nodes";
                for (NodeId v : parts[i].lower_nodes) os << ' ' << v;
                os << ") admits no tetrahedralization under any lateral scheme";
                throw IllPosedSpacetime(os.str());
            }
        }

        TetMesh m;
        m.nodes = points_;
        for (std::size_t i = 0; i < n; ++i) {
            for (const auto& t : tets_[i]) {
                m.tets.push_back(orient_positive(t, points_));
                m.provenance.push_back(static_cast<std::int32_t>(i));
            }
        }
        if (stats) {
            stats->partitions = n;
            stats->prisms = static_cast<std::size_t>(std::count_if(prisms_.begin(), prisms_.end(),
                                                                   [](const auto& p) { return p.has_value(); }));
            stats->quasi_ill_posed = static_cast<std::size_t>(
                std::count_if(scheme_.begin(), scheme_.end(), [](int s) { return s > 1; }));
            stats->retried = retried;
            stats->decomposition = d_;
        }
        return m;
    }

  private:
    // Tets of partition i under the given face choices, or nullopt.
    std::optional<std::vector<TetIdx>> solve(int i, const std::vector<std::size_t>& choice, int* scheme_out) {
        const auto& p = d_.partitions[i];
        if (const auto& pr = prisms_[i]) {
            for (int s = 1; s <= 6; ++s) {
                const auto want = detail::prism_choices(*pr, s, p, d_);
                bool match = want.size() == 3;
                for (const auto& [f, c] : want) match = match && choice[f] == c;
                if (!match) continue;
                const auto r = triangulate_prism(*pr, points_, tol_, [s](int k) { return k == s; });
                if (r.kind == PrismResult::Kind::IllPosed) return std::nullopt;
                if (scheme_out) *scheme_out = s;
                return std::vector<TetIdx>(r.tets.begin(), r.tets.end());
            }
            return std::nullopt;
        }
        std::map<int, std::size_t> ch;
        for (int f : p.faces) ch[f] = choice[f];
        PartitionSurface surf;
        try {
            surf = partition_surface(p, d_, pair_, ch);
        } catch (const OpenSurface&) {
            return std::nullopt;
        }
        const Polyhedron poly = Polyhedron::from_global(surf.triangles, surf.tags, points_);
        if (poly.volume() <= 0.0) return std::nullopt;
        std::vector<Edge> req;
        auto local = [&](NodeId g) {
            return static_cast<NodeId>(std::lower_bound(poly.ids.begin(), poly.ids.end(), g) - poly.ids.begin());
        };
        for (const auto& [a, b] : p.temporal_edges) req.push_back({local(a), local(b)});
        ConquerOptions opt;
        opt.budget = cfg_.budget;
        std::vector<std::string> trace;
        if (cfg_.trace) opt.trace = &trace;
        std::optional<std::vector<TetIdx>> out;
        try {
            auto tets = node_elimination(poly, tol_, opt, req);
            for (auto& t : tets) {
                for (auto& v : t) v = poly.ids[v];
            }
            out = std::move(tets);
        } catch (const Indivisible&) {
        } catch (const BudgetExhausted&) {
        }
        if (cfg_.trace) {
            std::lock_guard<std::mutex> lock(trace_mutex_);
            cfg_.trace->push_back("partition " + std::to_string(i) + (out ? " solved" : " failed"));
            cfg_.trace->insert(cfg_.trace->end(), trace.begin(), trace.end());
        }
        if (scheme_out) *scheme_out = 0;
        return out;
    }

    // Candidate face-choice vectors for a failing partition.
    std::vector<std::vector<std::size_t>> candidates(int i) {
        const auto& p = d_.partitions[i];
        std::vector<std::vector<std::size_t>> out;
        if (const auto& pr = prisms_[i]) {
            for (int s = 1; s <= 6; ++s) {
                auto c = choice_;
                bool ok = true;
                for (const auto& [f, v] : detail::prism_choices(*pr, s, p, d_)) {
                    if (locked_[f] && choice_[f] != v) ok = false;
                    c[f] = v;
                }
                if (ok) out.push_back(std::move(c));
            }
            return out;
        }
        std::vector<std::size_t> radices;
        std::vector<std::optional<std::size_t>> locks;
        for (int f : p.faces) {
            radices.push_back(choice_count(d_.faces[f]));
            locks.push_back(locked_[f] ? std::optional<std::size_t>(choice_[f]) : std::nullopt);
        }
        // Start from the current choices so the first scheme is canonical.
        LateralSchemeIterator it(radices, locks, cfg_.scheme_cap);
        while (auto s = it.next()) {
            auto c = choice_;
            for (std::size_t k = 0; k < p.faces.size(); ++k) c[p.faces[k]] = (*s)[k];
            out.push_back(std::move(c));
        }
        return out;
    }

    bool retry(int i) {
        for (const auto& c : candidates(i)) {
            int scheme = 0;
            auto mine = solve(i, c, &scheme);
            if (!mine) continue;
            // Neighbors across flipped faces re-solve under the new choices.
            std::map<int, std::vector<TetIdx>> redo;
            std::map<int, int> redo_scheme;
            bool ok = true;
            for (int f : d_.partitions[i].faces) {
                if (c[f] == choice_[f]) continue;
                for (int o : owners_[f]) {
                    if (o == i || redo.count(o)) continue;
                    int s = 0;
                    auto t = solve(o, c, &s);
                    if (!t) {
                        ok = false;
                        break;
                    }
                    redo[o] = std::move(*t);
                    redo_scheme[o] = s;
                }
                if (!ok) break;
            }
            if (!ok) continue;
            choice_ = c;
            tets_[i] = std::move(*mine);
            scheme_[i] = scheme;
            for (auto& [o, t] : redo) {
                tets_[o] = std::move(t);
                scheme_[o] = redo_scheme[o];
            }
            for (int f : d_.partitions[i].faces) locked_[f] = true;
            return true;
        }
        return false;
    }

    const SpacetimeLayerPair& pair_;
    MesherConfig cfg_;
    Tolerance tol_;
    std::vector<Point3> points_;
    Decomposition d_;
    std::vector<std::optional<Prism>> prisms_;
    std::vector<std::vector<int>> owners_;
    std::vector<std::size_t> choice_;
    std::vector<bool> locked_;
    std::vector<std::vector<TetIdx>> tets_;
    std::vector<int> scheme_;
    std::mutex trace_mutex_;
};

/// Tetrahedralizes one layer pair; throws IllPosedSpacetime when some
/// partition cannot be triangulated under any lateral scheme.
inline TetMesh mesh_spacetime(const SpacetimeLayerPair& pair, const MesherConfig& cfg = {}, MeshStats* stats = nullptr) {
    SlabMesher sm(pair, cfg);
    TetMesh m = sm.run(stats);
    if (cfg.validate) {
        const auto rep = validate_tetmesh(m, pair, cfg.tol);
        if (!rep.passed()) {
            throw IllPosedSpacetime("mesh failed validation: " + rep.summary());
        }
    }
    return m;
}

/// Meshes every consecutive pair and stitches the slabs on shared layers.
inline TetMesh mesh_spacetime_sequence(const LayerSequence& seq, const MesherConfig& cfg = {},
                                       std::vector<MeshStats>* stats = nullptr) {
    if (seq.layers.empty() || seq.nexts.size() + 1 != seq.layers.size()) {
        throw Error("a sequence of " + std::to_string(seq.layers.size()) + " layers needs " +
                    std::to_string(seq.layers.empty() ? 0 : seq.layers.size() - 1) + " next maps, got " +
                    std::to_string(seq.nexts.size()));
    }
    TetMesh out;
    out.nodes = seq.points();
    std::int32_t part_base = 0;
    for (std::size_t i = 0; i + 1 < seq.layers.size(); ++i) {
        const auto pair = seq.pair(i);
        MeshStats st;
        const TetMesh m = mesh_spacetime(pair, cfg, &st);
        const NodeId off = seq.offset(i);
        for (std::size_t k = 0; k < m.tets.size(); ++k) {
            TetIdx t = m.tets[k];
            for (auto& v : t) v += off;
            out.tets.push_back(t);
            out.provenance.push_back(part_base + m.provenance[k]);
        }
        part_base += static_cast<std::int32_t>(st.partitions);
        if (stats) stats->push_back(std::move(st));
    }
    return out;
}

inline TetMesh mesh_spacetime_sequence(const std::vector<TriMesh2D>& layers, const std::vector<NextNodeMap>& nexts,
                                       double dt, const MesherConfig& cfg = {}) {
    return mesh_spacetime_sequence(LayerSequence{layers, nexts, dt}, cfg);
}

} // namespace stmesh
