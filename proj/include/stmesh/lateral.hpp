#pragma once

// Lateral faces of spacetime partitions and their triangulations.
//
// A lateral face is a polygon spanned by a lower chain L[0..m] and an upper
// chain U[0..n] joined by the rungs L[0]-U[0] and L[m]-U[n].  Only diagonals
// between a lower and an upper node are allowed, so triangulations are the
// monotone lattice paths from (0,0) to (m,n).

#include <stmesh/errors.hpp>
#include <stmesh/geometry.hpp>
#include <stmesh/model.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace stmesh {

struct LateralFace {
    std::vector<NodeId> lower;
    std::vector<NodeId> upper;

    int m() const { return static_cast<int>(lower.size()) - 1; }
    int n() const { return static_cast<int>(upper.size()) - 1; }

    /// Same face traversed in the opposite direction.
    LateralFace reversed() const {
        return {std::vector<NodeId>(lower.rbegin(), lower.rend()), std::vector<NodeId>(upper.rbegin(), upper.rend())};
    }

    /// Direction-independent representative used for sharing between partitions.
    LateralFace normalized() const {
        const LateralFace r = reversed();
        return std::tie(r.lower, r.upper) < std::tie(lower, upper) ? r : *this;
    }

    friend bool operator==(const LateralFace&, const LateralFace&) = default;
    friend auto operator<=>(const LateralFace&, const LateralFace&) = default;
};

/// A lattice path: true = lower step, false = upper step.
using LatticePath = std::vector<bool>;

/// Canonical path: every upper step is taken at the lower node of smallest id.
/// On a quad this is the staircase diagonal; on a penta with one lower edge it
/// is the fan at the smaller lower node.
inline LatticePath canonical_path(const LateralFace& f) {
    const auto it = std::min_element(f.lower.begin(), f.lower.end());
    const int k = static_cast<int>(it - f.lower.begin());
    LatticePath p;
    for (int i = 0; i < k; ++i) p.push_back(true);
    for (int j = 0; j < f.n(); ++j) p.push_back(false);
    for (int i = k; i < f.m(); ++i) p.push_back(true);
    return p;
}

inline std::uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) {
        r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    }
    return r;
}

/// All lattice paths of the face: the canonical one first, then the others in
/// lexicographic order (lower steps sort first).
inline std::vector<LatticePath> all_paths(const LateralFace& f) {
    const int m = f.m(), n = f.n();
    std::vector<LatticePath> out;
    LatticePath p;
    for (int i = 0; i < m; ++i) p.push_back(true);
    for (int j = 0; j < n; ++j) p.push_back(false);
    // true > false, so iterate permutations of the descending arrangement.
    do {
        out.push_back(p);
    } while (std::prev_permutation(p.begin(), p.end()));
    const LatticePath c = canonical_path(f);
    auto it = std::find(out.begin(), out.end(), c);
    std::rotate(out.begin(), it, it + 1);
    return out;
}

inline std::size_t choice_count(const LateralFace& f) { return binomial(f.m() + f.n(), f.m()); }

inline std::vector<TriIdx> path_triangles(const LateralFace& f, const LatticePath& path) {
    std::vector<TriIdx> tris;
    int i = 0, j = 0;
    for (bool low : path) {
        if (low) {
            tris.push_back({f.lower[i], f.lower[i + 1], f.upper[j]});
            ++i;
        } else {
            tris.push_back({f.lower[i], f.upper[j], f.upper[j + 1]});
            ++j;
        }
    }
    return tris;
}

/// Triangles for choice index c (0 = canonical).
inline std::vector<TriIdx> face_triangles(const LateralFace& f, std::size_t c) {
    if (c == 0) {
        return path_triangles(f, canonical_path(f));
    }
    const auto paths = all_paths(f);
    return path_triangles(f, paths.at(c));
}

/// Diagonals (lower, upper) used by a triangulation of the face.
inline std::vector<Edge> face_diagonals(const LateralFace& f, const LatticePath& path) {
    std::vector<Edge> d;
    int i = 0, j = 0;
    for (std::size_t s = 0; s + 1 < path.size(); ++s) {
        if (path[s]) ++i; else ++j;
        d.push_back({f.lower[i], f.upper[j]});
    }
    return d;
}

/// Staircase diagonal of the quad over cutting edge (u, v): the smaller lower
/// node joins the upper image of the larger one.
inline Edge staircase_quad_split(NodeId u, NodeId v, const SpacetimeLayerPair& pair) {
    const auto edges = pair.lower.edges();
    if (u == v || !std::binary_search(edges.begin(), edges.end(), make_edge(u, v))) {
        throw NotCuttingEdge("(" + std::to_string(u) + "," + std::to_string(v) + ") is not a lower edge");
    }
    const NodeId nu = pair.next.next[u], nv = pair.next.next[v];
    const auto up = pair.upper.edges();
    if (nu == nv || !std::binary_search(up.begin(), up.end(), make_edge(nu, nv))) {
        throw NotCuttingEdge("image of (" + std::to_string(u) + "," + std::to_string(v) + ") is not an upper edge");
    }
    const NodeId lo = std::min(u, v), hi = std::max(u, v);
    return {lo, pair.next_id(hi)};
}

/// Penta-face cycle (n1, n4, n4', n6', n1').
struct PentaFace {
    NodeId n1, n4, n4p, n6p, n1p;

    LateralFace as_lateral() const { return {{n1, n4}, {n1p, n6p, n4p}}; }
};

/// The three lateral triangulations of a penta-face: fans at n1, n4 and n6'.
inline std::array<std::vector<TriIdx>, 3> enumerate_penta_splits(const PentaFace& f) {
    const LateralFace lf = f.as_lateral();
    return {path_triangles(lf, {false, false, true}), path_triangles(lf, {true, false, false}),
            path_triangles(lf, {false, true, false})};
}

// ---------------------------------------------------------------------------
// Prisms

enum class Verdict { Valid, Invalid, Degenerate };

/// Vertex order of each prism scheme.  Scheme s uses diagonal a_i b_j on the
/// quad (i, j) whenever i precedes j in the order.
inline std::array<int, 3> scheme_order(int scheme) {
    static constexpr std::array<std::array<int, 3>, 6> orders{{
        {0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {2, 0, 1}, {2, 1, 0}, {1, 2, 0},
    }};
    if (scheme < 1 || scheme > 6) {
        throw BadSchemeId(scheme);
    }
    return orders[scheme - 1];
}

/// Tets of a scheme in prism-local indices (a_i = i, b_i = 3 + i).
inline std::array<TetIdx, 3> scheme_tets(int scheme) {
    const auto [p, q, r] = scheme_order(scheme);
    return {{{p, q, r, 3 + r}, {p, q, 3 + q, 3 + r}, {p, 3 + p, 3 + q, 3 + r}}};
}

/// Diagonal on quad (i, j), i < j, as prism-local (lower, upper) indices.
inline std::pair<int, int> scheme_diagonal(int scheme, int i, int j) {
    const auto o = scheme_order(scheme);
    const auto pos = [&](int k) { return std::find(o.begin(), o.end(), k) - o.begin(); };
    return pos(i) < pos(j) ? std::pair{i, 3 + j} : std::pair{j, 3 + i};
}

/// Checks the two side conditions of a prism scheme.  pts = (a0, a1, a2, b0, b1, b2).
inline Verdict check_prism_subdivision(const std::array<Point3, 6>& pts, int scheme, const Tolerance& tol = {}) {
    const auto [p, q, r] = scheme_order(scheme);
    const Point3 &ap = pts[p], &aq = pts[q], &ar = pts[r];
    const Point3 &bp = pts[3 + p], &bq = pts[3 + q], &br = pts[3 + r];
    Side s1, s2;
    try {
        s1 = opposite_sides(ar, bq, {ap, aq, br}, tol);
        s2 = opposite_sides(aq, bp, {ap, bq, br}, tol);
    } catch (const CollinearPlane&) {
        return Verdict::Degenerate;
    }
    if (s1 == Side::Degenerate || s2 == Side::Degenerate) {
        return Verdict::Degenerate;
    }
    return s1 == Side::Opposite && s2 == Side::Opposite ? Verdict::Valid : Verdict::Invalid;
}

/// Prism over lower triangle a (ascending ids) with b_i = next(a_i).
struct Prism {
    std::array<NodeId, 3> a;
    std::array<NodeId, 3> b;

    std::array<Point3, 6> points(const std::vector<Point3>& table) const {
        return {table[a[0]], table[a[1]], table[a[2]], table[b[0]], table[b[1]], table[b[2]]};
    }
    NodeId node(int local) const { return local < 3 ? a[local] : b[local - 3]; }
};

/// Signed volume enclosed by the prism surface under a scheme's laterals.
inline double prism_volume(const std::array<Point3, 6>& P, int scheme) {
    double v = 0.0;
    for (const auto& t : scheme_tets(scheme)) {
        v += std::abs(tet_volume(P[t[0]], P[t[1]], P[t[2]], P[t[3]]));
    }
    return v;
}

/// Whether a valid scheme's tets actually tile its prism: no flat tets, and
/// the tet volumes add up to the enclosed volume.
inline bool scheme_tiles(const std::array<Point3, 6>& P, int scheme, const Tolerance& tol) {
    for (const auto& t : scheme_tets(scheme)) {
        if (orient3d(P[t[0]], P[t[1]], P[t[2]], P[t[3]], tol) == 0) {
            return false;
        }
    }
    // Enclosed volume by divergence over the boundary triangles.
    const auto o = scheme_order(scheme);
    std::vector<TriIdx> tris{{0, 2, 1}, {3, 4, 5}};
    for (auto [i, j] : {std::pair{0, 1}, std::pair{1, 2}, std::pair{2, 0}}) {
        // Quad a_i a_j b_j b_i, outward when the lower triangle is CCW.
        const auto pos = [&](int k) { return std::find(o.begin(), o.end(), k) - o.begin(); };
        if (pos(i) < pos(j)) {
            tris.push_back({i, j, 3 + j});
            tris.push_back({i, 3 + j, 3 + i});
        } else {
            tris.push_back({i, j, 3 + i});
            tris.push_back({j, 3 + j, 3 + i});
        }
    }
    double enclosed = 0.0;
    for (const auto& t : tris) {
        enclosed += dot(P[t[0]] - P[0], cross(P[t[1]] - P[0], P[t[2]] - P[0]));
    }
    enclosed = std::abs(enclosed) / 6.0;
    const double sum = prism_volume(P, scheme);
    return std::abs(sum - enclosed) <= 1e-9 * std::max(sum, enclosed) + tol.volume_eps();
}

struct PrismResult {
    enum class Kind { Staircase, QuasiIllPosed, IllPosed } kind = Kind::IllPosed;
    int scheme = 0;
    std::array<TetIdx, 3> tets{}; // global ids
};

/// Staircase first, then schemes 1..6 in table order.  `allowed` filters
/// schemes that conflict with already fixed lateral diagonals.
template <class Allowed>
PrismResult triangulate_prism(const Prism& pr, const std::vector<Point3>& table, const Tolerance& tol,
                              Allowed&& allowed) {
    const auto P = pr.points(table);
    auto emit = [&](int s, PrismResult::Kind k) {
        PrismResult r;
        r.kind = k;
        r.scheme = s;
        const auto local = scheme_tets(s);
        for (int i = 0; i < 3; ++i) {
            TetIdx t{pr.node(local[i][0]), pr.node(local[i][1]), pr.node(local[i][2]), pr.node(local[i][3])};
            r.tets[i] = orient_positive(t, table);
        }
        return r;
    };
    auto ok = [&](int s) {
        return allowed(s) && check_prism_subdivision(P, s, tol) == Verdict::Valid && scheme_tiles(P, s, tol);
    };
    if (ok(1)) {
        return emit(1, PrismResult::Kind::Staircase);
    }
    for (int s = 2; s <= 6; ++s) {
        if (ok(s)) {
            return emit(s, PrismResult::Kind::QuasiIllPosed);
        }
    }
    return {};
}

inline PrismResult triangulate_prism(const Prism& pr, const std::vector<Point3>& table, const Tolerance& tol = {}) {
    return triangulate_prism(pr, table, tol, [](int) { return true; });
}

// ---------------------------------------------------------------------------
// Scheme iteration

/// Per-face choice index; faces with a lock keep their locked value.
using LateralScheme = std::vector<std::size_t>;

/// Mixed-radix reflected Gray code over the free faces of a partition,
/// starting at the canonical scheme.  Successive schemes differ in one face.
class LateralSchemeIterator {
  public:
    /// radices[i] = number of triangulations of face i; locks[i] = fixed choice.
    LateralSchemeIterator(std::vector<std::size_t> radices, std::vector<std::optional<std::size_t>> locks,
                          std::size_t cap = 4096)
        : radices_(std::move(radices)), locks_(std::move(locks)), cap_(cap) {
        locks_.resize(radices_.size());
        current_.assign(radices_.size(), 0);
        for (std::size_t i = 0; i < radices_.size(); ++i) {
            if (locks_[i]) {
                current_[i] = *locks_[i];
            } else if (radices_[i] > 1) {
                free_.push_back(i);
            }
        }
        dir_.assign(free_.size(), 1);
    }

    /// Next scheme, or nullopt once the stream (or the cap) is exhausted.
    std::optional<LateralScheme> next() {
        if (emitted_ >= cap_) {
            return std::nullopt;
        }
        if (emitted_ == 0) {
            ++emitted_;
            return current_;
        }
        // Reflected mixed-radix Gray step: move the lowest digit that can move.
        for (std::size_t k = 0; k < free_.size(); ++k) {
            const std::size_t f = free_[k];
            const auto r = static_cast<long>(radices_[f]);
            const long v = static_cast<long>(current_[f]) + dir_[k];
            if (v >= 0 && v < r) {
                current_[f] = static_cast<std::size_t>(v);
                ++emitted_;
                return current_;
            }
            dir_[k] = -dir_[k];
        }
        return std::nullopt;
    }

    /// Total number of schemes (before the cap).
    std::size_t total() const {
        std::size_t t = 1;
        for (std::size_t f : free_) {
            t *= radices_[f];
            if (t > cap_) return t;
        }
        return t;
    }

  private:
    std::vector<std::size_t> radices_;
    std::vector<std::optional<std::size_t>> locks_;
    std::size_t cap_;
    std::vector<std::size_t> free_;
    std::vector<int> dir_;
    LateralScheme current_;
    std::size_t emitted_ = 0;
};

} // namespace stmesh
