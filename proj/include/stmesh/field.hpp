#pragma once

// Forward approximation over a spacetime: field-following (MF) evaluation
// through a flow map, piecewise-linear (PL) evaluation on a tet mesh, and
// the derived upsampling, resampling and error metrics.

#include <stmesh/errors.hpp>
#include <stmesh/geometry.hpp>
#include <stmesh/mesher.hpp>
#include <stmesh/model.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <vector>

namespace stmesh {

/// Per-layer node values.
struct ScalarField {
    std::vector<std::vector<double>> layers;

    /// Values concatenated in global node order.
    std::vector<double> flatten() const {
        std::vector<double> out;
        for (const auto& l : layers) out.insert(out.end(), l.begin(), l.end());
        return out;
    }

    void check(const LayerSequence& seq) const {
        if (layers.size() != seq.layers.size()) {
            throw SchemaError("field has " + std::to_string(layers.size()) + " layers, sequence has " +
                              std::to_string(seq.layers.size()));
        }
        for (std::size_t i = 0; i < layers.size(); ++i) {
            if (layers[i].size() != seq.layers[i].nodes.size()) {
                throw SchemaError("field layer " + std::to_string(i) + " has " + std::to_string(layers[i].size()) +
                                  " values for " + std::to_string(seq.layers[i].nodes.size()) + " nodes");
            }
        }
    }
};

/// Flow map: position at t_to of the particle that is at x at t_from.
/// Times are in layer units (layer i at time i).
using FlowOracle = std::function<Point2(const Point2& x, double t_from, double t_to)>;

/// Fixed-step RK4 through a steady velocity field.  The step is h (in layer
/// units); the last step is shortened to land exactly on t_to.
inline FlowOracle rk4_flow(std::function<Point2(const Point2&)> v, double h = 1.0 / 64.0) {
    return [v = std::move(v), h](const Point2& x0, double t0, double t1) {
        Point2 x = x0;
        const double span = t1 - t0;
        if (span == 0.0) return x;
        const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(span) / h - 1e-9)));
        const double dt = span / steps;
        for (int s = 0; s < steps; ++s) {
            const Point2 k1 = v(x);
            const Point2 k2 = v({x.x + 0.5 * dt * k1.x, x.y + 0.5 * dt * k1.y});
            const Point2 k3 = v({x.x + 0.5 * dt * k2.x, x.y + 0.5 * dt * k2.y});
            const Point2 k4 = v({x.x + dt * k3.x, x.y + dt * k3.y});
            x.x += dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
            x.y += dt / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y);
        }
        return x;
    };
}

namespace detail {

template <class Box>
struct UniformGrid {
    Point3 lo{}, inv{};
    std::array<int, 3> n{1, 1, 1};
    std::vector<std::vector<int>> cells;

    void build(const std::vector<Box>& boxes, Point3 glo, Point3 ghi, std::size_t target) {
        lo = glo;
        const Point3 ext = ghi - glo;
        // Roughly cubic cells, about `target` of them over the non-flat axes.
        const std::array<double, 3> e{ext.x, ext.y, ext.t};
        double vol = 1.0;
        int dims = 0;
        for (double v : e) {
            if (v > 0.0) {
                vol *= v;
                ++dims;
            }
        }
        const double side = dims ? std::pow(vol / static_cast<double>(std::max<std::size_t>(target, 1)), 1.0 / dims) : 1.0;
        for (int k = 0; k < 3; ++k) {
            n[k] = e[k] > 0.0 ? std::clamp(static_cast<int>(std::ceil(e[k] / side)), 1, 512) : 1;
        }
        inv = {ext.x > 0 ? n[0] / ext.x : 0.0, ext.y > 0 ? n[1] / ext.y : 0.0, ext.t > 0 ? n[2] / ext.t : 0.0};
        cells.assign(static_cast<std::size_t>(n[0]) * n[1] * n[2], {});
        for (int i = 0; i < static_cast<int>(boxes.size()); ++i) {
            const auto a = cell_of(boxes[i][0]), b = cell_of(boxes[i][1]);
            for (int x = a[0]; x <= b[0]; ++x)
                for (int y = a[1]; y <= b[1]; ++y)
                    for (int z = a[2]; z <= b[2]; ++z) cells[index(x, y, z)].push_back(i);
        }
    }
    std::array<int, 3> cell_of(const Point3& p) const {
        auto c = [](double v, int m) { return std::clamp(static_cast<int>(std::floor(v)), 0, m - 1); };
        return {c((p.x - lo.x) * inv.x, n[0]), c((p.y - lo.y) * inv.y, n[1]), c((p.t - lo.t) * inv.t, n[2])};
    }
    std::size_t index(int x, int y, int z) const {
        return (static_cast<std::size_t>(z) * n[1] + y) * n[0] + x;
    }
    const std::vector<int>& at(const Point3& p) const {
        const auto c = cell_of(p);
        return cells[index(c[0], c[1], c[2])];
    }
};

} // namespace detail

/// Locates points in a 2D triangle mesh.
class TriLocator2D {
  public:
    explicit TriLocator2D(const TriMesh2D& m) : mesh_(&m) {
        std::vector<std::array<Point3, 2>> boxes;
        Point3 glo{1e300, 1e300, 0}, ghi{-1e300, -1e300, 0};
        for (const auto& t : m.triangles) {
            Point3 lo{1e300, 1e300, 0}, hi{-1e300, -1e300, 0};
            for (NodeId v : t) {
                lo = {std::min(lo.x, m.nodes[v].x), std::min(lo.y, m.nodes[v].y), 0};
                hi = {std::max(hi.x, m.nodes[v].x), std::max(hi.y, m.nodes[v].y), 0};
            }
            boxes.push_back({lo, hi});
            glo = {std::min(glo.x, lo.x), std::min(glo.y, lo.y), 0};
            ghi = {std::max(ghi.x, hi.x), std::max(ghi.y, hi.y), 0};
        }
        if (boxes.empty()) throw EmptyInput();
        lo_ = glo;
        hi_ = ghi;
        grid_.build(boxes, glo, ghi, m.triangles.size());
    }

    /// Triangle index and barycentric weights, or nullopt outside the mesh.
    std::optional<std::pair<int, std::array<double, 3>>> locate(const Point2& p, double eps = 1e-12) const {
        const Point3 q{p.x, p.y, 0};
        if (q.x < lo_.x - 1e-9 || q.y < lo_.y - 1e-9 || q.x > hi_.x + 1e-9 || q.y > hi_.y + 1e-9) return std::nullopt;
        std::optional<std::pair<int, std::array<double, 3>>> best;
        double best_min = -std::numeric_limits<double>::infinity();
        for (int i : grid_.at(q)) {
            const auto& t = mesh_->triangles[i];
            const auto w = barycentric2d({mesh_->nodes[t[0]], mesh_->nodes[t[1]], mesh_->nodes[t[2]]}, p);
            if (!w) continue;
            const double mn = std::min({(*w)[0], (*w)[1], (*w)[2]});
            if (mn >= -eps) return std::pair{i, *w};
            if (mn > best_min) {
                best_min = mn;
                best = std::pair{i, *w};
            }
        }
        if (best && best_min >= -1e-9) return best;
        return std::nullopt;
    }

    double interpolate(const std::vector<double>& values, const Point2& p) const {
        const auto hit = locate(p);
        if (!hit) throw OutOfDomain("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ") is outside the mesh");
        const auto& t = mesh_->triangles[hit->first];
        const auto& w = hit->second;
        return w[0] * values[t[0]] + w[1] * values[t[1]] + w[2] * values[t[2]];
    }

  private:
    const TriMesh2D* mesh_;
    Point3 lo_{}, hi_{};
    detail::UniformGrid<std::array<Point3, 2>> grid_;
};

/// Face walk from a seed tet near the query, with a uniform-grid bucket scan
/// over tet bounding boxes for points near faces or where the walk leaves
/// the mesh.  Among containing tets the lowest id wins.
class PointLocator {
  public:
    explicit PointLocator(const TetMesh& m) : mesh_(&m) {
        if (m.tets.empty()) throw EmptyInput();
        std::vector<std::array<Point3, 2>> boxes;
        Point3 glo = m.nodes[m.tets[0][0]], ghi = glo;
        for (const auto& t : m.tets) {
            Point3 lo = m.nodes[t[0]], hi = lo;
            for (NodeId v : t) {
                const auto& q = m.nodes[v];
                lo = {std::min(lo.x, q.x), std::min(lo.y, q.y), std::min(lo.t, q.t)};
                hi = {std::max(hi.x, q.x), std::max(hi.y, q.y), std::max(hi.t, q.t)};
            }
            boxes.push_back({lo, hi});
            glo = {std::min(glo.x, lo.x), std::min(glo.y, lo.y), std::min(glo.t, lo.t)};
            ghi = {std::max(ghi.x, hi.x), std::max(ghi.y, hi.y), std::max(ghi.t, hi.t)};
        }
        lo_ = glo;
        hi_ = ghi;
        pad_ = 1e-9 * (1.0 + norm(hi_ - lo_));
        grid_.build(boxes, glo, ghi, m.tets.size());
        boxes_ = boxes;
        affine_.resize(m.tets.size());
        for (int i = 0; i < static_cast<int>(m.tets.size()); ++i) {
            const auto& t = m.tets[i];
            const Point3 o = m.nodes[t[0]];
            const Point3 a = m.nodes[t[1]] - o, b = m.nodes[t[2]] - o, c = m.nodes[t[3]] - o;
            const double det = a.x * (b.y * c.t - b.t * c.y) - a.y * (b.x * c.t - b.t * c.x) + a.t * (b.x * c.y - b.y * c.x);
            auto& f = affine_[i];
            f.o = o;
            if (det == 0.0) {
                f.degenerate = true;
                continue;
            }
            // Rows of the inverse of [a b c]: cross products over det.
            const Point3 r1 = cross(b, c), r2 = cross(c, a), r3 = cross(a, b);
            f.m = {r1.x / det, r1.y / det, r1.t / det, r2.x / det, r2.y / det, r2.t / det,
                   r3.x / det, r3.y / det, r3.t / det};
        }
        std::map<TriIdx, std::vector<int>> faces;
        for (int i = 0; i < static_cast<int>(m.tets.size()); ++i) {
            const auto& t = m.tets[i];
            for (int f = 0; f < 4; ++f) faces[sorted_tri({t[(f + 1) % 4], t[(f + 2) % 4], t[(f + 3) % 4]})].push_back(i);
        }
                for (int i = 0; i < static_cast<int>(m.tets.size()); ++i) {
            const auto& t = m.tets[i];
            for (int f = 0; f < 4; ++f) {
                const auto& ts = faces[sorted_tri({t[(f + 1) % 4], t[(f + 2) % 4], t[(f + 3) % 4]})];
                for (int o : ts) {
                    if (o != i) affine_[i].nb[f] = o;
                }
            }
        }
        build_seeds();
    }

    struct Hit {
        int tet = -1;
        std::array<double, 4> weights{};
    };

    std::optional<Hit> locate(const Point3& p, double eps = 1e-12) const {
        const double pad = pad_;
        if (p.x < lo_.x - pad || p.y < lo_.y - pad || p.t < lo_.t - pad || p.x > hi_.x + pad || p.y > hi_.y + pad ||
            p.t > hi_.t + pad) {
            return std::nullopt;
        }
        // Walk from a nearby seed.  A hit well inside one tet is unique; points
        // near faces go through the scan so the lowest id wins.
        {
            int cur = seeds_[seed_cell(p)];
            for (int step = 0; cur >= 0 && step < 256; ++step) {
                const auto w = walk_weights(cur, p);
                const int f = static_cast<int>(std::min_element(w.begin(), w.end()) - w.begin());
                if (w[f] > 1e-9) return Hit{cur, weights(cur, p)};
                if (w[f] >= -1e-9) break;
                cur = affine_[cur].nb[f];
            }
        }
        int best = -1;
        double best_min = -std::numeric_limits<double>::infinity();
        for (int i : grid_.at(p)) {
            const auto& bx = boxes_[i];
            if (p.x < bx[0].x - pad || p.y < bx[0].y - pad || p.t < bx[0].t - pad || p.x > bx[1].x + pad ||
                p.y > bx[1].y + pad || p.t > bx[1].t + pad) {
                continue;
            }
            const auto w = weights(i, p);
            const double mn = std::min({w[0], w[1], w[2], w[3]});
            if (mn >= -eps) return Hit{i, w};
            if (mn > best_min) {
                best_min = mn;
                best = i;
            }
        }
        // Walk toward the most violated face from the closest candidate.
        int cur = best;
        for (int step = 0; cur >= 0 && step < 64; ++step) {
            const auto w = weights(cur, p);
            const int f = static_cast<int>(std::min_element(w.begin(), w.end()) - w.begin());
            if (w[f] >= -1e-9) return Hit{cur, w};
            cur = affine_[cur].nb[f];
        }
        return std::nullopt;
    }

    /// Reference scan over all tets (lowest containing id).
    std::optional<Hit> locate_bruteforce(const Point3& p, double eps = 1e-12) const {
        for (int i = 0; i < static_cast<int>(mesh_->tets.size()); ++i) {
            const auto w = weights(i, p);
            if (std::min({w[0], w[1], w[2], w[3]}) >= -eps) return Hit{i, w};
        }
        return std::nullopt;
    }

    std::array<double, 4> weights(int tet, const Point3& p) const {
        const auto& t = mesh_->tets[tet];
        return barycentric({mesh_->nodes[t[0]], mesh_->nodes[t[1]], mesh_->nodes[t[2]], mesh_->nodes[t[3]]}, p,
                           Tolerance{0.0, 0.0, 1.0});
    }

    const TetMesh& mesh() const { return *mesh_; }

  private:
    const TetMesh* mesh_;
    Point3 lo_{}, hi_{};
    detail::UniformGrid<std::array<Point3, 2>> grid_;
    std::vector<std::array<Point3, 2>> boxes_;
    double pad_ = 0.0;
    // Per-tet walk record, kept in one place for locality.
    // Approximate weights for steering the walk; hits report exact ones.
    std::array<double, 4> walk_weights(int tet, const Point3& p) const {
        const auto& f = affine_[tet];
        const double dx = p.x - f.o.x, dy = p.y - f.o.y, dt = p.t - f.o.t;
        std::array<double, 4> w{};
        w[1] = f.m[0] * dx + f.m[1] * dy + f.m[2] * dt;
        w[2] = f.m[3] * dx + f.m[4] * dy + f.m[5] * dt;
        w[3] = f.m[6] * dx + f.m[7] * dy + f.m[8] * dt;
        w[0] = 1.0 - w[1] - w[2] - w[3];
        return w;
    }

    struct alignas(64) Affine {
        Point3 o{};
        std::array<double, 9> m{};          // maps p - o to the weights of nodes 1..3
        std::array<int, 4> nb{-1, -1, -1, -1}; // tet across the face opposite node k
        bool degenerate = false;
    };
    std::vector<Affine> affine_;
    std::array<int, 3> sn_{1, 1, 1};
    Point3 sinv_{};
    std::vector<int> seeds_; // per cell: tet with centroid nearest the cell center

    std::size_t seed_cell(const Point3& p) const {
        auto c = [](double v, int m) { return std::clamp(static_cast<int>(std::floor(v)), 0, m - 1); };
        const int x = c((p.x - lo_.x) * sinv_.x, sn_[0]), y = c((p.y - lo_.y) * sinv_.y, sn_[1]),
                  z = c((p.t - lo_.t) * sinv_.t, sn_[2]);
        return (static_cast<std::size_t>(z) * sn_[1] + y) * sn_[0] + x;
    }

    void build_seeds() {
        const Point3 ext = hi_ - lo_;
        const std::array<double, 3> e{ext.x, ext.y, ext.t};
        const double side = std::cbrt(std::max(e[0], 1e-300) * std::max(e[1], 1e-300) * std::max(e[2], 1e-300) /
                                      static_cast<double>(mesh_->tets.size()));
        for (int k = 0; k < 3; ++k) sn_[k] = e[k] > 0.0 ? std::clamp(static_cast<int>(std::ceil(e[k] / side)), 1, 256) : 1;
        sinv_ = {e[0] > 0 ? sn_[0] / e[0] : 0.0, e[1] > 0 ? sn_[1] / e[1] : 0.0, e[2] > 0 ? sn_[2] / e[2] : 0.0};
        const std::size_t total = static_cast<std::size_t>(sn_[0]) * sn_[1] * sn_[2];
        seeds_.assign(total, -1);
        std::vector<double> dist(total, std::numeric_limits<double>::infinity());
        auto center = [&](std::size_t c) {
            const auto x = static_cast<double>(c % sn_[0]), y = static_cast<double>((c / sn_[0]) % sn_[1]),
                       z = static_cast<double>(c / (static_cast<std::size_t>(sn_[0]) * sn_[1]));
            return Point3{lo_.x + (x + 0.5) * e[0] / sn_[0], lo_.y + (y + 0.5) * e[1] / sn_[1],
                          lo_.t + (z + 0.5) * e[2] / sn_[2]};
        };
        for (int i = 0; i < static_cast<int>(mesh_->tets.size()); ++i) {
            if (affine_[i].degenerate) continue;
            Point3 g{};
            for (NodeId v : mesh_->tets[i]) g = g + 0.25 * mesh_->nodes[v];
            const auto c = seed_cell(g);
            const double d = norm(g - center(c));
            if (d < dist[c]) {
                dist[c] = d;
                seeds_[c] = i;
            }
        }
        // Empty cells borrow a neighbour's seed, sweeping until filled.
        for (bool changed = true; changed;) {
            changed = false;
            const auto prev = seeds_;
            for (std::size_t c = 0; c < total; ++c) {
                if (prev[c] >= 0) continue;
                const int x = static_cast<int>(c % sn_[0]), y = static_cast<int>((c / sn_[0]) % sn_[1]),
                          z = static_cast<int>(c / (static_cast<std::size_t>(sn_[0]) * sn_[1]));
                for (const auto& d : {std::array{-1, 0, 0}, std::array{1, 0, 0}, std::array{0, -1, 0},
                                      std::array{0, 1, 0}, std::array{0, 0, -1}, std::array{0, 0, 1}}) {
                    const int a = x + d[0], b = y + d[1], k = z + d[2];
                    if (a < 0 || b < 0 || k < 0 || a >= sn_[0] || b >= sn_[1] || k >= sn_[2]) continue;
                    const int s = prev[(static_cast<std::size_t>(k) * sn_[1] + b) * sn_[0] + a];
                    if (s >= 0) {
                        seeds_[c] = s;
                        changed = true;
                        break;
                    }
                }
            }
        }
    }
};

/// PL value at (p, t) with t in embedded time units.  `values` is aligned
/// with the mesh nodes.  Throws NotFound outside the mesh.
inline double interp_pl(const std::vector<double>& values, const PointLocator& loc, const Point2& p, double t) {
    const auto hit = loc.locate({p.x, p.y, t});
    if (!hit) throw NotFound();
    const auto& tet = loc.mesh().tets[hit->tet];
    double v = 0.0;
    for (int k = 0; k < 4; ++k) v += hit->weights[k] * values[tet[k]];
    return v;
}

inline double interp_pl(const ScalarField& f, const PointLocator& loc, const Point2& p, double t) {
    return interp_pl(f.flatten(), loc, p, t);
}

/// Prismatic mesh of the identity next map over layers sharing one mesh.
inline TetMesh build_sl_mesh(const LayerSequence& seq, const MesherConfig& cfg = {}) {
    LayerSequence id = seq;
    for (std::size_t i = 0; i + 1 < seq.layers.size(); ++i) {
        if (seq.layers[i].nodes.size() != seq.layers[i + 1].nodes.size()) {
            throw SchemaError("identity connectivity needs equal node counts in consecutive layers");
        }
        id.nexts[i].next.resize(seq.layers[i].nodes.size());
        for (NodeId v = 0; v < static_cast<NodeId>(seq.layers[i].nodes.size()); ++v) id.nexts[i].next[v] = v;
    }
    return mesh_spacetime_sequence(id, cfg);
}

/// SL value: PL over the identity-connectivity prismatic mesh.
inline double interp_sl(const std::vector<double>& values, const PointLocator& sl_loc, const Point2& p, double t) {
    return interp_pl(values, sl_loc, p, t);
}

/// Field-following evaluation between the two layers bracketing t.
class MFInterpolator {
  public:
    MFInterpolator(const LayerSequence& seq, const ScalarField& f, FlowOracle oracle)
        : seq_(&seq), field_(&f), oracle_(std::move(oracle)) {
        f.check(seq);
        for (const auto& l : seq.layers) locators_.emplace_back(l);
    }

    /// t in embedded units; the oracle sees layer units.
    double operator()(const Point2& p, double t) const {
        const double s = (t - seq_->t0) / seq_->dt;
        const int last = static_cast<int>(seq_->layers.size()) - 1;
        if (s < -1e-12 || s > last + 1e-12) throw OutOfDomain("time outside the sequence");
        int i = std::clamp(static_cast<int>(std::floor(s)), 0, std::max(0, last - 1));
        if (last == 0) return locators_[0].interpolate(field_->layers[0], p);
        const double beta = static_cast<double>(i + 1) - s;
        double v = 0.0;
        if (beta != 0.0) {
            v += beta * locators_[i].interpolate(field_->layers[i], oracle_(p, s, static_cast<double>(i)));
        }
        if (beta != 1.0) {
            v += (1.0 - beta) *
                 locators_[i + 1].interpolate(field_->layers[i + 1], oracle_(p, s, static_cast<double>(i + 1)));
        }
        return v;
    }

  private:
    const LayerSequence* seq_;
    const ScalarField* field_;
    FlowOracle oracle_;
    std::vector<TriLocator2D> locators_;
};

inline double interp_mf(const LayerSequence& seq, const ScalarField& f, const FlowOracle& oracle, const Point2& p,
                        double t) {
    return MFInterpolator(seq, f, oracle)(p, t);
}

/// Evaluates `eval` at every node position of `positions` in parallel.
inline std::vector<double> evaluate_batch(const std::vector<Point2>& positions, double t,
                                          const std::function<double(const Point2&, double)>& eval, int threads) {
    std::vector<double> out(positions.size());
    parallel_for(positions.size(), threads, [&](std::size_t i) { out[i] = eval(positions[i], t); });
    return out;
}

/// Virtual layer at t_query: PL values at the node positions of `layer`.
inline std::vector<double> upsample(const std::vector<double>& values, const PointLocator& loc, const TriMesh2D& layer,
                                    double t_query, int threads = 1) {
    return evaluate_batch(
        layer.nodes, t_query, [&](const Point2& p, double t) { return interp_pl(values, loc, p, t); }, threads);
}

struct MaskedValues {
    std::vector<double> values;     // 0 where masked out
    std::vector<std::uint8_t> mask; // 1 where the point lies inside the mesh
};

/// Like upsample, but nodes outside the spacetime hull at t_query are masked
/// instead of raising.  Under deformation the hull cross-section between
/// layers can shrink away from boundary nodes.
inline MaskedValues upsample_masked(const std::vector<double>& values, const PointLocator& loc,
                                    const TriMesh2D& layer, double t_query, int threads = 1) {
    MaskedValues out;
    out.values.assign(layer.nodes.size(), 0.0);
    out.mask.assign(layer.nodes.size(), 0);
    parallel_for(layer.nodes.size(), threads, [&](std::size_t i) {
        const auto& p = layer.nodes[i];
        const auto hit = loc.locate({p.x, p.y, t_query});
        if (!hit) return;
        const auto& tet = loc.mesh().tets[hit->tet];
        double v = 0.0;
        for (int k = 0; k < 4; ++k) v += hit->weights[k] * values[tet[k]];
        out.values[i] = v;
        out.mask[i] = 1;
    });
    return out;
}

struct Grid3 {
    std::array<int, 3> dims{};
    Point3 origin{};
    Point3 spacing{};
    std::vector<double> values;    // x fastest, then y, then t
    std::vector<std::uint8_t> mask; // 1 inside the domain
};

/// Samples on a regular grid spanning [lo, hi].  Points outside the domain
/// get value 0 and mask 0.
inline Grid3 resample_grid(const std::function<double(const Point2&, double)>& eval, const Point3& lo,
                           const Point3& hi, std::array<int, 3> res, int threads = 1) {
    for (int r : res) {
        if (r < 2) throw Error("grid resolution must be at least 2 per axis");
    }
    Grid3 g;
    g.dims = res;
    g.origin = lo;
    g.spacing = {(hi.x - lo.x) / (res[0] - 1), (hi.y - lo.y) / (res[1] - 1), (hi.t - lo.t) / (res[2] - 1)};
    const std::size_t n = static_cast<std::size_t>(res[0]) * res[1] * res[2];
    g.values.assign(n, 0.0);
    g.mask.assign(n, 0);
    parallel_for(n, threads, [&](std::size_t idx) {
        const int x = static_cast<int>(idx % res[0]);
        const int y = static_cast<int>((idx / res[0]) % res[1]);
        const int z = static_cast<int>(idx / (static_cast<std::size_t>(res[0]) * res[1]));
        const Point2 p{lo.x + x * g.spacing.x, lo.y + y * g.spacing.y};
        const double t = lo.t + z * g.spacing.t;
        try {
            g.values[idx] = eval(p, t);
            g.mask[idx] = 1;
        } catch (const NotFound&) {
        } catch (const OutOfDomain&) {
        }
    });
    return g;
}

struct PsnrResult {
    double mse = 0.0;
    double psnr_db = 0.0;
};

/// Mean squared error and PSNR with peak = max |reference|.
inline PsnrResult psnr(const std::vector<double>& reference, const std::vector<double>& test) {
    if (reference.empty()) throw EmptyInput();
    if (reference.size() != test.size()) throw Error("psnr needs arrays of equal length");
    double sum = 0.0, peak = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const double d = reference[i] - test[i];
        sum += d * d;
        peak = std::max(peak, std::abs(reference[i]));
    }
    PsnrResult r;
    r.mse = sum / static_cast<double>(reference.size());
    r.psnr_db = r.mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(peak * peak / r.mse);
    return r;
}

} // namespace stmesh
