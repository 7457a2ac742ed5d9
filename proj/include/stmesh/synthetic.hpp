#pragma once

// Rotating Gaussian blobs on a ring-structured unit disk.

#include <stmesh/errors.hpp>
#include <stmesh/field.hpp>
#include <stmesh/geometry.hpp>
#include <stmesh/model.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace stmesh {

struct BlobParams {
    double C = 9.806;
    double B = 30.807;
    double omega = 2.0 * std::numbers::pi / 16.0; // 0.3927, sixteen steps per turn
    double A = 0.5;                               // blob-center radius
};

inline double eval_blobs(double x, double y, double t, const BlobParams& p = {}) {
    const double c = p.A * std::cos(p.omega * t);
    const double s = p.A * std::sin(p.omega * t);
    const double d1 = (x - c) * (x - c) + (y - s) * (y - s);
    const double d2 = (x + c) * (x + c) + (y + s) * (y + s);
    return p.C * std::exp(-p.B * d1) + p.C * std::exp(-p.B * d2);
}

namespace detail {

// Nodes on ring k (1-based) of a disk with K rings.
inline int ring_size(int k) {
    return 16 * std::max(1, static_cast<int>(std::lround(2.0 * std::numbers::pi * k / 16.0)));
}

inline int disk_node_count(int rings) {
    int n = 1;
    for (int k = 1; k <= rings; ++k) n += ring_size(k);
    return n;
}

} // namespace detail

/// Unit disk with a center node and K concentric rings.  Ring k carries
/// 16 * max(1, round(2 pi k / 16)) nodes, so the mesh is symmetric under a
/// rotation by 2 pi / 16.  Interior nodes are jittered by up to 10% of the
/// local spacing; the center and the boundary ring stay put.
inline TriMesh2D generate_disk_mesh(int target_nodes, std::uint64_t seed, double jitter = 0.1) {
    if (target_nodes < 16) throw Error("target_nodes must be at least 16");
    int rings = 1;
    while (detail::disk_node_count(rings + 1) <= target_nodes) ++rings;
    if (std::abs(detail::disk_node_count(rings + 1) - target_nodes) <
        std::abs(detail::disk_node_count(rings) - target_nodes)) {
        ++rings;
    }
    const double K = rings;

    TriMesh2D m;
    m.nodes.push_back({0.0, 0.0});
    std::vector<int> first(rings + 2, 0);
    // Half-step angular offset on odd rings, stored doubled so angles compare
    // exactly as integers.
    auto shift2 = [](int k) { return k % 2; };
    for (int k = 1; k <= rings; ++k) {
        first[k] = static_cast<int>(m.nodes.size());
        const int n = detail::ring_size(k);
        for (int j = 0; j < n; ++j) {
            const double a = 2.0 * std::numbers::pi * (j + 0.5 * shift2(k)) / n;
            m.nodes.push_back({k / K * std::cos(a), k / K * std::sin(a)});
        }
    }

    auto add = [&](NodeId a, NodeId b, NodeId c) {
        if (orient2d(m.nodes[a], m.nodes[b], m.nodes[c]) < 0.0) std::swap(b, c);
        m.triangles.push_back({a, b, c});
    };
    const int n1 = detail::ring_size(1);
    for (int j = 0; j < n1; ++j) add(0, first[1] + j, first[1] + (j + 1) % n1);
    for (int k = 1; k < rings; ++k) {
        const int na = detail::ring_size(k), nb = detail::ring_size(k + 1);
        const std::int64_t sa = shift2(k), sb = shift2(k + 1);
        int i = 0, j = 0;
        while (i < na || j < nb) {
            // Angle of inner node i+1 vs outer node j+1, as (2i+s)/2n.
            const std::int64_t ai = (2 * (i + 1) + sa) * nb, bj = (2 * (j + 1) + sb) * na;
            const bool step_inner = j == nb || (i < na && ai <= bj);
            const NodeId u = first[k] + i % na, w = first[k + 1] + j % nb;
            if (step_inner) {
                add(u, first[k] + (i + 1) % na, w);
                ++i;
            } else {
                add(u, first[k + 1] + (j + 1) % nb, w);
                ++j;
            }
        }
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 1; k < rings; ++k) {
        const int n = detail::ring_size(k);
        const double chord = 2.0 * k / K * std::sin(std::numbers::pi / n);
        const double r = jitter * std::min(1.0 / K, chord);
        for (int j = 0; j < n; ++j) {
            const double rho = r * std::sqrt(unit(rng));
            const double phi = 2.0 * std::numbers::pi * unit(rng);
            auto& p = m.nodes[first[k] + j];
            p.x += rho * std::cos(phi);
            p.y += rho * std::sin(phi);
        }
    }
    m.validate();
    return m;
}

/// next(v) = node nearest to v rotated by dtheta about the origin; ties go
/// to the lowest index.
inline NextNodeMap rotation_next_map(const TriMesh2D& mesh, double dtheta) {
    const double c = std::cos(dtheta), s = std::sin(dtheta);
    NextNodeMap nm;
    nm.next.resize(mesh.nodes.size());
    for (std::size_t v = 0; v < mesh.nodes.size(); ++v) {
        const auto& p = mesh.nodes[v];
        const double x = c * p.x - s * p.y, y = s * p.x + c * p.y;
        double best = std::numeric_limits<double>::infinity();
        NodeId arg = 0;
        for (std::size_t w = 0; w < mesh.nodes.size(); ++w) {
            const double dx = mesh.nodes[w].x - x, dy = mesh.nodes[w].y - y;
            const double d = dx * dx + dy * dy;
            if (d < best) {
                best = d;
                arg = static_cast<NodeId>(w);
            }
        }
        nm.next[v] = arg;
    }
    return nm;
}

/// Rigid rotation by omega per layer unit.
inline FlowOracle analytic_flow(double omega = BlobParams{}.omega) {
    return [omega](const Point2& p, double a, double b) {
        const double th = omega * (b - a);
        const double c = std::cos(th), s = std::sin(th);
        return Point2{c * p.x - s * p.y, s * p.x + c * p.y};
    };
}

struct SyntheticCase {
    LayerSequence seq;
    ScalarField field;
    BlobParams params;
};

/// One static disk mesh repeated over `layers` layers, linked by the
/// rotation next map, with blob values sampled at t = 0, 1, ...
inline SyntheticCase make_synthetic(int target_nodes, int layers, std::uint64_t seed, const BlobParams& params = {},
                                    double dt = 1.0) {
    if (layers < 2) throw Error("need at least two layers");
    SyntheticCase sc;
    sc.params = params;
    const TriMesh2D mesh = generate_disk_mesh(target_nodes, seed);
    const NextNodeMap next = rotation_next_map(mesh, params.omega);
    sc.seq.dt = dt;
    for (int i = 0; i < layers; ++i) {
        sc.seq.layers.push_back(mesh);
        if (i + 1 < layers) sc.seq.nexts.push_back(next);
        std::vector<double> v;
        v.reserve(mesh.nodes.size());
        for (const auto& p : mesh.nodes) v.push_back(eval_blobs(p.x, p.y, i, params));
        sc.field.layers.push_back(std::move(v));
    }
    return sc;
}

} // namespace stmesh
