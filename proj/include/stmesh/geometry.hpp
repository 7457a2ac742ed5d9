#pragma once

// Floating-point predicates and primitives shared by the mesher, the
// validator and the interpolation engine.  All predicates are plain double
// determinants compared against a configurable tolerance.

#include <stmesh/errors.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace stmesh {

struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double t = 0.0;

    friend Point3 operator+(const Point3& a, const Point3& b) { return {a.x + b.x, a.y + b.y, a.t + b.t}; }
    friend Point3 operator-(const Point3& a, const Point3& b) { return {a.x - b.x, a.y - b.y, a.t - b.t}; }
    friend Point3 operator*(double s, const Point3& a) { return {s * a.x, s * a.y, s * a.t}; }
    friend bool operator==(const Point3&, const Point3&) = default;

    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(t); }
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point2&, const Point2&) = default;
};

inline double dot(const Point3& a, const Point3& b) { return a.x * b.x + a.y * b.y + a.t * b.t; }
inline Point3 cross(const Point3& a, const Point3& b) {
    return {a.y * b.t - a.t * b.y, a.t * b.x - a.x * b.t, a.x * b.y - a.y * b.x};
}
inline double norm(const Point3& a) { return std::sqrt(dot(a, a)); }

/// Predicate tolerance.  The effective epsilon is max(eps_abs, eps_rel * scale)
/// where scale is the bounding-box diagonal of the data the predicate runs on.
/// Orientation determinants are volumes, so they are compared against
/// effective() * scale^2.
struct Tolerance {
    double eps_abs = 0.0;
    double eps_rel = 1e-12;
    double scale = 1.0;

    double effective() const { return std::max(eps_abs, eps_rel * scale); }
    double volume_eps() const { return effective() * scale * scale; }
    double area_eps() const { return effective() * scale; }

    Tolerance with_scale(double s) const {
        Tolerance r = *this;
        r.scale = s > 0.0 ? s : 1.0;
        return r;
    }
};

inline double det3(const Point3& a, const Point3& b, const Point3& c, const Point3& d) {
    const Point3 u = b - a, v = c - a, w = d - a;
    return dot(u, cross(v, w));
}

/// Sign of det[b-a, c-a, d-a]; zero when |det| is within tolerance.
inline int orient3d(const Point3& a, const Point3& b, const Point3& c, const Point3& d, const Tolerance& tol = {}) {
    const double det = det3(a, b, c, d);
    if (std::abs(det) <= tol.volume_eps()) {
        return 0;
    }
    return det > 0.0 ? 1 : -1;
}

inline double tet_volume(const Point3& a, const Point3& b, const Point3& c, const Point3& d) {
    return det3(a, b, c, d) / 6.0;
}

enum class Side { Opposite, Same, Degenerate };

inline bool collinear(const Point3& a, const Point3& b, const Point3& c, const Tolerance& tol) {
    return norm(cross(b - a, c - a)) <= tol.area_eps();
}

/// Whether p and q lie strictly on different sides of the plane through the
/// triangle.  Symmetric in p and q.
inline Side opposite_sides(const Point3& p, const Point3& q, const std::array<Point3, 3>& plane,
                           const Tolerance& tol = {}) {
    if (collinear(plane[0], plane[1], plane[2], tol)) {
        throw CollinearPlane();
    }
    const int sp = orient3d(plane[0], plane[1], plane[2], p, tol);
    const int sq = orient3d(plane[0], plane[1], plane[2], q, tol);
    if (sp == 0 || sq == 0) {
        return Side::Degenerate;
    }
    return sp != sq ? Side::Opposite : Side::Same;
}

/// Barycentric weights of p with respect to a tetrahedron.
inline std::array<double, 4> barycentric(const std::array<Point3, 4>& v, const Point3& p, const Tolerance& tol = {}) {
    const double det = det3(v[0], v[1], v[2], v[3]);
    if (std::abs(det) <= tol.volume_eps()) {
        throw DegenerateTet();
    }
    std::array<double, 4> w{};
    w[1] = det3(v[0], p, v[2], v[3]) / det;
    w[2] = det3(v[0], v[1], p, v[3]) / det;
    w[3] = det3(v[0], v[1], v[2], p) / det;
    w[0] = 1.0 - w[1] - w[2] - w[3];
    return w;
}

inline double orient2d(const Point2& a, const Point2& b, const Point2& c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

/// Barycentric weights of p in a 2D triangle; nullopt for a degenerate triangle.
inline std::optional<std::array<double, 3>> barycentric2d(const std::array<Point2, 3>& v, const Point2& p) {
    const double det = orient2d(v[0], v[1], v[2]);
    if (det == 0.0) {
        return std::nullopt;
    }
    std::array<double, 3> w{};
    w[1] = orient2d(v[0], p, v[2]) / det;
    w[2] = orient2d(v[0], v[1], p) / det;
    w[0] = 1.0 - w[1] - w[2];
    return w;
}

using NodeId = std::int32_t;
using TriIdx = std::array<NodeId, 3>;

/// Non-owning view of a closed, outward-oriented triangulated surface.
struct SurfaceView {
    std::span<const Point3> points;
    std::span<const TriIdx> triangles;
};

namespace detail {

// Closed-triangle test for a point known to lie in the triangle's plane.
inline bool point_in_triangle_coplanar(const Point3& p, const Point3& a, const Point3& b, const Point3& c,
                                       const Tolerance& tol) {
    const Point3 n = cross(b - a, c - a);
    const double nn = norm(n);
    if (nn == 0.0) {
        return false;
    }
    const double e = tol.area_eps() * nn;
    const double s0 = dot(cross(b - a, p - a), n);
    const double s1 = dot(cross(c - b, p - b), n);
    const double s2 = dot(cross(a - c, p - c), n);
    return s0 >= -e && s1 >= -e && s2 >= -e;
}

inline double point_plane_distance(const Point3& p, const Point3& a, const Point3& b, const Point3& c) {
    const Point3 n = cross(b - a, c - a);
    const double nn = norm(n);
    return nn == 0.0 ? 0.0 : dot(p - a, n) / nn;
}

// 2D segment intersection after projecting onto the dominant plane of n.
inline bool coplanar_segments_intersect(const Point3& p, const Point3& q, const Point3& a, const Point3& b,
                                        const Point3& n, double eps) {
    const double ax = std::abs(n.x), ay = std::abs(n.y), at = std::abs(n.t);
    auto proj = [&](const Point3& v) -> Point2 {
        if (at >= ax && at >= ay) {
            return {v.x, v.y};
        }
        if (ay >= ax) {
            return {v.x, v.t};
        }
        return {v.y, v.t};
    };
    const Point2 P = proj(p), Q = proj(q), A = proj(a), B = proj(b);
    const double d1 = orient2d(A, B, P), d2 = orient2d(A, B, Q);
    const double d3 = orient2d(P, Q, A), d4 = orient2d(P, Q, B);
    auto sgn = [eps](double d) { return d > eps ? 1 : (d < -eps ? -1 : 0); };
    const int s1 = sgn(d1), s2 = sgn(d2), s3 = sgn(d3), s4 = sgn(d4);
    if (s1 * s2 < 0 && s3 * s4 < 0) {
        return true;
    }
    auto on_seg = [](const Point2& x, const Point2& u, const Point2& v) {
        return std::min(u.x, v.x) <= x.x && x.x <= std::max(u.x, v.x) && std::min(u.y, v.y) <= x.y &&
               x.y <= std::max(u.y, v.y);
    };
    return (s1 == 0 && on_seg(P, A, B)) || (s2 == 0 && on_seg(Q, A, B)) || (s3 == 0 && on_seg(A, P, Q)) ||
           (s4 == 0 && on_seg(B, P, Q));
}

} // namespace detail

/// Whether the closed segment pq meets the closed triangle abc.  Touching
/// counts; callers exclude shared vertices themselves.
inline bool segment_hits_triangle(const Point3& p, const Point3& q, const Point3& a, const Point3& b, const Point3& c,
                                  const Tolerance& tol) {
    const int op = orient3d(a, b, c, p, tol);
    const int oq = orient3d(a, b, c, q, tol);
    if (op != 0 && op == oq) {
        return false;
    }
    if (op == 0 && oq == 0) {
        // Coplanar: overlap iff an endpoint is inside or the segment crosses an edge.
        const Point3 n = cross(b - a, c - a);
        if (detail::point_in_triangle_coplanar(p, a, b, c, tol) || detail::point_in_triangle_coplanar(q, a, b, c, tol)) {
            return true;
        }
        const double eps = tol.area_eps() * tol.scale;
        return detail::coplanar_segments_intersect(p, q, a, b, n, eps) ||
               detail::coplanar_segments_intersect(p, q, b, c, n, eps) ||
               detail::coplanar_segments_intersect(p, q, c, a, n, eps);
    }
    if (op == 0) {
        return detail::point_in_triangle_coplanar(p, a, b, c, tol);
    }
    if (oq == 0) {
        return detail::point_in_triangle_coplanar(q, a, b, c, tol);
    }
    // Proper straddle: the line crosses the triangle iff the three edge
    // orientations agree (zeros mean the crossing lies on an edge).
    const int s0 = orient3d(p, q, a, b, tol);
    const int s1 = orient3d(p, q, b, c, tol);
    const int s2 = orient3d(p, q, c, a, tol);
    const bool has_pos = s0 > 0 || s1 > 0 || s2 > 0;
    const bool has_neg = s0 < 0 || s1 < 0 || s2 < 0;
    return !(has_pos && has_neg);
}

/// Closed point-in-tetrahedron test (boundary counts as inside).
inline bool point_in_tet(const Point3& p, const std::array<Point3, 4>& v, const Tolerance& tol) {
    const int o = orient3d(v[0], v[1], v[2], v[3], tol);
    if (o == 0) {
        return false;
    }
    const int f0 = orient3d(p, v[1], v[2], v[3], tol);
    const int f1 = orient3d(v[0], p, v[2], v[3], tol);
    const int f2 = orient3d(v[0], v[1], p, v[3], tol);
    const int f3 = orient3d(v[0], v[1], v[2], p, tol);
    return f0 != -o && f1 != -o && f2 != -o && f3 != -o;
}

/// Parity ray cast.  Points on the surface count as inside.  The ray
/// direction is drawn from a fixed-seed generator and redrawn whenever the ray
/// grazes an edge or vertex.
inline bool point_inside_surface(const Point3& p, const SurfaceView& s, const Tolerance& tol) {
    for (const auto& tri : s.triangles) {
        const Point3 &a = s.points[tri[0]], &b = s.points[tri[1]], &c = s.points[tri[2]];
        if (orient3d(a, b, c, p, tol) == 0 && detail::point_in_triangle_coplanar(p, a, b, c, tol)) {
            return true;
        }
    }
    std::mt19937_64 rng(0x5eed5eedULL);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double far = 4.0 * tol.scale + 1.0;
    for (int attempt = 0; attempt < 64; ++attempt) {
        Point3 dir{gauss(rng), gauss(rng), gauss(rng)};
        const double len = norm(dir);
        if (len == 0.0) {
            continue;
        }
        dir = (far / len) * dir;
        const Point3 q = p + dir;
        int crossings = 0;
        bool degenerate = false;
        for (const auto& tri : s.triangles) {
            const Point3 &a = s.points[tri[0]], &b = s.points[tri[1]], &c = s.points[tri[2]];
            const int op = orient3d(a, b, c, p, tol);
            const int oq = orient3d(a, b, c, q, tol);
            if (op == oq && op != 0) {
                continue;
            }
            if (op == 0 || oq == 0) {
                degenerate = true;
                break;
            }
            const int s0 = orient3d(p, q, a, b, tol);
            const int s1 = orient3d(p, q, b, c, tol);
            const int s2 = orient3d(p, q, c, a, tol);
            if (s0 == 0 || s1 == 0 || s2 == 0) {
                const bool pos = s0 > 0 || s1 > 0 || s2 > 0;
                const bool neg = s0 < 0 || s1 < 0 || s2 < 0;
                if (!(pos && neg)) {
                    degenerate = true;
                    break;
                }
                continue;
            }
            if (s0 == s1 && s1 == s2) {
                ++crossings;
            }
        }
        if (!degenerate) {
            return (crossings % 2) == 1;
        }
    }
    return false;
}


/// Throws OpenSurface unless every edge of the surface is used by exactly two
/// triangles with opposite directions.
inline void require_closed(const SurfaceView& s) {
    std::vector<std::pair<NodeId, NodeId>> half;
    half.reserve(s.triangles.size() * 3);
    for (const auto& t : s.triangles) {
        for (int i = 0; i < 3; ++i) {
            half.emplace_back(t[i], t[(i + 1) % 3]);
        }
    }
    std::sort(half.begin(), half.end());
    if (std::adjacent_find(half.begin(), half.end()) != half.end()) {
        throw OpenSurface("directed edge used twice");
    }
    for (const auto& [u, v] : half) {
        if (!std::binary_search(half.begin(), half.end(), std::make_pair(v, u))) {
            throw OpenSurface("edge " + std::to_string(u) + "-" + std::to_string(v) + " has one triangle");
        }
    }
}

/// Whether the segment between surface nodes a and b lies inside the closed
/// polyhedron: it may not cross any boundary triangle away from its endpoints
/// and its midpoint may not be outside.  Boundary edges and segments lying in
/// the surface count as inside.
inline bool segment_inside_polyhedron(NodeId a, NodeId b, const SurfaceView& s, const Tolerance& tol,
                                      bool check_closed = true) {
    if (check_closed) {
        require_closed(s);
    }
    const Point3& pa = s.points[a];
    const Point3& pb = s.points[b];
    for (const auto& t : s.triangles) {
        const bool ha = t[0] == a || t[1] == a || t[2] == a;
        const bool hb = t[0] == b || t[1] == b || t[2] == b;
        if (ha && hb) {
            return true;
        }
    }
    for (const auto& t : s.triangles) {
        const bool ha = t[0] == a || t[1] == a || t[2] == a;
        const bool hb = t[0] == b || t[1] == b || t[2] == b;
        if (ha || hb) {
            continue;
        }
        const Point3 &x = s.points[t[0]], &y = s.points[t[1]], &z = s.points[t[2]];
        if (!segment_hits_triangle(pa, pb, x, y, z, tol)) {
            continue;
        }
        if (orient3d(x, y, z, pa, tol) == 0 && orient3d(x, y, z, pb, tol) == 0) {
            continue; // lies in the surface
        }
        return false;
    }
    return point_inside_surface(0.5 * (pa + pb), s, tol);
}

} // namespace stmesh
