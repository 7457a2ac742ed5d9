#include "support.hpp"

#include <gtest/gtest.h>

using namespace stmesh;
using namespace testsupport;

TEST(Orient3d, UnitTetIsPositive) {
    EXPECT_EQ(orient3d({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}), 1);
}

TEST(Orient3d, CoplanarIsZero) {
    EXPECT_EQ(orient3d({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}), 0);
}

TEST(Orient3d, MirrorIsNegative) {
    EXPECT_EQ(orient3d({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, -1}), -1);
}

TEST(Orient3d, ToleranceAbsorbsTinyVolumes) {
    const Point3 d{0.3, 0.3, 1e-14};
    EXPECT_EQ(orient3d({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, d), 0);
    EXPECT_EQ(orient3d({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, d, Tolerance{0.0, 0.0, 1.0}), 1);
}

TEST(Orient3d, AntisymmetricUnderOddPermutations) {
    std::mt19937_64 rng(11);
    for (int it = 0; it < 500; ++it) {
        auto p = random_points(4, rng);
        const int o = orient3d(p[0], p[1], p[2], p[3]);
        EXPECT_EQ(orient3d(p[1], p[0], p[2], p[3]), -o);
        EXPECT_EQ(orient3d(p[0], p[2], p[1], p[3]), -o);
        EXPECT_EQ(orient3d(p[0], p[1], p[3], p[2]), -o);
        EXPECT_EQ(orient3d(p[3], p[1], p[2], p[0]), -o);
        EXPECT_EQ(orient3d(p[1], p[2], p[0], p[3]), o);
    }
}

TEST(OppositeSides, StraightPrismCondition) {
    const auto s = opposite_sides({0, 1, 0}, {1, 0, 1}, {Point3{0, 0, 0}, Point3{1, 0, 0}, Point3{0, 1, 1}});
    EXPECT_EQ(s, Side::Opposite);
    // Hand-computed determinants -1 and +1.
    EXPECT_DOUBLE_EQ(det3({0, 0, 0}, {1, 0, 0}, {0, 1, 1}, {0, 1, 0}), -1.0);
    EXPECT_DOUBLE_EQ(det3({0, 0, 0}, {1, 0, 0}, {0, 1, 1}, {1, 0, 1}), 1.0);
}

TEST(OppositeSides, SameAndDegenerate) {
    const std::array<Point3, 3> z0{Point3{0, 0, 0}, Point3{1, 0, 0}, Point3{0, 1, 0}};
    EXPECT_EQ(opposite_sides({0, 0, 1}, {0, 0, 2}, z0), Side::Same);
    EXPECT_EQ(opposite_sides({0.2, 0.2, 0}, {0, 0, 2}, z0), Side::Degenerate);
}

TEST(OppositeSides, CollinearPlaneThrows) {
    EXPECT_THROW(opposite_sides({0, 0, 1}, {0, 0, -1}, {Point3{0, 0, 0}, Point3{1, 0, 0}, Point3{2, 0, 0}}),
                 CollinearPlane);
}

TEST(OppositeSides, SymmetricInItsPoints) {
    std::mt19937_64 rng(12);
    for (int it = 0; it < 500; ++it) {
        auto p = random_points(5, rng);
        const std::array<Point3, 3> pl{p[2], p[3], p[4]};
        EXPECT_EQ(opposite_sides(p[0], p[1], pl), opposite_sides(p[1], p[0], pl));
    }
}

TEST(Barycentric, CentroidVertexAndEdgeMidpoint) {
    const std::array<Point3, 4> v{Point3{0, 0, 0}, Point3{1, 0, 0}, Point3{0, 1, 0}, Point3{0, 0, 1}};
    const auto c = barycentric(v, {0.25, 0.25, 0.25});
    for (double w : c) EXPECT_NEAR(w, 0.25, 1e-15);
    const auto w2 = barycentric(v, v[2]);
    EXPECT_NEAR(w2[0], 0.0, 1e-15);
    EXPECT_NEAR(w2[1], 0.0, 1e-15);
    EXPECT_NEAR(w2[2], 1.0, 1e-15);
    EXPECT_NEAR(w2[3], 0.0, 1e-15);
    const auto m = barycentric(v, 0.5 * (v[0] + v[1]));
    EXPECT_NEAR(m[0], 0.5, 1e-15);
    EXPECT_NEAR(m[1], 0.5, 1e-15);
}

TEST(Barycentric, DegenerateTetThrows) {
    const std::array<Point3, 4> v{Point3{0, 0, 0}, Point3{1, 0, 0}, Point3{0, 1, 0}, Point3{1, 1, 0}};
    EXPECT_THROW(barycentric(v, {0.1, 0.1, 0}), DegenerateTet);
}

TEST(Barycentric, ReproducesAffineFunctions) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int it = 0; it < 500; ++it) {
        const auto p = random_points(5, rng);
        const std::array<Point3, 4> v{p[0], p[1], p[2], p[3]};
        if (std::abs(det3(v[0], v[1], v[2], v[3])) < 1e-3) continue;
        const Point3 alpha{u(rng), u(rng), u(rng)};
        const double beta = u(rng);
        const auto f = [&](const Point3& q) { return dot(alpha, q) + beta; };
        const auto w = barycentric(v, p[4]);
        EXPECT_NEAR(w[0] + w[1] + w[2] + w[3], 1.0, 1e-12);
        const double got = w[0] * f(v[0]) + w[1] * f(v[1]) + w[2] * f(v[2]) + w[3] * f(v[3]);
        EXPECT_NEAR(got, f(p[4]), 1e-12 * (1.0 + std::abs(f(p[4]))) * 10);
    }
}

namespace {

Polyhedron straight_prism_staircase() {
    return prism_polyhedron({Point3{0, 0, 0}, Point3{1, 0, 0}, Point3{0, 1, 0}, Point3{0, 0, 1}, Point3{1, 0, 1},
                             Point3{0, 1, 1}},
                            1);
}

} // namespace

TEST(SegmentInside, StraightPrismDiagonal) {
    const auto p = straight_prism_staircase();
    EXPECT_TRUE(segment_inside_polyhedron(0, 5, p.view(), {}));
}

TEST(SegmentInside, BoundaryEdgesAreInside) {
    const auto p = straight_prism_staircase();
    for (const auto& t : p.triangles)
        for (int k = 0; k < 3; ++k) EXPECT_TRUE(segment_inside_polyhedron(t[k], t[(k + 1) % 3], p.view(), {}));
}

TEST(SegmentInside, QuasiIllPosedPrismCrossing) {
    // Scheme 3 laterals (a1b0, a1b2, a0b2): a0b1 would pierce a1a2b2.
    const auto pair = quasi_ill_posed_prism();
    const auto P = prism_points(pair);
    EXPECT_TRUE(segment_hits_triangle(P[0], P[4], P[1], P[2], P[5], {}));
    const auto poly = prism_polyhedron(P, 3);
    EXPECT_FALSE(segment_inside_polyhedron(0, 4, poly.view(), {}));
}

TEST(SegmentInside, OpenSurfaceThrows) {
    auto p = straight_prism_staircase();
    p.triangles.pop_back();
    EXPECT_THROW(segment_inside_polyhedron(0, 5, p.view(), {}), OpenSurface);
}

TEST(SegmentInside, ConvexHullChordsAreInside) {
    std::mt19937_64 rng(14);
    std::uniform_int_distribution<int> n(4, 10);
    for (int it = 0; it < 60; ++it) {
        const auto hull = convex_hull(random_points(n(rng), rng));
        const Tolerance tol = Tolerance{}.with_scale(4.0);
        for (NodeId a = 0; a < hull.size(); ++a)
            for (NodeId b = a + 1; b < hull.size(); ++b)
                EXPECT_TRUE(segment_inside_polyhedron(a, b, hull.view(), tol)) << "hull " << it << " " << a << "-" << b;
    }
}

TEST(PointInside, ConvexHullCentroid) {
    std::mt19937_64 rng(15);
    for (int it = 0; it < 40; ++it) {
        const auto hull = convex_hull(random_points(8, rng));
        Point3 c{};
        for (const auto& q : hull.points) c = c + (1.0 / hull.size()) * q;
        EXPECT_TRUE(point_inside_surface(c, hull.view(), Tolerance{}.with_scale(4.0)));
        EXPECT_FALSE(point_inside_surface({5, 5, 5}, hull.view(), Tolerance{}.with_scale(4.0)));
    }
}
