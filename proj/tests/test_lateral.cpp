#include "support.hpp"

#include <gtest/gtest.h>

using namespace stmesh;
using namespace testsupport;

namespace {

const std::array<Point3, 6> kStraight{Point3{0, 0, 0}, Point3{1, 0, 0}, Point3{0, 1, 0},
                                      Point3{0, 0, 1}, Point3{1, 0, 1}, Point3{0, 1, 1}};

// Ten-node strip; ids 5 and 7 share an edge, 5 and 9 do not.
SpacetimeLayerPair strip_pair() {
    TriMesh2D m;
    for (int i = 0; i < 5; ++i) {
        m.nodes.push_back({double(i), 0.0});
        m.nodes.push_back({double(i), 1.0});
    }
    // Bottom row ids 0,2,4,6,8; top row ids 1,3,5,7,9.
    for (int i = 0; i < 4; ++i) {
        const NodeId a = 2 * i, b = 2 * i + 2, c = 2 * i + 3, d = 2 * i + 1;
        m.triangles.push_back({a, b, c});
        m.triangles.push_back({a, c, d});
    }
    NextNodeMap id;
    for (NodeId v = 0; v < 10; ++v) id.next.push_back(v);
    return build_layer_pair(m, m, id, 1.0);
}

} // namespace

TEST(StaircaseQuadSplit, SmallerLowerJoinsImageOfLarger) {
    const auto p = strip_pair();
    const Edge d = staircase_quad_split(5, 7, p);
    EXPECT_EQ(d, (Edge{5, p.next_id(7)}));
    EXPECT_EQ(staircase_quad_split(7, 5, p), d);
}

TEST(StaircaseQuadSplit, NonEdgeThrows) {
    const auto p = strip_pair();
    EXPECT_THROW(staircase_quad_split(5, 9, p), NotCuttingEdge);
}

TEST(StaircaseQuadSplit, StraightPrismQuadMatchesStaircaseTets) {
    const auto p = prism_pair({Point2{0, 0}, Point2{1, 0}, Point2{0, 1}}, {Point2{0, 0}, Point2{1, 0}, Point2{0, 1}});
    const Edge d = staircase_quad_split(0, 1, p);
    EXPECT_EQ(d, (Edge{0, 4}));
    // The diagonal a0-b1 is an edge of the staircase tet a0 a1 b1 b2.
    const auto st = staircase_oracle(p.lower);
    EXPECT_TRUE(st.count(TetIdx{0, 1, 4, 5}));
}

TEST(PentaSplits, FanAtN1) {
    const PentaFace f{1, 4, 14, 16, 11};
    const auto splits = enumerate_penta_splits(f);
    const std::set<TriIdx> fan{sorted_tri({1, 4, 14}), sorted_tri({1, 14, 16}), sorted_tri({1, 16, 11})};
    std::set<TriIdx> got;
    for (const auto& t : splits[0]) got.insert(sorted_tri(t));
    EXPECT_EQ(got, fan);
}

TEST(PentaSplits, ThreeOfFivePentagonTriangulations) {
    const PentaFace f{1, 4, 14, 16, 11};
    const std::vector<NodeId> cyc{f.n1, f.n4, f.n4p, f.n6p, f.n1p};
    const std::set<NodeId> upper{f.n4p, f.n6p, f.n1p};
    // Independent enumeration: the 5 fans of a pentagon.
    int allowed = 0;
    std::set<std::set<TriIdx>> allowed_sets;
    for (int apex = 0; apex < 5; ++apex) {
        const NodeId a = cyc[apex], b = cyc[(apex + 2) % 5], c = cyc[(apex + 3) % 5];
        const bool bad = upper.count(a) && (upper.count(b) || upper.count(c));
        if (bad) continue;
        ++allowed;
        std::set<TriIdx> s;
        for (int k = 1; k <= 3; ++k) s.insert(sorted_tri({a, cyc[(apex + k) % 5], cyc[(apex + k + 1) % 5]}));
        allowed_sets.insert(s);
    }
    EXPECT_EQ(allowed, 3);
    std::set<std::set<TriIdx>> got;
    for (const auto& split : enumerate_penta_splits(f)) {
        EXPECT_EQ(split.size(), 3u);
        std::set<TriIdx> s;
        std::map<Edge, int> use;
        for (const auto& t : split) {
            s.insert(sorted_tri(t));
            for (int k = 0; k < 3; ++k) ++use[make_edge(t[k], t[(k + 1) % 3])];
        }
        int cycle_edges = 0, diagonals = 0;
        for (const auto& [e, c] : use) (c == 1 ? cycle_edges : diagonals)++;
        EXPECT_EQ(cycle_edges, 5);
        EXPECT_EQ(diagonals, 2);
        got.insert(s);
    }
    EXPECT_EQ(got, allowed_sets);
}

TEST(PrismCheck, StraightPrismSchemeOneValid) {
    EXPECT_EQ(check_prism_subdivision(kStraight, 1), Verdict::Valid);
}

TEST(PrismCheck, StraightPrismAllSchemesValid) {
    for (int s = 1; s <= 6; ++s) EXPECT_EQ(check_prism_subdivision(kStraight, s), Verdict::Valid) << s;
}

TEST(PrismCheck, BadSchemeId) {
    EXPECT_THROW(check_prism_subdivision(kStraight, 0), BadSchemeId);
    EXPECT_THROW(check_prism_subdivision(kStraight, 7), BadSchemeId);
}

TEST(PrismCheck, SchemeTableRows) {
    // Scheme 1 conditions: a2|b1 across a0 a1 b2 and a1|b0 across a0 b1 b2.
    const auto t = scheme_tets(1);
    EXPECT_EQ(t[0], (TetIdx{0, 1, 2, 5}));
    EXPECT_EQ(t[1], (TetIdx{0, 1, 4, 5}));
    EXPECT_EQ(t[2], (TetIdx{0, 3, 4, 5}));
    // Diagonals of every scheme as (lower, upper) per quad.
    const std::array<std::array<std::pair<int, int>, 3>, 6> diag{{
        {{{0, 4}, {1, 5}, {0, 5}}},
        {{{0, 4}, {2, 4}, {0, 5}}},
        {{{1, 3}, {1, 5}, {0, 5}}},
        {{{0, 4}, {2, 4}, {2, 3}}},
        {{{1, 3}, {2, 4}, {2, 3}}},
        {{{1, 3}, {1, 5}, {2, 3}}},
    }};
    for (int s = 1; s <= 6; ++s) {
        EXPECT_EQ(scheme_diagonal(s, 0, 1), diag[s - 1][0]) << s;
        EXPECT_EQ(scheme_diagonal(s, 1, 2), diag[s - 1][1]) << s;
        EXPECT_EQ(scheme_diagonal(s, 0, 2), diag[s - 1][2]) << s;
    }
}

TEST(PrismCheck, SchemeTetsUseOnlyItsDiagonals) {
    for (int s = 1; s <= 6; ++s) {
        std::set<std::pair<int, int>> diag;
        for (auto [i, j] : {std::pair{0, 1}, std::pair{1, 2}, std::pair{0, 2}}) diag.insert(scheme_diagonal(s, i, j));
        for (const auto& t : scheme_tets(s)) {
            for (int x = 0; x < 4; ++x)
                for (int y = 0; y < 4; ++y) {
                    const int a = t[x], b = t[y];
                    if (a < 3 && b >= 3 && b - 3 != a) EXPECT_TRUE(diag.count({a, b})) << s << " " << a << "-" << b;
                }
        }
    }
}

TEST(PrismCheck, MatchesCheckListConditions) {
    // Per scheme: (pt1, pt2, plane) for both conditions, local ids a_i = i, b_i = 3 + i.
    struct Cond {
        int p, q;
        std::array<int, 3> plane;
    };
    const std::array<std::array<Cond, 2>, 6> table{{
        {{{2, 4, {0, 1, 5}}, {1, 3, {0, 4, 5}}}},
        {{{1, 5, {0, 2, 4}}, {2, 3, {0, 4, 5}}}},
        {{{2, 3, {0, 1, 5}}, {0, 4, {1, 3, 5}}}},
        {{{1, 3, {0, 2, 4}}, {0, 5, {2, 3, 4}}}},
        {{{0, 4, {1, 2, 3}}, {1, 5, {2, 3, 4}}}},
        {{{0, 5, {1, 2, 3}}, {2, 4, {1, 3, 5}}}},
    }};
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int valid = 0, invalid = 0;
    for (int it = 0; it < 2000; ++it) {
        std::array<Point3, 6> P;
        for (int k = 0; k < 6; ++k) P[k] = {u(rng), u(rng), k < 3 ? 0.0 : 1.0};
        if (orient2d({P[0].x, P[0].y}, {P[1].x, P[1].y}, {P[2].x, P[2].y}) < 0) std::swap(P[1], P[2]);
        for (int s = 1; s <= 6; ++s) {
            bool ok = true;
            for (const auto& c : table[s - 1]) {
                ok = ok && opposite_sides(P[c.p], P[c.q], {P[c.plane[0]], P[c.plane[1]], P[c.plane[2]]}) == Side::Opposite;
            }
            const auto v = check_prism_subdivision(P, s);
            EXPECT_EQ(v == Verdict::Valid, ok) << "scheme " << s;
            (ok ? valid : invalid)++;
        }
    }
    EXPECT_GT(valid, 100);
    EXPECT_GT(invalid, 100);
}

TEST(PrismCheck, DegenerateWhenUpperNodeInLowerPlane) {
    std::array<Point3, 6> P = kStraight;
    P[5] = {0.1, 0.8, 0.0};
    EXPECT_EQ(check_prism_subdivision(P, 1), Verdict::Degenerate);
}

TEST(PrismCheck, RigidMotionInvariance) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int it = 0; it < 200; ++it) {
        const auto pair = twisted_prism(3.0 * u(rng));
        auto P = prism_points(pair);
        // Rotation about the t axis plus a translation keeps layers level.
        const double th = 3.0 * u(rng), c = std::cos(th), s = std::sin(th);
        const Point3 off{u(rng), u(rng), u(rng)};
        std::array<Point3, 6> Q;
        for (int k = 0; k < 6; ++k) Q[k] = Point3{c * P[k].x - s * P[k].y, s * P[k].x + c * P[k].y, P[k].t} + off;
        for (int sc = 1; sc <= 6; ++sc) EXPECT_EQ(check_prism_subdivision(P, sc), check_prism_subdivision(Q, sc));
    }
}

TEST(PrismCheck, ValidSchemeTetsArePositiveAndDisjoint) {
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int it = 0; it < 300; ++it) {
        const auto pair = twisted_prism(2.5 * u(rng));
        const auto P = prism_points(pair);
        for (int s = 1; s <= 6; ++s) {
            if (check_prism_subdivision(P, s) != Verdict::Valid) continue;
            const auto poly = prism_polyhedron(P, s);
            std::vector<TetIdx> tets;
            for (auto t : scheme_tets(s)) tets.push_back(orient_positive(t, poly.points));
            const auto rep = validate_polyhedron_tets(poly, tets);
            EXPECT_TRUE(rep.passed()) << "scheme " << s << ": " << rep.summary();
        }
    }
}

TEST(TriangulatePrism, StraightPrismIsStaircase) {
    const auto pair = prism_pair({Point2{0, 0}, Point2{1, 0}, Point2{0, 1}}, {Point2{0, 0}, Point2{1, 0}, Point2{0, 1}});
    const auto r = triangulate_prism(Prism{{0, 1, 2}, {3, 4, 5}}, pair.points());
    EXPECT_EQ(r.kind, PrismResult::Kind::Staircase);
    EXPECT_EQ(tet_set({r.tets.begin(), r.tets.end()}), (std::set<TetIdx>{{0, 1, 2, 5}, {0, 1, 4, 5}, {0, 3, 4, 5}}));
}

TEST(TriangulatePrism, QuasiIllPosedPrismFlipsA0B1ToA1B0) {
    const auto pair = quasi_ill_posed_prism();
    const auto P = prism_points(pair);
    EXPECT_EQ(check_prism_subdivision(P, 1), Verdict::Invalid);
    const auto r = triangulate_prism(Prism{{0, 1, 2}, {3, 4, 5}}, pair.points());
    ASSERT_EQ(r.kind, PrismResult::Kind::QuasiIllPosed);
    EXPECT_EQ(r.scheme, 3);
    // Scheme 3 differs from the staircase only on quad (0, 1).
    EXPECT_EQ(scheme_diagonal(1, 0, 1), (std::pair{0, 4}));
    EXPECT_EQ(scheme_diagonal(3, 0, 1), (std::pair{1, 3}));
    EXPECT_EQ(scheme_diagonal(1, 1, 2), scheme_diagonal(3, 1, 2));
    EXPECT_EQ(scheme_diagonal(1, 0, 2), scheme_diagonal(3, 0, 2));
}

TEST(TriangulatePrism, AllSchemesInvalidBeyondTwoThirdsOfAPi) {
    for (double th : {2.3, 2.6, 3.0, -2.3, -2.6, -3.0}) {
        const auto P = prism_points(twisted_prism(th));
        for (int s = 1; s <= 6; ++s) EXPECT_NE(check_prism_subdivision(P, s), Verdict::Valid) << th << " " << s;
        EXPECT_EQ(triangulate_prism(Prism{{0, 1, 2}, {3, 4, 5}}, twisted_prism(th).points()).kind,
                  PrismResult::Kind::IllPosed);
    }
}

TEST(TriangulatePrism, QuarterTurnKeepsThreeSchemes) {
    // b_i = R(pi/2) a_i: the schemes whose shared diagonals lean with the
    // twist survive; the opposite three fail.
    const auto P = prism_points(twisted_prism(std::numbers::pi / 2));
    std::vector<int> valid;
    for (int s = 1; s <= 6; ++s)
        if (check_prism_subdivision(P, s) == Verdict::Valid) valid.push_back(s);
    EXPECT_EQ(valid, (std::vector<int>{2, 3, 5}));
    const auto Q = prism_points(twisted_prism(-std::numbers::pi / 2));
    valid.clear();
    for (int s = 1; s <= 6; ++s)
        if (check_prism_subdivision(Q, s) == Verdict::Valid) valid.push_back(s);
    EXPECT_EQ(valid, (std::vector<int>{1, 4, 6}));
}

TEST(TriangulatePrism, StaircaseEqualsMonotonePathsForAllOrderings) {
    const std::array<Point2, 3> base{Point2{0, 0}, Point2{1, 0}, Point2{0, 1}};
    std::array<int, 3> perm{0, 1, 2};
    do {
        // Lower node i gets id perm[i]; upper ids follow.
        TriMesh2D lo;
        lo.nodes.resize(3);
        for (int i = 0; i < 3; ++i) lo.nodes[perm[i]] = base[i];
        lo.triangles.push_back({perm[0], perm[1], perm[2]});
        if (orient2d(lo.nodes[lo.triangles[0][0]], lo.nodes[lo.triangles[0][1]], lo.nodes[lo.triangles[0][2]]) < 0)
            std::swap(lo.triangles[0][1], lo.triangles[0][2]);
        const auto pair = build_layer_pair(lo, lo, NextNodeMap{{0, 1, 2}}, 1.0);
        const auto r = triangulate_prism(Prism{{0, 1, 2}, {3, 4, 5}}, pair.points());
        EXPECT_EQ(r.kind, PrismResult::Kind::Staircase);
        EXPECT_EQ(tet_set({r.tets.begin(), r.tets.end()}), staircase_oracle(lo));
    } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST(LateralSchemes, CountsAndGrayOrder) {
    auto drain = [](LateralSchemeIterator it) {
        std::vector<LateralScheme> out;
        while (auto s = it.next()) out.push_back(*s);
        return out;
    };
    const auto three = drain(LateralSchemeIterator({2, 2, 2}, {}));
    ASSERT_EQ(three.size(), 8u);
    EXPECT_EQ(three.front(), (LateralScheme{0, 0, 0}));
    EXPECT_EQ(std::set<LateralScheme>(three.begin(), three.end()).size(), 8u);
    for (std::size_t i = 1; i < three.size(); ++i) {
        int diff = 0;
        for (int k = 0; k < 3; ++k) diff += three[i][k] != three[i - 1][k];
        EXPECT_EQ(diff, 1);
    }
    EXPECT_EQ(drain(LateralSchemeIterator({2, 3}, {})).size(), 6u);
    const auto locked = drain(LateralSchemeIterator({2, 3}, {std::optional<std::size_t>{1}, std::optional<std::size_t>{2}}));
    ASSERT_EQ(locked.size(), 1u);
    EXPECT_EQ(locked[0], (LateralScheme{1, 2}));
}

TEST(LateralSchemes, LockedFaceNeverFlips) {
    LateralSchemeIterator it({2, 2, 3}, {std::nullopt, std::optional<std::size_t>{1}, std::nullopt});
    int n = 0;
    while (auto s = it.next()) {
        EXPECT_EQ((*s)[1], 1u);
        ++n;
    }
    EXPECT_EQ(n, 6);
}

TEST(LateralFaces, QuadHasTwoChoicesPentaThree) {
    EXPECT_EQ(choice_count(LateralFace{{0, 1}, {10, 11}}), 2u);
    EXPECT_EQ(choice_count(LateralFace{{0, 1}, {10, 12, 11}}), 3u);
    const LateralFace q{{0, 1}, {10, 11}};
    EXPECT_EQ(face_diagonals(q, canonical_path(q)), (std::vector<Edge>{{0, 11}}));
}
