#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "ctube/error.hpp"
#include "ctube/falconer.hpp"

using namespace ctube;

namespace {

constexpr double kPi = 3.14159265358979323846;

ComplexVector pt(cplx x, cplx y) {
    ComplexVector p(2);
    p << x, y;
    return p;
}

ComplexVector random_point(Rng& rng, double radius = 1) {
    for (;;) {
        double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1), c = rng.uniform(-1, 1), d = rng.uniform(-1, 1);
        if (a * a + b * b + c * c + d * d <= 1) return radius * pt({a, b}, {c, d});
    }
}

// split sets with k random centres in each of two C1-balls
SplitSets random_split(std::size_t k, Rng& rng, double delta) {
    SplitSets sp;
    ComplexVector e = random_point(rng);
    e /= e.norm();
    ComplexVector c = random_point(rng, 0.2);
    sp.b1_center = c + 0.6 * e;
    sp.b2_center = c - 0.6 * e;
    for (std::size_t i = 0; i < k; ++i) {
        sp.e1.balls.emplace_back(sp.b1_center + random_point(rng, kC1), delta);
        sp.e2.balls.emplace_back(sp.b2_center + random_point(rng, kC1), delta);
    }
    sp.e1.delta = sp.e2.delta = delta;
    return sp;
}

std::uint64_t greedy_cover(std::vector<cplx> values, double delta) {
    std::uint64_t count = 0;
    std::vector<bool> covered(values.size(), false);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (covered[i]) continue;
        ++count;
        for (std::size_t j = i; j < values.size(); ++j)
            if (std::abs(values[j] - values[i]) <= delta) covered[j] = true;
    }
    return count;
}

// the line through G(a, b): point + (a + ib) v, written out in real coordinates
std::array<double, 6> g_real(const ComplexVector& pa, const ComplexVector& pb, double al, double be) {
    double a1 = pa(0).real(), b1 = pa(0).imag(), c1 = pa(1).real(), d1 = pa(1).imag();
    double a3 = pb(0).real(), b3 = pb(0).imag(), c3 = pb(1).real(), d3 = pb(1).imag();
    std::array<double, 6> g{(a1 + a3) / 2, (b1 + b3) / 2, (c1 + c3) / 2, (d1 + d3) / 2, 0, 0};
    const double va[6] = {(c1 - c3) / 2, (d1 - d3) / 2, -(a1 - a3) / 2, -(b1 - b3) / 2, 1, 0};
    const double vb[6] = {-(d1 - d3) / 2, (c1 - c3) / 2, (b1 - b3) / 2, -(a1 - a3) / 2, 0, 1};
    for (int i = 0; i < 6; ++i) g[i] += al * va[i] + be * vb[i];
    return g;
}

}  // namespace

TEST_CASE("complex distance examples") {
    CHECK(complex_distance(pt(3, 4), pt(0, 0)) == cplx(25, 0));
    CHECK(complex_distance(pt({0, 1}, 0), pt(0, 0)) == cplx(-1, 0));
}

TEST_CASE("complex distance symmetry and translation invariance") {
    Rng rng(11);
    for (int i = 0; i < 1000; ++i) {
        ComplexVector p = random_point(rng), q = random_point(rng), t = random_point(rng);
        CHECK(complex_distance(p, q) == complex_distance(q, p));
        CHECK(std::abs(complex_distance(p + t, q + t) - complex_distance(p, q)) <= 1e-14);
    }
    // exact on dyadic coordinates, where the translated differences are exact
    for (int i = 0; i < 1000; ++i) {
        auto dy = [&] { return std::ldexp(static_cast<double>(static_cast<long>(rng.below(2048)) - 1024), -10); };
        ComplexVector p = pt({dy(), dy()}, {dy(), dy()}), q = pt({dy(), dy()}, {dy(), dy()}), t = pt({dy(), dy()}, {dy(), dy()});
        CHECK(complex_distance(p + t, q + t) == complex_distance(p, q));
    }
}

TEST_CASE("auxiliary line examples") {
    ComplexLine l0 = aux_line(pt(0, 0), pt(0, 0));
    CHECK(l0.point.norm() == 0);
    CHECK(std::abs(l0.direction(2) - 1.0) < 1e-15);
    CHECK(std::abs(l0.direction(0)) + std::abs(l0.direction(1)) == 0);

    ComplexLine l = aux_line(pt(2, 0), pt(0, 0));
    for (cplx z : {cplx(0, 0), cplx(0.3, -0.2), cplx(-2, 5)}) {
        ComplexVector x(3);
        x << 1.0 + 0.0 * z, -z, z;
        CHECK(l.distance_to(x) < 1e-12);
    }
}

TEST_CASE("A(s,t) closed form matches direct evaluation") {
    Rng rng(12);
    for (int i = 0; i < 1000; ++i) {
        ComplexVector p1 = random_point(rng), p2 = random_point(rng), p3 = random_point(rng), p4 = random_point(rng);
        cplx dx = p1(0) - p3(0) - p2(0) + p4(0), dy = p1(1) - p3(1) - p2(1) + p4(1);
        cplx gap = complex_distance(p1, p2) - complex_distance(p3, p4);
        bool xb = std::abs(dx) >= std::abs(dy);
        cplx s = xb ? (p1(1) + p3(1) - p2(1) - p4(1)) / dx : -(p1(0) + p3(0) - p2(0) - p4(0)) / dy;
        ComplexVector a = g_param(p1, p3, s.real(), s.imag()) - g_param(p2, p4, s.real(), s.imag());
        double expected = std::abs(gap) / (2 * std::abs(xb ? dx : dy));
        CHECK(std::abs(a.norm() - expected) <= 1e-10 * (1 + expected));
    }
}

TEST_CASE("G parametrisation agrees with the real-coordinate form") {
    Rng rng(13);
    for (int i = 0; i < 200; ++i) {
        ComplexVector pa = random_point(rng), pb = random_point(rng);
        double al = rng.uniform(-1, 1), be = rng.uniform(-1, 1);
        ComplexVector g = g_param(pa, pb, al, be);
        auto r = g_real(pa, pb, al, be);
        for (int k = 0; k < 3; ++k) {
            CHECK(std::abs(g(k).real() - r[2 * k]) < 1e-14);
            CHECK(std::abs(g(k).imag() - r[2 * k + 1]) < 1e-14);
        }
    }
}

TEST_CASE("point set generation") {
    CHECK_THROWS_AS(generate_point_set(1.0, 1.0 / 64, 1, 1), PreconditionError);
    CHECK_THROWS_AS(generate_point_set(2.0, 1.0 / 64, 1, 1), PreconditionError);
    CHECK_THROWS_AS(generate_point_set(1.5, 1.0 / 4096, 1, 1), PreconditionError);

    PointSet e = generate_point_set(1.5, 1.0 / 64, 1, 3);
    double target = std::pow(64.0, 1.5);
    CHECK(e.balls.size() >= target / 4);
    CHECK(e.balls.size() <= target * 4);
    CHECK(max_cell_count(e) <= 1);
    for (const Ball& q : e.balls) CHECK(q.center.norm() + q.radius <= 1 + 1e-12);

    PointSet e2 = generate_point_set(1.5, 1.0 / 32, 2, 5);
    CHECK(max_cell_count(e2) <= 2);
    for (std::size_t i = 0; i < e2.balls.size(); ++i)
        for (std::size_t j = i + 1; j < e2.balls.size(); ++j)
            CHECK((e2.balls[i].center - e2.balls[j].center).norm() >= 2 * e2.delta);

    // s near 1: about δ^{-1} balls
    PointSet e3 = generate_point_set(1.01, 1.0 / 64, 1, 3);
    CHECK(e3.balls.size() >= 64 / 4);
    CHECK(e3.balls.size() <= 64 * 4);

    CHECK(generate_point_set(1.5, 1.0 / 64, 0, 3).balls.empty());
}

TEST_CASE("point set generation is deterministic and serialises") {
    PointSet a = generate_point_set(1.5, 1.0 / 32, 1, 9), b = generate_point_set(1.5, 1.0 / 32, 1, 9);
    REQUIRE(a.balls.size() == b.balls.size());
    for (std::size_t i = 0; i < a.balls.size(); ++i) CHECK(a.balls[i].center == b.balls[i].center);
    std::stringstream ss;
    write_point_set(ss, a);
    PointSet c = read_point_set(ss);
    REQUIRE(c.balls.size() == a.balls.size());
    CHECK(c.delta == a.delta);
    CHECK(c.s == a.s);
    for (std::size_t i = 0; i < a.balls.size(); ++i) CHECK(c.balls[i].center == a.balls[i].center);
    std::istringstream bad("pointset 2 0.1 1.5 1 0\n0 0 0\n");
    CHECK_THROWS_AS(read_point_set(bad), PreconditionError);
}

TEST_CASE("split sets") {
    PointSet e = generate_point_set(1.5, 1.0 / 64, 1, 3);
    SplitSets sp = split_point_set(e);
    CHECK(std::abs((sp.b1_center - sp.b2_center).norm() - kC2) < 1e-12);
    CHECK(sp.b1_center.norm() <= 1 - kC1);
    CHECK(sp.b2_center.norm() <= 1 - kC1);
    REQUIRE(!sp.e1.balls.empty());
    REQUIRE(!sp.e2.balls.empty());
    for (const Ball& q : sp.e1.balls) CHECK((q.center - sp.b1_center).norm() <= kC1);
    for (const Ball& q : sp.e2.balls) CHECK((q.center - sp.b2_center).norm() <= kC1);
    CHECK(sp.e1.balls.size() * sp.c_split >= e.balls.size() - 1e-9);
    CHECK(sp.e2.balls.size() * sp.c_split >= e.balls.size() - 1e-9);
}

TEST_CASE("tube construction") {
    Rng rng(14);
    SplitSets one = random_split(1, rng, 1.0 / 32);
    one.e1.s = one.e2.s = 1.5;
    TubeFamily f = build_tubes(one, 1.0 / 32);
    REQUIRE(f.tubes.size() == 2);
    CHECK(f.n == 3);
    CHECK(f.spacing_kind == SpacingKind::at_most_h0);
    CHECK(std::abs(f.big_w - std::pow(1.0 / 32, -1.5 / 4)) < 1e-12);
    for (const ComplexTube& t : f.tubes) {
        CHECK(std::abs(t.direction.norm() - 1) < 1e-12);
        CHECK(t.radius == 1.0 / 32);
        // the clipped segment ends on the unit sphere
        ComplexVector end = t.center + t.half_length() * t.direction;
        CHECK(std::abs(end.norm() - 1) < 1e-12);
        CHECK(std::abs(t.center.dot(t.direction)) < 1e-12);
    }
    // the two orderings give the two lines through the same midpoint
    ComplexLine l12 = aux_line(one.e1.balls[0].center, one.e2.balls[0].center);
    ComplexLine l21 = aux_line(one.e2.balls[0].center, one.e1.balls[0].center);
    CHECK((l12.point - l21.point).norm() < 1e-15);
    CHECK(f.tubes[0].distance_to_axis(l12.point) < 1e-12);
    CHECK(f.tubes[1].distance_to_axis(l21.point) < 1e-12);

    SplitSets many = random_split(5, rng, 1.0 / 32);
    CHECK(build_tubes(many, 1.0 / 32).tubes.size() == 50);
}

TEST_CASE("auxiliary direction norms lie in [m0 - eps0, m0 + eps0]") {
    const double m0 = aux_m0(), e0 = aux_eps0();
    CHECK(m0 < 2);
    // direct evaluation of the radicals
    CHECK(std::abs(m0 - 0.5 * (std::sqrt(0.61 * 0.61 + 1) + std::sqrt(0.59 * 0.59 + 1))) < 1e-15);
    CHECK(std::abs(e0 - 0.5 * (std::sqrt(0.61 * 0.61 + 1) - std::sqrt(0.59 * 0.59 + 1))) < 1e-15);
    CHECK(e0 == doctest::Approx(0.0051447).epsilon(1e-4));
    Rng rng(15);
    for (int i = 0; i < 200; ++i) {
        SplitSets sp = random_split(3, rng, 1.0 / 64);
        for (const Ball& a : sp.e1.balls)
            for (const Ball& b : sp.e2.balls) {
                double nv = aux_direction(a.center, b.center).norm();
                CHECK(nv >= m0 - e0 - 1e-12);
                CHECK(nv <= m0 + e0 + 1e-12);
            }
    }
}

TEST_CASE("generated tubes satisfy the spacing bound") {
    for (std::uint64_t seed : {1, 2}) {
        PointSet e = generate_point_set(1.5, 1.0 / 32, 1, seed);
        TubeFamily f = build_tubes(split_point_set(e), 1.0 / 32);
        SpacingReport rep = check_spacing(f, f.big_w);
        CHECK(rep.max <= 1);
    }
}

TEST_CASE("quadruple counting") {
    Rng rng(16);
    SplitSets one = random_split(1, rng, 1.0 / 64);
    CHECK(count_quadruples(one, 1.0 / 64, QuadMethod::brute).q_count >= 1);
    CHECK(count_quadruples(one, 1.0 / 64, QuadMethod::hashed).q_count >= 1);

    for (int inst = 0; inst < 20; ++inst) {
        double delta = inst % 2 ? 1.0 / 64 : 1.0 / 256;
        SplitSets sp = random_split(20, rng, delta);
        auto brute = count_quadruples(sp, delta, QuadMethod::brute);
        auto hashed = count_quadruples(sp, delta, QuadMethod::hashed);
        CHECK(brute.method == "brute");
        CHECK(hashed.method == "hashed");
        CHECK(brute.q_count == hashed.q_count);
        CHECK(hashed.q_count >= 400);
    }

    // arithmetic progressions on a real line repeat Δ values
    SplitSets ap, generic = random_split(12, rng, 1.0 / 256);
    ComplexVector e = pt(1, 0);
    ap.b1_center = pt(0.6, 0);
    ap.b2_center = pt(-0.6, 0);
    for (int k = 0; k < 12; ++k) {
        ap.e1.balls.emplace_back(ap.b1_center + (0.0015 * (k - 6)) * e, 1.0 / 256);
        ap.e2.balls.emplace_back(ap.b2_center + (0.0015 * (k - 6)) * e, 1.0 / 256);
    }
    CHECK(count_quadruples(ap, 1.0 / 256, QuadMethod::hashed).q_count >
          count_quadruples(generic, 1.0 / 256, QuadMethod::hashed).q_count);

    SplitSets big;
    big.e1.balls.assign(1001, Ball(pt(0, 0), 0.01));
    big.e2.balls.assign(1000, Ball(pt(1, 0), 0.01));
    CHECK_THROWS_AS(count_quadruples(big, 0.01, QuadMethod::brute), BudgetError);
}

TEST_CASE("covering number") {
    const double d = 1.0 / 64;
    CHECK(covering_number({cplx(0.3, 0.2)}, d) == 1);
    std::vector<cplx> line;
    for (int k = 0; k <= 10; ++k) line.push_back(cplx(3 * k * d + d / 2, d / 2));
    CHECK(covering_number(line, d) == 11);
    Rng rng(17);
    std::vector<cplx> values;
    for (int i = 0; i < 1000; ++i) values.push_back(cplx(rng.uniform(0, 0.5), rng.uniform(0, 0.5)));
    auto buckets = covering_number(values, d), greedy = greedy_cover(values, d);
    CHECK(buckets <= 9 * greedy);
    CHECK(greedy <= 9 * buckets);
}

TEST_CASE("Cauchy-Schwarz lower bound") {
    CHECK(cs_lower_bound(10, 10, 400) == 25);
    CHECK(cs_lower_bound(7, 3, 441) == 1);
    CHECK_THROWS_AS(cs_lower_bound(3, 3, 0), PreconditionError);
}

TEST_CASE("one tube claim") {
    const double delta = 1.0 / 64, s = 1.5, sep = std::pow(delta, s / 4);
    Rng rng(18);
    int checked = 0;
    while (checked < 1000) {
        std::array<ComplexVector, 4> p;
        for (auto& x : p) x = random_point(rng);
        bool ok = true;
        for (int a = 0; a < 4; ++a)
            for (int b = a + 1; b < 4; ++b) ok = ok && (p[a] - p[b]).norm() >= sep;
        if (!ok) continue;
        ++checked;
        OneTubeReport r = verify_one_tube_claim(p[0], p[1], p[2], p[3], s, delta);
        CHECK(r.parallelogram_residual < 1e-12);
        CHECK(r.holds);
        CHECK(r.separation >= sep / 32);
        CHECK(std::hypot(r.alpha, r.beta) <= 0.25 + 1e-15);
        ComplexVector diff = g_param(p[0], p[2], r.alpha, r.beta) - g_param(p[1], p[3], r.alpha, r.beta);
        CHECK(std::abs(diff.norm() - r.separation) < 1e-14);
    }

    // translate-dominant: p3 = p1 + v, p4 = p2 + v + w with small w
    ComplexVector p1 = pt(0.5, 0), p2 = pt(-0.3, 0.2), v = pt(0, 0.6), w = pt(0.001, 0);
    OneTubeReport c1 = verify_one_tube_claim(p1, p2, p1 + v, p2 + v + w, s, delta);
    CHECK(c1.case_id == 1);
    CHECK(c1.alpha == 0);
    CHECK(c1.beta == 0);
    CHECK(c1.separation >= sep / 32);

    // difference-dominant: p1 + p3 ≈ p2 + p4
    ComplexVector q1 = pt(0.5, 0), q3 = pt(-0.5, 0), q2 = pt(0, 0.4), q4 = pt(0.001, -0.4);
    OneTubeReport c2 = verify_one_tube_claim(q1, q2, q3, q4, s, delta);
    CHECK(c2.case_id == 2);
    CHECK(std::hypot(c2.alpha, c2.beta) >= 0.125 - 1e-15);
    CHECK(c2.separation >= c2.diff_gap / 32);
    CHECK(c2.holds);

    try {
        verify_one_tube_claim(p1, p2, p1 + pt(0.01, 0), p2 + v, s, delta);
        CHECK(false);
    } catch (const PreconditionError& ex) {
        CHECK(std::string(ex.what()).find("p1, p3") != std::string::npos);
    }
}

TEST_CASE("intersection proposition on generated quadruples") {
    const double delta = 1.0 / 64;
    auto quads = generate_q_quadruples(delta, 1000, 19);
    REQUIRE(quads.size() == 1000);
    for (const QQuadruple& q : quads) {
        CHECK((q.p[0] - q.b1).norm() <= kC1);
        CHECK((q.p[3] - q.b1).norm() <= kC1);
        CHECK((q.p[1] - q.b2).norm() <= kC1);
        CHECK((q.p[2] - q.b2).norm() <= kC1);
        IntersectionReport r = verify_intersection_prop(q.p[0], q.p[1], q.p[2], q.p[3], delta);
        CHECK(r.angle_ok);
        CHECK(r.distance_ok);
        CHECK(r.inside_ok);
        CHECK(r.holds);
        // the two line points lie within δ of each other
        ComplexVector a = g_param(q.p[0], q.p[2], r.s_param.real(), r.s_param.imag());
        ComplexVector b = g_param(q.p[1], q.p[3], r.s_param.real(), r.s_param.imag());
        CHECK((a - b).norm() < delta);
        CHECK(((a + b) / 2.0 - r.witness).norm() < 1e-15);
    }
}

TEST_CASE("intersection proposition special cases") {
    // (q1, q2, q2, q1): Δ(p1, p2) = Δ(p2, p1) and A vanishes at s = t = 0
    ComplexVector p1 = pt(0.6, 0.05), p2 = pt(-0.6, 0.02);
    IntersectionReport r = verify_intersection_prop(p1, p2, p2, p1, 1.0 / 64);
    CHECK(std::abs(r.s_param) == 0);
    CHECK(r.a_norm == 0);
    CHECK(r.holds);

    // both denominators vanish when p1 = p2 and p3 = p4
    ComplexVector q = pt(0.3, 0.1), o = pt(-0.2, 0.4);
    CHECK_THROWS_AS(verify_intersection_prop(q, q, o, o, 1.0 / 64), InfeasibleError);
    CHECK_THROWS_AS(verify_intersection_prop(p1, p2, p1, p2 + pt(0.2, 0), 1.0 / 64), PreconditionError);
}

TEST_CASE("Q quadruples share an incident grid ball") {
    const double delta = 1.0 / 16;
    BallGrid grid(3, delta);
    auto quads = generate_q_quadruples(delta, 30, 20);
    auto tube = [&](const ComplexVector& a, const ComplexVector& b) {
        SplitSets sp;
        sp.e1.balls.emplace_back(a, delta);
        sp.e2.balls.emplace_back(b, delta);
        sp.e1.s = 1.5;
        return build_tubes(sp, delta).tubes[0];
    };
    int shared = 0;
    for (const QQuadruple& q : quads) {
        auto ka = incident_balls(grid, tube(q.p[0], q.p[2]));
        auto kb = incident_balls(grid, tube(q.p[1], q.p[3]));
        std::set<LatticeIndex> sa(ka.begin(), ka.end());
        bool any = std::any_of(kb.begin(), kb.end(), [&](const LatticeIndex& k) { return sa.count(k) > 0; });
        shared += any;
    }
    CHECK(shared == static_cast<int>(quads.size()));
}

TEST_CASE("Falconer pipeline") {
    FalconerReport r = run_falconer(1.5, 1.0 / 32, 1, 0.1, 1);
    CHECK(r.points > 0);
    CHECK(r.e1 >= 1);
    CHECK(r.e2 >= 1);
    CHECK(r.tubes == 2 * r.e1 * r.e2);
    CHECK(r.spacing.max <= 1);
    CHECK(r.q_count >= r.e1 * r.e2);
    CHECK(static_cast<double>(r.q_count) <= r.incidence_sum);
    CHECK(9.0 * r.covering_e12 >= r.cs_lower_bound);
    CHECK(r.covering_all >= r.covering_e12);
    CHECK(r.target == doctest::Approx(std::pow(32.0, 1.4)));
    CHECK(r.pass);

    FalconerReport z = run_falconer(1.5, 1.0 / 32, 0, 0.1, 1);
    CHECK(z.points == 0);
    CHECK(z.tubes == 0);
    CHECK(z.q_count == 0);
    CHECK(z.covering_all == 0);
    CHECK(z.cs_lower_bound == 0);
}
