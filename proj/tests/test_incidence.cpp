#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "ctube/error.hpp"
#include "ctube/incidence.hpp"

using namespace ctube;

namespace {

ComplexVector cvec(std::initializer_list<cplx> xs) {
    ComplexVector v(static_cast<int>(xs.size()));
    int i = 0;
    for (cplx x : xs) v(i++) = x;
    return v;
}

ComplexVector random_in_ball(int n, double radius, Rng& rng) {
    ComplexVector v = random_unit(n, rng);
    return ComplexVector(v * (radius * std::pow(rng.uniform(), 1.0 / (2 * n))));
}

// unit vector orthogonal to u (complex inner product)
ComplexVector orthogonal_unit(const ComplexVector& u, Rng& rng) {
    ComplexVector v = random_unit(static_cast<int>(u.size()), rng);
    v -= u * u.dot(v);
    return ComplexVector(v / v.norm());
}

std::map<LatticeIndex, std::uint32_t> all_counts(const BallGrid& g, const BallCounts& c) {
    std::map<LatticeIndex, std::uint32_t> m;
    g.for_each([&](const LatticeIndex& k) {
        if (auto v = c.at(k)) m[k] = v;
    });
    return m;
}

// overlap fraction of a unit ball in R^{2n} with a unit-radius neighbourhood of a real 2-plane at distance d
double overlap_fraction_mc(int n, double d, int samples, std::uint64_t seed) {
    Rng rng(seed);
    int hit = 0;
    for (int s = 0; s < samples; ++s) {
        std::vector<double> x(2 * n);
        double r2 = 0;
        for (double& v : x) {
            v = rng.normal();
            r2 += v * v;
        }
        double scale = std::pow(rng.uniform(), 1.0 / (2 * n)) / std::sqrt(r2);
        double perp = 0;
        for (int j = 2; j < 2 * n; ++j) {
            double y = x[j] * scale + (j == 2 ? d : 0);
            perp += y * y;
        }
        hit += perp <= 1;
    }
    return static_cast<double>(hit) / samples;
}

}  // namespace

TEST_CASE("ball grid sizes and guard") {
    BallGrid g(2, 0.25);
    CHECK(g.size() >= 32);
    CHECK(g.size() <= 2048);
    CHECK(BallGrid(2, 0.9).size() >= 1);
    CHECK_THROWS_AS(BallGrid(2, std::ldexp(1.0, -11)), PreconditionError);
    CHECK_THROWS_AS(BallGrid(2, 1.0), PreconditionError);
    CHECK_THROWS_AS(BallGrid(4, 0.25), PreconditionError);

    std::uint64_t seen = 0;
    g.for_each([&](const LatticeIndex&) { ++seen; });
    CHECK(seen == g.size());

    // too many rows for per-row offsets: the size comes from the norm distribution
    BallGrid big(3, 0.1, 1.32);
    CHECK_FALSE(big.dense());
    seen = 0;
    big.for_each([&](const LatticeIndex&) { ++seen; });
    CHECK(seen == big.size());
}

TEST_CASE("grid covers B(0, 1 - delta) and centres are separated") {
    for (int n : {2, 3}) {
        double delta = n == 2 ? 0.125 : 0.25;
        BallGrid g(n, delta);
        Rng rng(n);
        for (int t = 0; t < 10000; ++t) {
            ComplexVector p = random_in_ball(n, 1 - delta, rng);
            LatticeIndex k = g.nearest(p);
            REQUIRE(g.contains(k));
            CHECK((g.center(k) - p).norm() <= delta * (1 + 1e-12));
        }
        // lattice pitch alone: nearest distinct centres differ by one pitch step
        CHECK(g.pitch() == doctest::Approx(2 * delta / std::sqrt(2.0 * n)));
    }
}

TEST_CASE("dense slots form a bijection onto [0, size)") {
    for (int n : {2, 3}) {
        BallGrid g(n, n == 2 ? 0.1 : 0.2, 0.8);
        REQUIRE(g.dense());
        std::vector<char> hit(g.size(), 0);
        bool ok = true;
        g.for_each([&](const LatticeIndex& k) {
            std::uint64_t s = g.slot(k);
            ok = ok && s < g.size() && !hit[s] && g.slot_of_cube(g.cube_index(k)) == s;
            if (s < g.size()) hit[s] = 1;
            double r2 = 0;
            for (int j = 0; j < 2 * n; ++j) r2 += double(k[j]) * k[j];
            ok = ok && r2 <= g.limit();
        });
        CHECK(ok);
        CHECK(std::count(hit.begin(), hit.end(), 1) == static_cast<long>(g.size()));
    }
}

TEST_CASE("incidence constant is the half-volume distance") {
    for (int n : {2, 3}) {
        double c = incidence_constant(n);
        double full = unit_ball_volume(2 * n);
        CHECK(ball_tube_overlap(n, 1, 1, c) / full == doctest::Approx(0.5).epsilon(1e-6));
        // independent sampling estimate straddles one half around c
        CHECK(overlap_fraction_mc(n, c * 0.97, 200000, 1) > 0.5);
        CHECK(overlap_fraction_mc(n, c * 1.03, 200000, 2) < 0.5);
    }
    CHECK(incidence_constant(2) == doctest::Approx(0.891291).epsilon(1e-5));
    CHECK(incidence_constant(3) == doctest::Approx(0.749424).epsilon(1e-5));
}

TEST_CASE("incident: axis midpoint and far balls") {
    double d = 1.0 / 16;
    ComplexTube t = ComplexTube::checked(cvec({0.1, 0.0}), cvec({1.0, 0.0}), 1, d);
    for (auto mode : {IncidenceMode::fast, IncidenceMode::oracle}) {
        CHECK(incident(Ball(cvec({0.1, 0.0}), d), t, mode));
        CHECK_FALSE(incident(Ball(cvec({0.1, cplx(0, 2 * d)}), d), t, mode));
        CHECK_FALSE(incident(Ball(cvec({0.1, 2 * d}), d), t, mode));
    }
}

TEST_CASE("fast and oracle incidence agree outside the boundary band") {
    Rng rng(77);
    for (int n : {2, 3}) {
        double delta = 1.0 / 16, dstar = incidence_constant(n) * delta;
        int compared = 0, disagree = 0;
        for (int t = 0; t < 60; ++t) {
            ComplexVector u = random_unit(n, rng);
            ComplexVector c = random_in_ball(n, 0.2, rng);
            ComplexTube tube = ComplexTube::checked(c, u, 1, delta);
            // ball centre beside the middle third of the segment
            cplx along = std::polar(rng.uniform(-0.15, 0.15), rng.uniform(0, 2 * kPi));
            double dist = rng.uniform(0.5, 1.5) * dstar;
            if (std::abs(dist - dstar) < 0.05 * delta) continue;
            ComplexVector p = c + along * u + dist * orthogonal_unit(u, rng);
            Ball q(p, delta);
            bool fast = incident(q, tube, IncidenceMode::fast);
            bool oracle = incident(q, tube, IncidenceMode::oracle, {40000, static_cast<std::uint64_t>(t), 1});
            ++compared;
            disagree += fast != oracle;
            CHECK(fast == (dist <= dstar));
        }
        CHECK(compared > 30);
        CHECK(disagree == 0);
    }
}

TEST_CASE("indexed counting equals exhaustive all-pairs counting") {
    struct Setup {
        int n;
        double delta, radius;
    };
    for (Setup s : {Setup{2, 1.0 / 16, 0.4}, Setup{3, 1.0 / 8, 0.35}}) {
        BallGrid g(s.n, s.delta, s.radius);
        CHECK(g.size() <= 10000);
        Rng rng(s.n * 31);
        std::vector<ComplexTube> tubes;
        ComplexVector e0 = ComplexVector::Zero(s.n), e1 = ComplexVector::Zero(s.n);
        e0(0) = 1;
        e1(1) = 1;
        ComplexVector diag = ComplexVector::Zero(s.n);
        diag(0) = 1 / std::sqrt(2.0);
        diag(1) = cplx(0, 1 / std::sqrt(2.0));
        ComplexVector zero = ComplexVector::Zero(s.n);
        const double L = 12 * s.delta;
        // axis-aligned and lattice-snapped tubes sit on grid ties
        tubes.push_back(ComplexTube::checked(zero, e0, L, s.delta));
        tubes.push_back(ComplexTube::checked(zero, e1, L, s.delta));
        tubes.push_back(ComplexTube::checked(zero, diag, L, s.delta));
        tubes.push_back(ComplexTube::checked(g.center(g.nearest(random_in_ball(s.n, 0.2, rng))), e1, L, s.delta));
        for (int t = 0; t < 120; ++t)
            tubes.push_back(ComplexTube::checked(random_in_ball(s.n, 0.3, rng), random_unit(s.n, rng),
                                                 rng.uniform(12 * s.delta, 1.5), s.delta));
        BallCounts fast = count_incidences(g, tubes);
        BallCounts slow = count_incidences_exhaustive(g, tubes);
        CHECK(all_counts(g, fast) == all_counts(g, slow));

        // per-tube listing matches the predicate on every grid ball
        for (std::size_t t = 0; t < 10; ++t) {
            auto listed = incident_balls(g, tubes[t]);
            std::set<LatticeIndex> a(listed.begin(), listed.end());
            CHECK(a.size() == listed.size());
            std::set<LatticeIndex> b;
            g.for_each([&](const LatticeIndex& k) {
                if (tubes[t].distance_to_segment(g.center(k)) <= incidence_constant(s.n) * s.delta) b.insert(k);
            });
            CHECK(a == b);
        }
    }
}

TEST_CASE("richness profiles of simple families") {
    double d = 1.0 / 16;
    BallGrid g(2, d);
    TubeFamily fam;
    fam.n = 2;
    fam.delta = d;
    RichnessProfile empty = richness_profile(g, fam);
    for (const auto& [r, c] : empty.entries) CHECK(c == 0);

    fam.tubes.push_back(ComplexTube::checked(cvec({0.0, 0.0}), cvec({1.0, 0.0}), 1, d));
    RichnessProfile one = richness_profile(g, fam);
    CHECK(one.at(2) == 0);
    // brute force over the grid
    std::uint64_t brute = 0;
    g.for_each([&](const LatticeIndex& k) { brute += fam.tubes[0].distance_to_segment(g.center(k)) <= 0.891291 * d; });
    CHECK(one.at(1) == brute);
    CHECK(brute > 0.5 / (d * d));
    CHECK(brute < 8 / (d * d));

    fam.tubes.push_back(ComplexTube::checked(cvec({0.0, 0.0}), cvec({0.0, 1.0}), 1, d));
    RichnessProfile two = richness_profile(g, fam);
    CHECK(two.at(2) >= 1);
    CHECK(two.at(2) <= 8);
    // oracle incidence on the crossing region
    std::uint64_t oracle2 = 0;
    g.for_each([&](const LatticeIndex& k) {
        ComplexVector c = g.center(k);
        if (c.norm() > 2 * d) return;
        Ball q(c, d);
        int cnt = 0;
        for (const auto& t : fam.tubes) cnt += incident(q, t, IncidenceMode::oracle, {40000, 5, 1});
        oracle2 += cnt >= 2;
    });
    CHECK(oracle2 >= 1);
    CHECK(oracle2 <= 8);
}

TEST_CASE("profiles are monotone and bounded by the grid") {
    TubeFamily fam = generate_spaced_family(2, 1.0 / 16, 4, 2, 9);
    BallGrid g(2, fam.delta);
    RichnessProfile p = richness_profile(g, fam);
    CHECK(p.at(1) <= g.size());
    std::uint64_t prev = p.at(1);
    for (const auto& [r, c] : p.entries) {
        CHECK(c <= prev);
        prev = c;
    }
    CHECK(p.entries.rbegin()->second == 0);

    TubeFamily small = generate_h0_family(2, 1.0 / 16, 4, 2, 3);
    small.tubes.resize(std::min<std::size_t>(small.tubes.size(), 400));
    BallGrid g2(2, small.delta, 0.6);
    CHECK(richness_profile(g2, small).histogram == richness_profile_exhaustive(g2, small).histogram);
}

TEST_CASE("dyadic pigeonhole") {
    DyadicClass c = dyadic_pigeonhole({{0, 1}, {1, 2}, {2, 2}, {3, 3}, {4, 8}, {5, 9}});
    CHECK(c.lo == 8);
    CHECK(c.hi == 16);
    CHECK(c.total == 17);
    CHECK(c.members == std::vector<std::size_t>{4, 5});

    DyadicClass same = dyadic_pigeonhole({{0, 5}, {1, 5}, {2, 5}});
    CHECK(same.members.size() == 3);
    CHECK(same.classes == 1);

    for (int k = 0; k <= 12; ++k) {
        std::vector<std::pair<std::size_t, double>> w;
        double sum = 0;
        for (int j = 0; j <= k; ++j) {
            w.emplace_back(j, std::ldexp(1.0, j));
            sum += std::ldexp(1.0, j);
        }
        CHECK(dyadic_pigeonhole(w).total >= sum / (k + 1));
    }
    CHECK_THROWS_AS(dyadic_pigeonhole({}), PreconditionError);
    CHECK_THROWS_AS(dyadic_pigeonhole({{0, 0.0}}), PreconditionError);
}

TEST_CASE("dyadic pigeonhole keeps at least total over the number of classes") {
    Rng rng(4);
    for (int t = 0; t < 500; ++t) {
        std::vector<std::pair<std::size_t, double>> w;
        double sum = 0, lo = INFINITY, hi = 0;
        int m = 1 + static_cast<int>(rng.below(40));
        for (int i = 0; i < m; ++i) {
            double v = std::exp(rng.uniform(-3, 6));
            w.emplace_back(i, v);
            sum += v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        DyadicClass c = dyadic_pigeonhole(w);
        CHECK(c.total >= sum / c.classes * (1 - 1e-12));
        CHECK(c.classes <= 1 + std::ceil(std::log2(hi / lo)));
        CHECK(c.total >= sum / (1 + std::ceil(std::log2(hi / lo))) * (1 - 1e-12));
        for (std::size_t i : c.members) {
            CHECK(w[i].second >= c.lo);
            CHECK(w[i].second < c.hi);
        }
    }
}

TEST_CASE("log-ratio pigeonhole bound without the ceiling fails for straddling values") {
    // two values on either side of 2: classes [1,2) and [2,4), best total 2.1 < 4/(1+log2(2.1/1.9))
    DyadicClass c = dyadic_pigeonhole({{0, 1.9}, {1, 2.1}});
    CHECK(c.total == doctest::Approx(2.1));
    CHECK(c.total < 4.0 / (1 + std::log2(2.1 / 1.9)));
}

TEST_CASE("fit exponent") {
    CHECK(fit_exponent({{1, 1}, {2, 4}, {4, 16}}) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit_exponent({{1, 3}, {2, 3}, {4, 3}}) == doctest::Approx(0.0).scale(1));
    Rng rng(8);
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < 40; ++i) {
        double x = std::exp(rng.uniform(0, 4));
        pts.emplace_back(x, std::pow(x, -2) * (1 + rng.uniform(-0.1, 0.1)));
    }
    double s = fit_exponent(pts);
    CHECK(s >= -2.3);
    CHECK(s <= -1.7);
    CHECK_THROWS_AS(fit_exponent({{1, 1}}), PreconditionError);
    CHECK_THROWS_AS(fit_exponent({{1, 1}, {2, -1}}), PreconditionError);
}

TEST_CASE("verify_bound rows follow the theorem formulas") {
    TubeFamily fam = generate_spaced_family(2, 1.0 / 16, 4, 2, 1);
    RichnessProfile empty;
    empty.n = 2;
    BoundReport e = verify_bound(fam, empty, Theorem::t41);
    CHECK(e.verdict);
    CHECK(e.max_ratio == 0);

    BallGrid g(2, fam.delta);
    RichnessProfile p = richness_profile(g, fam);
    BoundReport rep = verify_bound(fam, p, Theorem::t41, 0.1, 100);
    double T = static_cast<double>(fam.tubes.size());
    double thr = std::pow(1.0 / 16, 2 - 0.1) * T;
    CHECK(rep.threshold == doctest::Approx(thr));
    std::size_t expect_rows = 0;
    for (const auto& [r, c] : p.entries) expect_rows += r >= thr;
    CHECK(rep.rows.size() == expect_rows);
    for (const BoundRow& row : rep.rows) {
        double bound = 100 * std::pow(16.0, 0.1) * T * T / (16.0 * double(row.r) * double(row.r));
        CHECK(row.bound == doctest::Approx(bound));
        CHECK(row.count == p.at(row.r));
    }
    CHECK(rep.verdict);

    BoundReport wrong = verify_bound(fam, p, Theorem::t42);
    CHECK_FALSE(wrong.applicable);
    CHECK_FALSE(wrong.verdict);

    TubeFamily h = generate_h0_family(2, 1.0 / 16, 4, 1, 2);
    RichnessProfile ph = richness_profile(g, h);
    BoundReport r42 = verify_bound(h, ph, Theorem::t42);
    CHECK(r42.applicable);
    CHECK(r42.threshold == doctest::Approx(std::max(std::pow(1.0 / 16, 1.9) * h.tubes.size(), 2.0)));
    for (const BoundRow& row : r42.rows)
        CHECK(row.bound == doctest::Approx(100 * std::pow(16.0, 0.1) * std::pow(double(h.tubes.size()), 2.0) *
                                           std::pow(double(row.r), -3.0)));
    CHECK_FALSE(verify_bound(h, ph, Theorem::t41).applicable);
}

TEST_CASE("heavy ball check: concentrated, empty and premise violations") {
    const int n = 2;
    const double D = 64;
    std::vector<ComplexTube> tubes;
    Rng rng(3);
    for (int i = 0; i < 12; ++i) tubes.push_back(ComplexTube::checked(ComplexVector::Zero(n), random_unit(n, rng), D, 1));
    std::vector<Ball> one{Ball(ComplexVector::Zero(n), 1)};
    DichotomyReport rep = heavy_ball_check(one, tubes, 12, 0.5, D);
    CHECK(rep.thick_holds);
    REQUIRE(rep.thick_cover.size() == 1);
    CHECK(rep.thick_cover[0].tubes == 12);
    CHECK(rep.lambda == doctest::Approx(std::pow(D, 0.5 / 200)));

    DichotomyReport none = heavy_ball_check({}, tubes, 1, 0.5, D);
    CHECK(none.thin_holds);
    CHECK(none.thin_ratio == 0);

    ComplexVector far = ComplexVector::Zero(n);
    far(0) = cplx(0, 30);
    far(1) = 30;
    CHECK_THROWS_AS(heavy_ball_check({Ball(far, 1)}, tubes, 1, 0.5, D), PreconditionError);
    CHECK_THROWS_WITH_AS(heavy_ball_check({Ball(ComplexVector::Zero(n), 1), Ball(far, 1)}, tubes, 12, 0.5, D),
                         doctest::Contains("ball 1"), PreconditionError);
}

TEST_CASE("heavy ball check: generic position is thin") {
    DichotomyConfig cfg = generate_dichotomy_config(2, 32, "generic", 60, 11);
    DichotomyReport rep = heavy_ball_check(cfg.balls, cfg.tubes, cfg.big_e, 0.5, cfg.big_d);
    CHECK(rep.thin_holds);
    // both sides computed directly
    CHECK(rep.thin_ratio == doctest::Approx(cfg.balls.size() / rep.thin_bound));
}

TEST_CASE("heavy ball dichotomy holds on generated configurations") {
    int checked = 0;
    for (int n : {2, 3})
        for (const char* kind : {"concentrated", "generic", "mixed"})
            for (std::uint64_t seed = 0; seed < 3; ++seed) {
                double D = n == 2 ? 32 : 16;
                DichotomyConfig cfg = generate_dichotomy_config(n, D, kind, n == 2 ? 40 : 20, seed);
                for (double eps : {0.3, 0.9}) {
                    DichotomyReport rep = heavy_ball_check(cfg.balls, cfg.tubes, cfg.big_e, eps, cfg.big_d, 64);
                    CHECK_MESSAGE((rep.thin_holds || rep.thick_holds), kind << " n=" << n << " seed=" << seed);
                    ++checked;
                }
            }
    CHECK(checked == 36);
}
