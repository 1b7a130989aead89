#include "doctest.h"

#include "ctube/cgeom.hpp"

using namespace ctube;

namespace {

ComplexVector cv(std::initializer_list<cplx> xs) {
    ComplexVector v(xs.size());
    int k = 0;
    for (auto x : xs) v(k++) = x;
    return v;
}

// brute force definition-1 angle: sample both unit scalars independently
double brute_angle(const ComplexVector& u1, const ComplexVector& u2, int steps) {
    double best = -1;
    for (int a = 0; a < steps; ++a)
        for (int b = 0; b < steps; ++b) {
            cplx z1 = std::polar(1.0, 2 * kPi * a / steps), z2 = std::polar(1.0, 2 * kPi * b / steps);
            RealVector x = embed<double>(ComplexVector(z1 * u1)), y = embed<double>(ComplexVector(z2 * u2));
            best = std::max(best, x.dot(y));
        }
    return std::acos(std::min(1.0, std::abs(best)));
}

}  // namespace

TEST_CASE("embed interleaves real and imaginary parts") {
    RealVector x = embed<double>(cv({{1, 2}, {3, -1}}));
    CHECK(x.size() == 4);
    CHECK(x(0) == 1);
    CHECK(x(1) == 2);
    CHECK(x(2) == 3);
    CHECK(x(3) == -1);
    CHECK(embed<double>(cv({0, 0})).norm() == 0);
}

TEST_CASE("embed is a linear isometry") {
    Rng rng(11);
    for (int t = 0; t < 1000; ++t) {
        int n = 2 + t % 2;
        ComplexVector u(n), v(n);
        for (int k = 0; k < n; ++k) {
            u(k) = {rng.normal(), rng.normal()};
            v(k) = {rng.normal(), rng.normal()};
        }
        CHECK(std::abs(embed<double>(u).norm() - u.norm()) < 1e-12);
        CHECK(embed<double>(ComplexVector(u + v)) == RealVector(embed<double>(u) + embed<double>(v)));
        CHECK((unembed<double>(embed<double>(u)) - u).norm() == 0);
    }
}

TEST_CASE("line_angle basics") {
    CHECK(line_angle<double>(cv({1, 0}), cv({1, 0})) == 0);
    CHECK(line_angle<double>(cv({1, 0}), cv({0, 1})) == doctest::Approx(kPi / 2).epsilon(1e-15));
    for (double zeta : {0.0, 0.3, 1.7, 3.0, -2.2}) {
        ComplexVector u2 = cv({1, std::polar(1.0, zeta)}) / std::sqrt(2.0);
        CHECK(line_angle<double>(cv({1, 0}), u2) == doctest::Approx(kPi / 4).epsilon(1e-14));
        CHECK(brute_angle(cv({1, 0}), u2, 180) == doctest::Approx(kPi / 4).epsilon(0.04));
    }
    CHECK_THROWS_AS(line_angle<double>(cv({1, 1}), cv({1, 0})), PreconditionError);
}

TEST_CASE("line_angle is phase invariant and symmetric") {
    Rng rng(5);
    for (int t = 0; t < 500; ++t) {
        int n = 2 + t % 2;
        ComplexVector u1 = random_unit(n, rng), u2 = random_unit(n, rng);
        cplx z = std::polar(1.0, rng.uniform(0, 2 * kPi));
        CHECK(std::abs(line_angle<double>(u1, ComplexVector(z * u2)) - line_angle<double>(u1, u2)) < 1e-14);
        for (cplx q : {cplx(-1, 0), cplx(0, 1), cplx(0, -1)})
            CHECK(line_angle<double>(u1, ComplexVector(q * u2)) == line_angle<double>(u1, u2));
        CHECK(line_angle<double>(u1, u2) == line_angle<double>(u2, u1));
        double a = line_angle<double>(u1, u2);
        CHECK(a >= 0);
        CHECK(a <= kPi / 2);
    }
}

TEST_CASE("clamp keeps arccos defined for nearly identical lines") {
    ComplexVector u = cv({{0.6, 0}, {0, 0.8}});
    ComplexVector w = u * cplx(1 + 1e-16, 0);
    CHECK(std::isfinite(line_angle<double>(u, w / w.norm())));
    CHECK(overlap<double>(u, u) <= 1.0);
}

TEST_CASE("definition-1 grid angle agrees with the Hermitian formula") {
    Rng rng(7);
    for (int t = 0; t < 100; ++t) {
        int n = 2 + t % 2;
        ComplexVector u1 = random_unit(n, rng), u2 = random_unit(n, rng);
        CHECK(std::abs(definition1_angle<double>(u1, u2, 720) - line_angle<double>(u1, u2)) <= 2 * kPi / 720);
    }
}

TEST_CASE("principal angles") {
    auto pa = principal_angle_oracle<double>(cv({1, 0}), cv({0, 1}), 720);
    CHECK(pa.first == doctest::Approx(kPi / 2));
    CHECK(pa.second == doctest::Approx(kPi / 2));
    CHECK_THROWS_AS(principal_angle_oracle<double>(cv({1, 0}), cv({0, 1}), 100), PreconditionError);
    Rng rng(3);
    for (int t = 0; t < 100; ++t) {
        int n = 2 + t % 2;
        ComplexVector u1 = random_unit(n, rng), u2 = random_unit(n, rng);
        auto [a, b] = principal_angle_oracle<double>(u1, u2, 720);
        CHECK(std::abs(a - b) < 1e-9);
        CHECK(std::abs(a - brute_angle(u1, u2, 90)) <= 2 * 2 * kPi / 90);
        CHECK(std::abs(a - line_angle<double>(u1, u2)) <= 2 * kPi / 720);
    }
}

TEST_CASE("rotate2") {
    using V2 = Eigen::Vector2d;
    CHECK((rotate2<double>(V2(1, 0), 0.0) - V2(1, 0)).norm() == 0);
    CHECK((rotate2<double>(V2(1, 0), kPi / 2) - V2(0, -1)).norm() < 1e-15);
    Rng rng(9);
    for (int t = 0; t < 1000; ++t) {
        V2 y(rng.normal(), rng.normal());
        CHECK(std::abs(rotate2<double>(y, rng.uniform(-10, 10)).norm() - y.norm()) < 1e-12);
    }
}

TEST_CASE("complex lines compare by point set") {
    ComplexLine a(cv({1, 0, 0}), normalized(cv({0, -1, 1})));
    ComplexLine b(cv({1, {0, 2}, {0, -2}}), normalized(cv({0, {0, 1}, {0, -1}})));
    CHECK(a.same_as(b));
    ComplexLine c(cv({1.1, 0, 0}), normalized(cv({0, -1, 1})));
    CHECK_FALSE(a.same_as(c));
    CHECK(a.distance_to(cv({1, 3, -3})) < 1e-12);
}

TEST_CASE("complement basis is orthonormal and orthogonal to u") {
    Rng rng(1);
    for (int t = 0; t < 200; ++t) {
        int n = 2 + t % 2;
        ComplexVector u = random_unit(n, rng);
        Eigen::MatrixXcd b = complement_basis(u);
        CHECK(b.cols() == n - 1);
        CHECK((b.adjoint() * b - Eigen::MatrixXcd::Identity(n - 1, n - 1)).norm() < 1e-12);
        CHECK((b.adjoint() * u).norm() < 1e-12);
    }
}
