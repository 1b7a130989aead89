#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <utility>

#include "ctube/error.hpp"

namespace ctube {

template <typename Scalar>
using CVec = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;
template <typename Scalar>
using RVec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using ComplexVector = CVec<double>;
using RealVector = RVec<double>;
using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

template <typename Scalar>
RVec<Scalar> embed(const CVec<Scalar>& v) {
    RVec<Scalar> out(2 * v.size());
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        out(2 * k) = v(k).real();
        out(2 * k + 1) = v(k).imag();
    }
    return out;
}

template <typename Scalar>
CVec<Scalar> unembed(const RVec<Scalar>& x) {
    CVec<Scalar> out(x.size() / 2);
    for (Eigen::Index k = 0; k < out.size(); ++k) out(k) = {x(2 * k), x(2 * k + 1)};
    return out;
}

template <typename Scalar>
bool is_unit(const CVec<Scalar>& u, Scalar tol = Scalar(1e-12)) {
    return std::abs(u.norm() - Scalar(1)) <= tol;
}

// |<u1,u2>| clamped into [0,1]
template <typename Scalar>
Scalar overlap(const CVec<Scalar>& u1, const CVec<Scalar>& u2) {
    return std::clamp(std::abs(u1.dot(u2)), Scalar(0), Scalar(1));
}

template <typename Scalar>
Scalar line_angle(const CVec<Scalar>& u1, const CVec<Scalar>& u2) {
    require(u1.size() == u2.size(), "line_angle: dimension mismatch");
    require(is_unit(u1) && is_unit(u2), "line_angle: directions must be unit vectors");
    return std::acos(overlap(u1, u2));
}

// angle between the real 2-planes, minimised over unit scalars z on a grid
template <typename Scalar>
Scalar definition1_angle(const CVec<Scalar>& u1, const CVec<Scalar>& u2, int grid_steps) {
    std::complex<Scalar> a = u1.dot(u2);
    Scalar best = Scalar(-1);
    for (int k = 0; k < grid_steps; ++k) {
        Scalar t = Scalar(2 * kPi) * k / grid_steps;
        Scalar c = (a * std::complex<Scalar>(std::cos(t), std::sin(t))).real();
        best = std::max(best, c);
    }
    return std::acos(std::clamp(best, Scalar(0), Scalar(1)));
}

template <typename Scalar>
std::pair<Scalar, Scalar> principal_angle_oracle(const CVec<Scalar>& u1, const CVec<Scalar>& u2,
                                                 int grid_steps = 720) {
    require(grid_steps >= 360, "principal_angle_oracle: grid_steps must be at least 360");
    require(is_unit(u1) && is_unit(u2), "principal_angle_oracle: directions must be unit vectors");
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const std::complex<Scalar> i(0, 1);
    Mat b1(2 * u1.size(), 2), b2(2 * u2.size(), 2);
    b1.col(0) = embed<Scalar>(u1);
    b1.col(1) = embed<Scalar>(CVec<Scalar>(i * u1));
    b2.col(0) = embed<Scalar>(u2);
    b2.col(1) = embed<Scalar>(CVec<Scalar>(i * u2));
    Eigen::Matrix<Scalar, 2, 2> m = b1.transpose() * b2;
    Eigen::JacobiSVD<Eigen::Matrix<Scalar, 2, 2>> svd(m);
    auto s = svd.singularValues();
    auto ang = [](Scalar c) { return std::acos(std::clamp(c, Scalar(0), Scalar(1))); };
    if (!std::isfinite(s(0))) {
        Scalar a = definition1_angle(u1, u2, grid_steps);
        return {a, a};
    }
    return {ang(s(0)), ang(s(1))};
}

template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> rotate2(const Eigen::Matrix<Scalar, 2, 1>& y, Scalar zeta) {
    Scalar c = std::cos(zeta), s = std::sin(zeta);
    return {y(0) * c + y(1) * s, -y(0) * s + y(1) * c};
}

struct ComplexLine {
    ComplexVector point;
    ComplexVector direction;

    ComplexLine() = default;
    ComplexLine(ComplexVector p, ComplexVector u);

    ComplexVector at(cplx z) const { return point + z * direction; }
    double distance_to(const ComplexVector& x) const;
    // canonical form: point is the foot from the origin, first significant entry of direction real positive
    ComplexLine canonical() const;
    bool same_as(const ComplexLine& other, double tol = 1e-9) const;
};

ComplexVector normalized(const ComplexVector& v);
// orthonormal basis of the Hermitian complement of a unit vector u, as columns
Eigen::MatrixXcd complement_basis(const ComplexVector& u);
// Haar-random unit vector
template <typename Rng>
ComplexVector random_unit(int n, Rng& rng);

}  // namespace ctube

#include "ctube/rng.hpp"

namespace ctube {
template <typename Rng>
ComplexVector random_unit(int n, Rng& rng) {
    ComplexVector v(n);
    for (int k = 0; k < n; ++k) v(k) = {rng.normal(), rng.normal()};
    return v / v.norm();
}
}  // namespace ctube
