#include "ctube/cgeom.hpp"

#include <vector>

namespace ctube {

ComplexVector normalized(const ComplexVector& v) {
    double nrm = v.norm();
    require(nrm > 0, "cannot normalise the zero vector");
    return v / nrm;
}

ComplexLine::ComplexLine(ComplexVector p, ComplexVector u) : point(std::move(p)), direction(std::move(u)) {
    require(point.size() == direction.size(), "ComplexLine: dimension mismatch");
    require(is_unit(direction, 1e-9), "ComplexLine: direction must be a unit vector");
}

double ComplexLine::distance_to(const ComplexVector& x) const {
    ComplexVector d = x - point;
    return (d - direction.dot(d) * direction).norm();
}

ComplexLine ComplexLine::canonical() const {
    ComplexLine out;
    out.point = point - direction.dot(point) * direction;
    out.direction = direction;
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < direction.size(); ++j)
        if (std::abs(direction(j)) > 1e-6) {
            k = j;
            break;
        }
    cplx ph = std::conj(direction(k)) / std::abs(direction(k));
    out.direction *= ph;
    return out;
}

bool ComplexLine::same_as(const ComplexLine& other, double tol) const {
    if (point.size() != other.point.size()) return false;
    ComplexLine a = canonical(), b = other.canonical();
    return (a.point - b.point).norm() <= tol && (a.direction - b.direction).norm() <= tol;
}

Eigen::MatrixXcd complement_basis(const ComplexVector& u) {
    const Eigen::Index n = u.size();
    Eigen::MatrixXcd basis(n, n - 1);
    Eigen::Index filled = 0;
    std::vector<Eigen::Index> order(n);
    for (Eigen::Index j = 0; j < n; ++j) order[j] = j;
    // start from the coordinate axes least aligned with u
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return std::abs(u(a)) < std::abs(u(b));
    });
    for (Eigen::Index j : order) {
        if (filled == n - 1) break;
        ComplexVector e = ComplexVector::Zero(n);
        e(j) = 1.0;
        e -= u.dot(e) * u;
        for (Eigen::Index k = 0; k < filled; ++k) e -= basis.col(k).dot(e) * basis.col(k);
        double nrm = e.norm();
        if (nrm < 1e-8) continue;
        basis.col(filled++) = e / nrm;
    }
    return basis;
}

}  // namespace ctube
