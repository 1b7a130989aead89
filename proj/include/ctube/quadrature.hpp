#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

namespace ctube::quad {

// Gauss-Legendre nodes and weights on [-1, 1]
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int order);

double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-12,
                 int max_depth = 40);

// integrate over [a, b] splitting at the given interior breakpoints
double integrate_pieces(const std::function<double(double)>& f, double a, double b,
                        std::vector<double> breaks, double tol = 1e-12);

}  // namespace ctube::quad
