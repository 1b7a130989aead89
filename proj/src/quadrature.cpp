#include "ctube/quadrature.hpp"

#include <algorithm>

namespace ctube::quad {

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int order) {
    std::vector<double> x(order), w(order);
    for (int i = 0; i < order; ++i) {
        double z = std::cos(3.14159265358979323846 * (i + 0.75) / (order + 0.5));
        double dp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1, p1 = z;
            for (int k = 2; k <= order; ++k) {
                double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = order * (z * p1 - p0) / (z * z - 1);
            double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        x[i] = z;
        w[i] = 2 / ((1 - z * z) * dp * dp);
    }
    return {x, w};
}

namespace {

double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
               double whole, double tol, int depth) {
    double m = 0.5 * (a + b), lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6 * (fa + 4 * flm + fm);
    double right = (b - m) / 6 * (fm + 4 * frm + fb);
    double diff = left + right - whole;
    if (depth <= 0 || std::abs(diff) <= 15 * tol) return left + right + diff / 15;
    return simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
           simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double tol, int max_depth) {
    if (b <= a) return 0;
    // seed with a few panels so narrow features are not skipped
    const int panels = 8;
    double h = (b - a) / panels, total = 0;
    for (int k = 0; k < panels; ++k) {
        double lo = a + k * h, hi = lo + h, mid = 0.5 * (lo + hi);
        double flo = f(lo), fmid = f(mid), fhi = f(hi);
        double whole = h / 6 * (flo + 4 * fmid + fhi);
        total += simpson(f, lo, hi, flo, fmid, fhi, whole, tol / panels, max_depth);
    }
    return total;
}

double integrate_pieces(const std::function<double(double)>& f, double a, double b, std::vector<double> breaks,
                        double tol) {
    breaks.push_back(a);
    breaks.push_back(b);
    std::sort(breaks.begin(), breaks.end());
    double total = 0;
    for (size_t k = 0; k + 1 < breaks.size(); ++k) {
        double lo = std::clamp(breaks[k], a, b), hi = std::clamp(breaks[k + 1], a, b);
        if (hi > lo) total += integrate(f, lo, hi, tol);
    }
    return total;
}

}  // namespace ctube::quad
