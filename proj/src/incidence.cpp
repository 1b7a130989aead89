#include "ctube/incidence.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>

#include <Eigen/Cholesky>

#include "ctube/error.hpp"

namespace ctube {

std::size_t LatticeIndexHash::operator()(const LatticeIndex& k) const {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (int x : k) h = splitmix64(h ^ static_cast<std::uint32_t>(x));
    return static_cast<std::size_t>(h);
}

BallGrid::BallGrid(int n, double delta, double domain_radius) : n_(n), delta_(delta), radius_(domain_radius) {
    require(n == 2 || n == 3, "ball_grid: n must be 2 or 3");
    require(delta >= std::ldexp(1.0, -10) && delta < 1, "ball_grid: delta outside [2^-10, 1)");
    require(domain_radius > 0, "ball_grid: domain radius must be positive");
    pitch_ = 2 * delta / std::sqrt(2.0 * n);
    extent_ = static_cast<int>(std::floor(radius_ / pitch_ + 1e-9));
    side_ = 2 * static_cast<std::uint64_t>(extent_) + 1;
    while ((std::uint64_t(1) << last_bits_) < side_) ++last_bits_;
    strides_[2 * n - 1] = 1;
    strides_[2 * n - 2] = std::uint64_t(1) << last_bits_;
    for (int j = 2 * n - 3; j >= 0; --j) strides_[j] = strides_[j + 1] * side_;
    rows_ = 1;
    for (int j = 0; j < 2 * n - 1; ++j) rows_ *= side_;
    limit_ = (radius_ / pitch_) * (radius_ / pitch_) * (1 + 1e-12);

    if (rows_ <= 30000000ULL) {
        size_ = 0;
        offset_.resize(rows_);
        half_.resize(rows_);
        for (std::uint64_t row = 0; row < rows_; ++row) {
            std::uint64_t rest = row;
            long s = 0;
            for (int j = 0; j < 2 * n - 1; ++j) {
                long v = static_cast<long>(rest % side_) - extent_;
                rest /= side_;
                s += v * v;
            }
            int m = last_half_width(s);
            offset_[row] = size_;
            half_[row] = m;
            if (m >= 0) size_ += 2 * static_cast<std::uint64_t>(m) + 1;
        }
        dense_ = size_ <= 150000000ULL;
        if (!dense_) {
            offset_.clear();
            half_.clear();
        }
        return;
    }
    const long cap = static_cast<long>(std::floor(limit_));
    if (static_cast<double>(cap) * side_ * (2 * n - 1) <= 2e9) {
        // distribution of the squared norm of the first 2n-1 coordinates, truncated at the domain
        std::vector<std::uint64_t> dist(cap + 1, 0), next(cap + 1);
        dist[0] = 1;
        for (int j = 0; j < 2 * n - 1; ++j) {
            std::fill(next.begin(), next.end(), 0);
            for (long s = 0; s <= cap; ++s) {
                if (!dist[s]) continue;
                for (long v = 0; v <= extent_ && s + v * v <= cap; ++v) next[s + v * v] += (v ? 2 : 1) * dist[s];
            }
            dist.swap(next);
        }
        size_ = 0;
        for (long s = 0; s <= cap; ++s)
            if (dist[s]) size_ += dist[s] * (2 * static_cast<std::uint64_t>(last_half_width(s)) + 1);
    } else {
        size_ = static_cast<std::uint64_t>(unit_ball_volume(2 * n) * std::pow(radius_ / pitch_, 2 * n));
    }
}

int BallGrid::last_half_width(long s) const {
    double room = limit_ - static_cast<double>(s);
    if (room < 0) return -1;
    long m = static_cast<long>(std::floor(std::sqrt(room)));
    while (static_cast<double>((m + 1) * (m + 1)) <= room) ++m;
    while (m > 0 && static_cast<double>(m * m) > room) --m;
    return static_cast<int>(std::min<long>(m, extent_));
}

bool BallGrid::contains(const LatticeIndex& k) const {
    long s = 0;
    for (int j = 0; j < 6; ++j) {
        if (j >= 2 * n_ && k[j] != 0) return false;
        if (std::abs(k[j]) > extent_) return false;
        s += static_cast<long>(k[j]) * k[j];
    }
    return static_cast<double>(s) <= limit_;
}

ComplexVector BallGrid::center(const LatticeIndex& k) const {
    ComplexVector p(n_);
    for (int m = 0; m < n_; ++m) p(m) = cplx(pitch_ * k[2 * m], pitch_ * k[2 * m + 1]);
    return p;
}

LatticeIndex BallGrid::nearest(const ComplexVector& p) const {
    LatticeIndex k{};
    for (int m = 0; m < n_; ++m) {
        k[2 * m] = static_cast<int>(std::lround(p(m).real() / pitch_));
        k[2 * m + 1] = static_cast<int>(std::lround(p(m).imag() / pitch_));
    }
    return k;
}

std::uint64_t BallGrid::slot(const LatticeIndex& k) const {
    int dims = 2 * n_;
    std::uint64_t row = 0;
    for (int j = 0; j < dims - 1; ++j) row = row * side_ + static_cast<std::uint64_t>(k[j] + extent_);
    return offset_[row] + static_cast<std::uint64_t>(k[dims - 1] + half_[row]);
}

double incidence_constant(int n) {
    require(n >= 2 && n <= 3, "incidence_constant: n must be 2 or 3");
    static std::mutex mu;
    static std::atomic<double> cache[4] = {0.0, 0.0, 0.0, 0.0};
    if (double c = cache[n].load(); c > 0) return c;
    std::lock_guard<std::mutex> lock(mu);
    if (double c = cache[n].load(); c > 0) return c;
    double half = 0.5 * unit_ball_volume(2 * n);
    double lo = 0, hi = 1;
    for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        (ball_tube_overlap(n, 1, 1, mid) >= half ? lo : hi) = mid;
    }
    cache[n].store(0.5 * (lo + hi));
    return 0.5 * (lo + hi);
}

bool incident(const Ball& q, const ComplexTube& t, IncidenceMode mode, const MCOptions& mc) {
    require(q.dim() == t.dim(), "incident: dimension mismatch");
    if (mode == IncidenceMode::oracle) {
        VolumeEstimate v = intersection_volume_mc(q, t, mc);
        return v.value >= 0.5 * unit_ball_volume(2 * q.dim()) * std::pow(q.radius, 2 * q.dim());
    }
    require(std::abs(q.radius - t.radius) <= 1e-9 * t.radius, "incident: fast mode needs a ball and tube of equal radius");
    return t.distance_to_segment(q.center) <= incidence_constant(t.dim()) * t.radius;
}

namespace {

struct Seg {
    int n = 2;
    double cr[3] = {0, 0, 0}, ci[3] = {0, 0, 0}, ur[3] = {0, 0, 0}, ui[3] = {0, 0, 0};
    double half = 0;
    double tau2 = 0;
};

Seg make_seg(const ComplexTube& t, double tau) {
    Seg s;
    s.n = t.dim();
    for (int m = 0; m < s.n; ++m) {
        s.cr[m] = t.center(m).real();
        s.ci[m] = t.center(m).imag();
        s.ur[m] = t.direction(m).real();
        s.ui[m] = t.direction(m).imag();
    }
    s.half = t.half_length();
    s.tau2 = tau * tau;
    return s;
}

// squared distance from p (real/imaginary parts interleaved) to the central segment;
// with z = <u, p - c> clamped to |z| <= half by a factor f, the distance is |d|^2 - |z|^2 (2f - f^2)
inline double seg_dist2(const Seg& s, const double* p) {
    double d2 = 0, zr = 0, zi = 0;
    for (int m = 0; m < s.n; ++m) {
        double dr = p[2 * m] - s.cr[m], di = p[2 * m + 1] - s.ci[m];
        d2 += dr * dr + di * di;
        zr += s.ur[m] * dr + s.ui[m] * di;
        zi += s.ur[m] * di - s.ui[m] * dr;
    }
    double z2 = zr * zr + zi * zi;
    if (z2 <= s.half * s.half) return d2 - z2;
    double f = s.half / std::sqrt(z2);
    return d2 - z2 * (2 * f - f * f);
}

double grid_tau(const BallGrid& grid, const ComplexTube& t) {
    require(t.dim() == grid.n(), "incidence: tube dimension differs from the grid");
    require(std::abs(t.radius - grid.delta()) <= 1e-9 * grid.delta(), "incidence: tube radius must equal the grid delta");
    return incidence_constant(grid.n()) * grid.delta();
}

// {y : a y² + b y + c <= 0} for a >= 0, possibly unbounded; false when empty
bool quadratic_le(double a, double b, double c, double& lo, double& hi) {
    const double inf = std::numeric_limits<double>::infinity();
    if (a <= 0) {
        if (b == 0) {
            lo = -inf;
            hi = inf;
            return c <= 0;
        }
        double r = -c / b;
        lo = b > 0 ? -inf : r;
        hi = b > 0 ? r : inf;
        return true;
    }
    double disc = b * b - 4 * a * c;
    if (disc < 0) return false;
    double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
    double r1 = q / a, r2 = q != 0 ? c / q : 0.0;
    lo = std::min(r1, r2);
    hi = std::max(r1, r2);
    return true;
}

inline long ifloor(double x) {
    long i = static_cast<long>(x);
    return i - (x < i);
}

inline long iceil(double x) {
    long i = static_cast<long>(x);
    return i + (x > i);
}

// largest m with m² <= room, or -1
inline long isqrt_floor(long room) {
    if (room < 0) return -1;
    long m = static_cast<long>(std::sqrt(static_cast<double>(room)));
    while (m * m > room) --m;
    while ((m + 1) * (m + 1) <= room) ++m;
    return m;
}

// Lattice points within c_inc·δ of a tube's central segment. Rows are enumerated by nesting the
// intervals of an ellipsoid that contains the tube; along each row (the axis closest to the tube's
// long real plane) the exact interval comes from two quadratics: squared distance to the complex
// line and squared modulus of the foot parameter.
// dom[r] = largest m with m² <= r, for r up to the grid's squared radius in lattice units
const std::vector<int>& domain_widths(const BallGrid& grid) {
    static std::mutex mu;
    static std::map<long, std::vector<int>> cache;
    long lim = static_cast<long>(std::floor(grid.limit()));
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(lim);
    if (it != cache.end()) return it->second;
    std::vector<int> dom(lim + 1);
    for (long r = 0; r <= lim; ++r) dom[r] = static_cast<int>(isqrt_floor(r));
    return cache.emplace(lim, std::move(dom)).first->second;
}

class TubeWalker {
public:
    TubeWalker(const BallGrid& grid, const Seg& seg, double tau)
        : g_(grid), s_(seg), dom_(domain_widths(grid)) {
        d_ = 2 * seg.n;
        h_ = grid.pitch();
        e_ = grid.extent();
        lim_ = static_cast<long>(std::floor(grid.limit()));
        for (int m = 0; m < seg.n; ++m) {
            u1_[2 * m] = seg.ur[m];
            u1_[2 * m + 1] = seg.ui[m];
            u2_[2 * m] = -seg.ui[m];
            u2_[2 * m + 1] = seg.ur[m];
            c_[2 * m] = seg.cr[m];
            c_[2 * m + 1] = seg.ci[m];
        }
        run_ = 0;
        for (int m = 1; m < d_; ++m)
            if (u1_[m] * u1_[m] + u2_[m] * u2_[m] > u1_[run_] * u1_[run_] + u2_[run_] * u2_[run_]) run_ = m;
        vars_[0] = run_;
        for (int m = 0, i = 1; m < d_; ++m)
            if (m != run_) vars_[i++] = m;

        for (int m = 0; m < d_; ++m) stride_[m] = grid.cube_stride(m);

        double cap = seg.half + tau;
        Eigen::MatrixXd M(d_, d_);
        for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j) {
                int a = vars_[i], b = vars_[j];
                double par = u1_[a] * u1_[b] + u2_[a] * u2_[b];
                M(i, j) = h_ * h_ * (((a == b ? 1.0 : 0.0) - par) / seg.tau2 + par / (cap * cap));
            }
        Eigen::MatrixXd R = Eigen::LLT<Eigen::MatrixXd>(M).matrixU();
        for (int i = 0; i < d_; ++i) {
            diag_[i] = R(i, i);
            centre_[i] = c_[vars_[i]] / h_;
            for (int j = 0; j < d_; ++j) ratio_[i][j] = j > i ? R(i, j) / R(i, i) : 0.0;
        }
        budget_ = 2 * (1 + 1e-6);

        const double um = u1_[run_] * u1_[run_] + u2_[run_] * u2_[run_];
        af_ = h_ * h_ * (1 - um);
        ag_ = h_ * h_ * um;
        t_core_ = seg.tau2 * (1 - 1e-7);
        t_cand_ = seg.tau2 * (1 + 1e-7);
        g_core_ = seg.half * seg.half * (1 - 1e-7);
        g_cand_ = cap * cap * (1 + 1e-7);
    }

    template <class F>
    void run(F&& f) {
        level(d_ - 1, 0.0, 0, f);
    }

private:
    template <class F>
    void level(int i, double used, long sumsq, F& f) {
        if (i == 0) {
            row(sumsq, f);
            return;
        }
        double mu = centre_[i];
        for (int j = i + 1; j < d_; ++j) mu -= ratio_[i][j] * (x_[j] - centre_[j]);
        double room = budget_ - used;
        if (room < 0) return;
        double w = std::sqrt(room) / diag_[i];
        long dom = dom_[lim_ - sumsq];
        long lo = std::max<long>(-dom, iceil(mu - w));
        long hi = std::min<long>(dom, ifloor(mu + w));
        for (long x = lo; x <= hi; ++x) {
            x_[i] = static_cast<double>(x);
            k_[vars_[i]] = static_cast<int>(x);
            double t = diag_[i] * (x - mu);
            level(i - 1, used + t * t, sumsq + x * x, f);
        }
    }

    template <class F>
    void row(long sumsq, F& f) {
        const long dom = dom_[lim_ - sumsq];
        // d0 = p(y = 0) - c
        double dd = 0, zr = 0, zi = 0, dm = 0;
        double p[6];
        for (int m = 0; m < d_; ++m) {
            p[m] = m == run_ ? 0.0 : h_ * k_[m];
            double d0 = p[m] - c_[m];
            if (m == run_) dm = d0;
            dd += d0 * d0;
            zr += u1_[m] * d0;
            zi += u2_[m] * d0;
        }
        const double bg = 2 * h_ * (zr * u1_[run_] + zi * u2_[run_]);
        const double bf = 2 * h_ * dm - bg;
        const double cg = zr * zr + zi * zi;
        const double cf = dd - cg;

        double flo, fhi;
        if (!quadratic_le(af_, bf, cf - t_cand_, flo, fhi)) return;
        const double dlim = static_cast<double>(dom);
        long lo = iceil(std::max(-dlim, flo)), hi = ifloor(std::min(dlim, fhi));
        if (lo > hi) return;
        // the foot modulus is convex along the row, so checking the ends bounds the whole run
        auto gq = [&](double y) { return (ag_ * y + bg) * y + cg; };
        bool g_inside = gq(lo) <= g_core_ && gq(hi) <= g_core_;
        if (!g_inside) {
            double glo, ghi;
            if (!quadratic_le(ag_, bg, cg - g_cand_, glo, ghi)) return;
            lo = std::max(lo, iceil(std::max(-dlim, glo)));
            hi = std::min(hi, ifloor(std::min(dlim, ghi)));
            if (lo > hi) return;
        }

        std::uint64_t base = static_cast<std::uint64_t>(e_) * stride_[run_];
        for (int m = 0; m < d_; ++m)
            if (m != run_) base += static_cast<std::uint64_t>(k_[m] + e_) * stride_[m];
        const std::uint64_t step = stride_[run_];
        for (long y = lo; y <= hi; ++y) {
            double yd = static_cast<double>(y);
            double fy = (af_ * yd + bf) * yd + cf;
            if (fy > t_core_ || (!g_inside && gq(yd) > g_core_)) {
                p[run_] = h_ * yd;
                if (seg_dist2(s_, p) > s_.tau2) continue;
            }
            k_[run_] = static_cast<int>(y);
            f(k_, base + y * step);
        }
    }

    const BallGrid& g_;
    const Seg& s_;
    int d_ = 4, e_ = 0, run_ = 0;
    double h_ = 1;
    long lim_ = 0;
    double u1_[6] = {}, u2_[6] = {}, c_[6] = {};
    int vars_[6] = {};
    std::uint64_t stride_[6] = {};
    double diag_[6] = {}, centre_[6] = {}, ratio_[6][6] = {};
    double budget_ = 2;
    double af_ = 0, ag_ = 0, t_core_ = 0, t_cand_ = 0, g_core_ = 0, g_cand_ = 0;
    double x_[6] = {};
    LatticeIndex k_{};
    const std::vector<int>& dom_;
};

// Lattice offsets around a disk centre of radius `rr` (lattice units), binned by the centre's
// fractional position: `core` offsets are inside for every centre in the bin, `edge` ones may be.
// Both lists are padded to a fixed width per bin; padding sits far outside any disk.
struct DiskTable {
    static constexpr int bins = 32;
    static constexpr int far = 1 << 20;
    double rr = -1;
    int j = -1;
    int core_width = 0, edge_width = 0;
    // per bin: core_width core entries then edge_width edge entries
    std::vector<std::int32_t> dx, dy;
    std::vector<std::int64_t> delta;
    std::vector<std::uint32_t> delta32;  // low words, for 32-bit cube indices
    std::vector<std::uint8_t> core_count;

    DiskTable(double radius, double core_radius, double edge_radius, int dominant, std::int64_t sx, std::int64_t sy)
        : rr(radius), j(dominant) {
        const int lo = -static_cast<int>(std::ceil(edge_radius)), hi = static_cast<int>(std::ceil(edge_radius)) + 1;
        const int span = hi - lo + 1;
        const double cell = 1.0 / bins;
        // 0 = outside, 1 = core, 2 = edge, per bin and offset
        std::vector<std::uint8_t> kind(static_cast<std::size_t>(bins) * bins * span * span, 0);
        std::vector<int> ncore(bins * bins, 0), nedge(bins * bins, 0);
        const double cr2 = core_radius * core_radius, er2 = edge_radius * edge_radius;
        for (int bx = 0; bx < bins; ++bx)
            for (int by = 0; by < bins; ++by) {
                const int b = bx * bins + by;
                std::uint8_t* kb = kind.data() + static_cast<std::size_t>(b) * span * span;
                for (int dx = lo; dx <= hi; ++dx) {
                    // offsets from the centre range over [dx - (b+1)/bins, dx - b/bins]
                    double x0 = dx - (bx + 1) * cell, x1 = dx - bx * cell;
                    double nx = x0 > 0 ? x0 : (x1 < 0 ? x1 : 0.0), fx = std::max(-x0, x1);
                    if (nx * nx > er2) continue;
                    for (int dy = lo; dy <= hi; ++dy) {
                        double y0 = dy - (by + 1) * cell, y1 = dy - by * cell;
                        double ny = y0 > 0 ? y0 : (y1 < 0 ? y1 : 0.0), fy = std::max(-y0, y1);
                        std::uint8_t& k = kb[(dx - lo) * span + (dy - lo)];
                        if (fx * fx + fy * fy <= cr2)
                            k = 1, ++ncore[b];
                        else if (nx * nx + ny * ny <= er2)
                            k = 2, ++nedge[b];
                    }
                }
                core_width = std::max(core_width, ncore[b]);
                edge_width = std::max(edge_width, nedge[b]);
            }
        core_width = (core_width + 7) / 8 * 8;
        const int width = core_width + edge_width;
        dx.assign(static_cast<std::size_t>(bins) * bins * width, far);
        dy.assign(dx.size(), far);
        delta.assign(dx.size(), 0);
        core_count.resize(bins * bins);
        for (int b = 0; b < bins * bins; ++b) {
            core_count[b] = static_cast<std::uint8_t>(ncore[b]);
            int c = b * width, e = b * width + core_width;
            const std::uint8_t* kb = kind.data() + static_cast<std::size_t>(b) * span * span;
            for (int i = 0; i < span * span; ++i) {
                if (!kb[i]) continue;
                int at = kb[i] == 1 ? c++ : e++;
                dx[at] = i / span + lo;
                dy[at] = i % span + lo;
                delta[at] = dx[at] * sx + dy[at] * sy;
            }
        }
        delta32.resize(delta.size());
        for (std::size_t i = 0; i < delta.size(); ++i) delta32[i] = static_cast<std::uint32_t>(delta[i]);
    }
};

// callback that appends cube indices to a preallocated buffer; lets the enumerator write whole
// padded bins and advance by the true count
template <class T>
struct CubeSink {
    T* out;
    void operator()(const LatticeIndex&, std::uint64_t c) { *out++ = static_cast<T>(c); }
};

template <class F>
struct is_cube_sink : std::false_type {};
template <class T>
struct is_cube_sink<CubeSink<T>> : std::true_type {};

// more than the number of cube indices one tube can emit, padding included
std::size_t emit_bound(const BallGrid& grid, const ComplexTube& t) {
    const int n = grid.n();
    const double h = grid.pitch(), grow = h * std::sqrt(2.0 * n);
    const double len = t.half_length() + t.radius + grow, wide = t.radius + grow;
    double vol = kPi * len * len * unit_ball_volume(2 * n - 2) * std::pow(wide, 2 * n - 2) / std::pow(h, 2 * n);
    return static_cast<std::size_t>(2 * vol) + 1024;
}

// n = 2: with the dominant coordinate p_j fixed, dist²(p, line) = |u_j|² |p_l - w|² where
// w = c_l + u_l (p_j - c_j)/u_j, and the foot parameter of w is (p_j - c_j)/u_j
template <class F>
void enumerate_tube_n2(const BallGrid& grid, const Seg& s, double tau, std::vector<DiskTable>* cache, F&& f) {
    constexpr bool bulk = is_cube_sink<std::remove_cvref_t<F>>::value;
    const double h = grid.pitch();
    const int e = grid.extent();
    const long lim = static_cast<long>(std::floor(grid.limit()));
    const int j = s.ur[0] * s.ur[0] + s.ui[0] * s.ui[0] >= s.ur[1] * s.ur[1] + s.ui[1] * s.ui[1] ? 0 : 1;
    const int l = 1 - j;
    const double mj2 = s.ur[j] * s.ur[j] + s.ui[j] * s.ui[j];
    const double mj = std::sqrt(mj2), ml = std::sqrt(s.ur[l] * s.ur[l] + s.ui[l] * s.ui[l]);
    const double rre = (s.ur[l] * s.ur[j] + s.ui[l] * s.ui[j]) / mj2;
    const double rim = (s.ui[l] * s.ur[j] - s.ur[l] * s.ui[j]) / mj2;
    const double lo_cut = s.tau2 * (1 - 1e-7), hi_cut = s.tau2 * (1 + 1e-7);
    const double rr = tau / (mj * h);
    const double core_r = std::sqrt(lo_cut / mj2) / h, edge_r = std::sqrt(hi_cut / mj2) / h;
    const double inner_slack = ml * (edge_r * h + 1e-12);

    const auto stride = [&](int m) { return static_cast<std::int64_t>(grid.cube_stride(m)); };
    const std::int64_t stride_a = stride(2 * j), stride_b = stride(2 * j + 1);
    const std::int64_t stride_x = stride(2 * l), stride_y = stride(2 * l + 1);

    const DiskTable* table = nullptr;
    std::optional<DiskTable> local;
    if (cache) {
        for (const DiskTable& t : *cache)
            if (t.rr == rr && t.j == j) table = &t;
        if (!table) {
            if (cache->size() >= 64) cache->clear();
            cache->emplace_back(rr, core_r, edge_r, j, stride_x, stride_y);
            table = &cache->back();
        }
    } else {
        local.emplace(rr, core_r, edge_r, j, stride_x, stride_y);
        table = &*local;
    }
    const int cw = table->core_width, ew = table->edge_width, width = cw + ew;
    const std::int32_t* tdx = table->dx.data();
    const std::int32_t* tdy = table->dy.data();
    const std::int64_t* tdelta = table->delta.data();
    const std::uint32_t* tdelta32 = table->delta32.data();
    const std::uint8_t* core_count = table->core_count.data();

    const double outer = (mj * s.half + tau) / h + 1e-9;
    const double cx = s.cr[j] / h, cy = s.ci[j] / h;
    // w in lattice units is affine in (a, b)
    const double w0x = (s.cr[l] - rre * s.cr[j] + rim * s.ci[j]) / h, w0y = (s.ci[l] - rre * s.ci[j] - rim * s.cr[j]) / h;
    const double r_int = std::max(0.0, (s.half - inner_slack) * mj / h) * (1 - 1e-12);
    const double mj2h2 = mj2 * h * h;
    const long a_lo = std::max<long>(-e, iceil(cx - outer)), a_hi = std::min<long>(e, ifloor(cx + outer));
    LatticeIndex k{};
    double p[6] = {0, 0, 0, 0, 0, 0};
    for (long a = a_lo; a <= a_hi; ++a) {
        double dxa = a - cx;
        double wb = std::sqrt(std::max(0.0, outer * outer - dxa * dxa));
        long b_lo = std::max<long>(-e, iceil(cy - wb)), b_hi = std::min<long>(e, ifloor(cy + wb));
        if (b_lo > b_hi) continue;
        k[2 * j] = static_cast<int>(a);
        p[2 * j] = h * a;
        const double wxa = w0x + rre * a, wya = w0y + rim * a;
        const std::int64_t row_base = (a + e) * stride_a + e * (stride_b + stride_x + stride_y);

        // near the segment ends or the domain boundary: every offset is tested
        auto slow = [&](long b) {
            long sab = a * a + b * b;
            if (sab > lim) return;
            double qr = h * a - s.cr[j], qi = h * b - s.ci[j];
            double wx = wxa - rim * b, wy = wya + rre * b;
            bool interior = std::sqrt(qr * qr + qi * qi) / mj + inner_slack <= s.half;
            // foot parameter of w, q / u_j
            const double twr = (qr * s.ur[j] + qi * s.ui[j]) / mj2, twi = (qi * s.ur[j] - qr * s.ui[j]) / mj2;
            long x0 = ifloor(wx), y0 = ifloor(wy);
            int bx = std::min(DiskTable::bins - 1, static_cast<int>((wx - x0) * DiskTable::bins));
            int by = std::min(DiskTable::bins - 1, static_cast<int>((wy - y0) * DiskTable::bins));
            int bin = bx * DiskTable::bins + by;
            std::int64_t base = row_base + b * stride_b + x0 * stride_x + y0 * stride_y;
            k[2 * j + 1] = static_cast<int>(b);
            p[2 * j + 1] = h * b;
            auto test = [&](int i) {
                long x = x0 + tdx[i], y = y0 + tdy[i];
                if (x < -e || x > e || y < -e || y > e || sab + x * x + y * y > lim) return;
                double ex = x - wx, ey = y - wy;
                double d2 = mj2h2 * (ex * ex + ey * ey);
                if (d2 > hi_cut) return;
                if (!interior) {
                    // foot parameter of p is q / u_j + conj(u_l) (p_l - w)
                    double tr = twr + h * (s.ur[l] * ex + s.ui[l] * ey), ti = twi + h * (s.ur[l] * ey - s.ui[l] * ex);
                    double t2 = tr * tr + ti * ti;
                    if (t2 > s.half * s.half) {
                        double over = std::sqrt(t2) - s.half;
                        d2 += over * over;
                        if (d2 > hi_cut) return;
                    }
                }
                p[2 * l] = h * x;
                p[2 * l + 1] = h * y;
                if (d2 >= lo_cut && seg_dist2(s, p) > s.tau2) return;
                k[2 * l] = static_cast<int>(x);
                k[2 * l + 1] = static_cast<int>(y);
                f(k, static_cast<std::uint64_t>(base + tdelta[i]));
            };
            for (int i = bin * width, end = i + core_count[bin]; i < end; ++i) test(i);
            for (int i = bin * width + cw, end = i + ew; i < end; ++i) test(i);
        };

        // interior of the segment with every offset inside the domain
        auto fast = [&](long b) {
            double wx = wxa - rim * b, wy = wya + rre * b;
            long x0 = ifloor(wx), y0 = ifloor(wy);
            int bx = std::min(DiskTable::bins - 1, static_cast<int>((wx - x0) * DiskTable::bins));
            int by = std::min(DiskTable::bins - 1, static_cast<int>((wy - y0) * DiskTable::bins));
            int bin = bx * DiskTable::bins + by;
            std::int64_t base = row_base + b * stride_b + x0 * stride_x + y0 * stride_y;
            const int c = bin * width, ed = c + cw;
            if constexpr (bulk) {
                using T = std::remove_pointer_t<decltype(f.out)>;
                T* out = f.out;
                const T tb = static_cast<T>(base);
                if constexpr (sizeof(T) == 4) {
                    for (int i = 0; i < cw; i += 8)
                        for (int q = 0; q < 8; ++q) out[i + q] = tb + tdelta32[c + i + q];
                } else {
                    for (int i = 0; i < cw; ++i) out[i] = tb + static_cast<T>(tdelta[c + i]);
                }
                out += core_count[bin];
                for (int i = ed; i < ed + ew; ++i) {
                    double ex = x0 + tdx[i] - wx, ey = y0 + tdy[i] - wy;
                    double d2 = mj2h2 * (ex * ex + ey * ey);
                    *out = tb + static_cast<T>(tdelta[i]);
                    bool in = d2 < lo_cut;
                    if (!in && d2 <= hi_cut) {
                        p[2 * j + 1] = h * b;
                        p[2 * l] = h * (x0 + tdx[i]);
                        p[2 * l + 1] = h * (y0 + tdy[i]);
                        in = seg_dist2(s, p) <= s.tau2;
                    }
                    out += in;
                }
                f.out = out;
            } else {
                k[2 * j + 1] = static_cast<int>(b);
                for (int i = c; i < c + core_count[bin]; ++i) {
                    k[2 * l] = static_cast<int>(x0 + tdx[i]);
                    k[2 * l + 1] = static_cast<int>(y0 + tdy[i]);
                    f(k, static_cast<std::uint64_t>(base + tdelta[i]));
                }
                for (int i = ed; i < ed + ew; ++i) {
                    double ex = x0 + tdx[i] - wx, ey = y0 + tdy[i] - wy;
                    double d2 = mj2h2 * (ex * ex + ey * ey);
                    if (d2 > hi_cut) continue;
                    if (d2 >= lo_cut) {
                        p[2 * j + 1] = h * b;
                        p[2 * l] = h * (x0 + tdx[i]);
                        p[2 * l + 1] = h * (y0 + tdy[i]);
                        if (seg_dist2(s, p) > s.tau2) continue;
                    }
                    k[2 * l] = static_cast<int>(x0 + tdx[i]);
                    k[2 * l + 1] = static_cast<int>(y0 + tdy[i]);
                    f(k, static_cast<std::uint64_t>(base + tdelta[i]));
                }
            }
        };

        auto either = [&](long b) {
            long sab = a * a + b * b;
            if (sab > lim) return;
            double wx = wxa - rim * b, wy = wya + rre * b, qi = b - cy;
            double reach = std::sqrt(wx * wx + wy * wy) + edge_r + 1;
            if (dxa * dxa + qi * qi <= r_int * r_int && e >= reach && sab + reach * reach <= lim)
                fast(b);
            else
                slow(b);
        };

        // a conservative stretch of the row where `fast` applies, found once per row
        double wmax = std::max(std::hypot(wxa - rim * b_lo, wya + rre * b_lo), std::hypot(wxa - rim * b_hi, wya + rre * b_hi));
        double reach = wmax + edge_r + 1;
        long f_lo = b_hi + 1, f_hi = b_hi;
        double room = lim - reach * reach - double(a) * a;
        if (e >= reach && room >= 0 && r_int * r_int > dxa * dxa) {
            double bi = std::sqrt(r_int * r_int - dxa * dxa), bd = std::sqrt(room);
            f_lo = std::max({b_lo, iceil(cy - bi), iceil(-bd)});
            f_hi = std::min({b_hi, ifloor(cy + bi), ifloor(bd)});
            if (f_lo > f_hi) f_lo = b_hi + 1, f_hi = b_hi;
        }
        for (long b = b_lo; b < std::min(f_lo, b_hi + 1); ++b) either(b);
        for (long b = f_lo; b <= f_hi; ++b) fast(b);
        for (long b = std::max(f_hi + 1, b_lo); b <= b_hi; ++b) either(b);
    }
}

// calls f(k, cube index) for every grid ball whose centre lies within c_inc·δ of the tube's central segment
template <class F>
void enumerate_tube(const BallGrid& grid, const ComplexTube& t, std::vector<DiskTable>* cache, F&& f) {
    const double tau = grid_tau(grid, t);
    const Seg s = make_seg(t, tau);
    if (grid.n() == 2) {
        enumerate_tube_n2(grid, s, tau, cache, f);
        return;
    }
    TubeWalker walker(grid, s, tau);
    walker.run(f);
}

inline void point_of(const BallGrid& g, const LatticeIndex& k, double* p) {
    double h = g.pitch();
    for (int m = 0; m < 2 * g.n(); ++m) p[m] = h * k[m];
}

}  // namespace

BallCounts::BallCounts(const BallGrid& grid) : grid_(&grid) {
    if (grid.dense()) dense_.assign(grid.size(), 0);
}

void BallCounts::add(const LatticeIndex& k) {
    if (grid_->dense())
        ++dense_[grid_->slot(k)];
    else
        ++sparse_[k];
}

std::uint32_t BallCounts::at(const LatticeIndex& k) const {
    if (!grid_->contains(k)) return 0;
    if (grid_->dense()) return dense_[grid_->slot(k)];
    auto it = sparse_.find(k);
    return it == sparse_.end() ? 0 : it->second;
}

std::map<std::uint32_t, std::uint64_t> BallCounts::histogram() const {
    std::map<std::uint32_t, std::uint64_t> h;
    if (grid_->dense()) {
        std::vector<std::uint64_t> bins;
        for (std::uint32_t c : dense_) {
            if (c == 0) continue;
            if (c >= bins.size()) bins.resize(c + 1, 0);
            ++bins[c];
        }
        for (std::size_t c = 1; c < bins.size(); ++c)
            if (bins[c]) h[static_cast<std::uint32_t>(c)] = bins[c];
    } else {
        for (const auto& [k, c] : sparse_)
            if (c) ++h[c];
    }
    return h;
}

// increments are buffered and partitioned into blocks of nearby rows before applying
namespace {

template <class T>
void add_partitioned(std::vector<std::uint32_t>& dense, const BallGrid& grid, std::vector<T>& cubes,
                     std::vector<T>& scratch) {
    // bucket by high bits so that each bucket's counters stay cache resident
    const int shift = 16;
    std::size_t blocks = static_cast<std::size_t>(grid.cube_size() >> shift) + 1;
    std::vector<std::size_t> start(blocks + 1, 0);
    for (T v : cubes) ++start[(v >> shift) + 1];
    for (std::size_t b = 0; b < blocks; ++b) start[b + 1] += start[b];
    scratch.resize(cubes.size());
    for (T v : cubes) scratch[start[v >> shift]++] = v;
    for (T v : scratch) ++dense[grid.slot_of_cube(v)];
    cubes.clear();
}

}  // namespace

void BallCounts::add_cube_indices(std::vector<std::uint64_t>& cubes, std::vector<std::uint64_t>& scratch) {
    add_partitioned(dense_, *grid_, cubes, scratch);
}

void BallCounts::add_cube_indices(std::vector<std::uint32_t>& cubes, std::vector<std::uint32_t>& scratch) {
    add_partitioned(dense_, *grid_, cubes, scratch);
}

BallCounts count_incidences(const BallGrid& grid, const std::vector<ComplexTube>& tubes) {
    BallCounts counts(grid);
    std::vector<DiskTable> cache;
    if (!grid.dense()) {
        for (const ComplexTube& t : tubes)
            enumerate_tube(grid, t, &cache, [&](const LatticeIndex& k, std::uint64_t) { counts.add(k); });
        return counts;
    }
    const std::size_t chunk = std::size_t(1) << 22;
    auto run = [&](auto tag) {
        using T = decltype(tag);
        std::vector<T> cubes(chunk), scratch;
        std::size_t used = 0;
        for (const ComplexTube& t : tubes) {
            std::size_t need = emit_bound(grid, t);
            if (used + need > cubes.size()) {
                cubes.resize(used);
                counts.add_cube_indices(cubes, scratch);
                used = 0;
                cubes.resize(std::max(chunk, need));
            }
            CubeSink<T> sink{cubes.data() + used};
            enumerate_tube(grid, t, &cache, sink);
            used = static_cast<std::size_t>(sink.out - cubes.data());
        }
        cubes.resize(used);
        counts.add_cube_indices(cubes, scratch);
    };
    if (grid.cube_size() <= (std::uint64_t(1) << 32))
        run(std::uint32_t{});
    else
        run(std::uint64_t{});
    return counts;
}

BallCounts count_incidences_exhaustive(const BallGrid& grid, const std::vector<ComplexTube>& tubes) {
    BallCounts counts(grid);
    std::vector<Seg> segs;
    for (const ComplexTube& t : tubes) segs.push_back(make_seg(t, grid_tau(grid, t)));
    double p[6] = {0, 0, 0, 0, 0, 0};
    grid.for_each([&](const LatticeIndex& k) {
        point_of(grid, k, p);
        for (const Seg& s : segs)
            if (seg_dist2(s, p) <= s.tau2) counts.add(k);
    });
    return counts;
}

std::vector<LatticeIndex> incident_balls(const BallGrid& grid, const ComplexTube& tube) {
    std::vector<LatticeIndex> out;
    enumerate_tube(grid, tube, nullptr, [&](const LatticeIndex& k, std::uint64_t) { out.push_back(k); });
    return out;
}

std::uint64_t RichnessProfile::at(std::uint64_t r) const {
    std::uint64_t total = 0;
    for (auto it = histogram.lower_bound(static_cast<std::uint32_t>(std::min<std::uint64_t>(r, 0xffffffffULL)));
         it != histogram.end(); ++it)
        total += it->second;
    return r == 0 ? grid_size : total;
}

RichnessProfile profile_from_counts(const BallCounts& counts, std::uint64_t tubes) {
    RichnessProfile prof;
    prof.n = counts.grid().n();
    prof.delta = counts.grid().delta();
    prof.grid_size = counts.grid().size();
    prof.tubes = tubes;
    prof.histogram = counts.histogram();
    for (std::uint64_t r = 1;; r *= 2) {
        std::uint64_t c = prof.at(r);
        prof.entries[r] = c;
        if (c == 0) break;
    }
    return prof;
}

std::string family_identity(const TubeFamily& f) {
    std::ostringstream os;
    os << "n=" << f.n << " delta=" << f.delta << " W=" << f.big_w << " kind=" << to_string(f.spacing_kind)
       << " param=" << f.spacing_param << " seed=" << f.seed << " tubes=" << f.tubes.size();
    return os.str();
}

RichnessProfile richness_profile(const BallGrid& grid, const TubeFamily& family) {
    require(std::abs(grid.delta() - family.delta) <= 1e-12 * family.delta, "richness_profile: grid delta differs from family delta");
    RichnessProfile p = profile_from_counts(count_incidences(grid, family.tubes), family.tubes.size());
    p.family = family_identity(family);
    return p;
}

RichnessProfile richness_profile_exhaustive(const BallGrid& grid, const TubeFamily& family) {
    require(std::abs(grid.delta() - family.delta) <= 1e-12 * family.delta, "richness_profile: grid delta differs from family delta");
    RichnessProfile p = profile_from_counts(count_incidences_exhaustive(grid, family.tubes), family.tubes.size());
    p.family = family_identity(family);
    p.mode = "exhaustive";
    return p;
}

DyadicClass dyadic_pigeonhole(const std::vector<std::pair<std::size_t, double>>& weights) {
    require(!weights.empty(), "dyadic_pigeonhole: empty input");
    std::map<int, DyadicClass> classes;
    for (const auto& [item, v] : weights) {
        require(v > 0 && std::isfinite(v), "dyadic_pigeonhole: values must be positive and finite");
        int e;
        std::frexp(v, &e);
        DyadicClass& c = classes[e - 1];
        c.k = e - 1;
        c.members.push_back(item);
        c.total += v;
    }
    const DyadicClass* best = nullptr;
    for (const auto& [k, c] : classes)
        if (!best || c.total > best->total) best = &c;
    DyadicClass out = *best;
    out.lo = std::ldexp(1.0, out.k);
    out.hi = std::ldexp(1.0, out.k + 1);
    out.classes = classes.size();
    return out;
}

double fit_exponent(const std::vector<std::pair<double, double>>& points) {
    require(points.size() >= 2, "fit_exponent: need at least two points");
    double sx = 0, sy = 0;
    for (const auto& [x, y] : points) {
        require(x > 0 && y > 0, "fit_exponent: values must be positive");
        sx += std::log(x);
        sy += std::log(y);
    }
    double mx = sx / points.size(), my = sy / points.size();
    double sxx = 0, sxy = 0;
    for (const auto& [x, y] : points) {
        double dx = std::log(x) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(y) - my);
    }
    require(sxx > 0, "fit_exponent: x values must not all coincide");
    return sxy / sxx;
}

std::string to_string(Theorem t) { return t == Theorem::t41 ? "t41" : "t42"; }

Theorem theorem_from_string(const std::string& s) {
    if (s == "t41") return Theorem::t41;
    if (s == "t42") return Theorem::t42;
    throw PreconditionError("unknown theorem '" + s + "' (expected t41 or t42)");
}

BoundReport verify_bound(const TubeFamily& family, const RichnessProfile& profile, Theorem theorem, double epsilon,
                         double constant, bool all_r) {
    require(constant > 0 && epsilon >= 0, "verify_bound: constant must be positive and epsilon nonnegative");
    require(profile.n == family.n || profile.entries.empty(), "verify_bound: profile dimension differs from family");
    BoundReport rep;
    rep.theorem = theorem;
    rep.epsilon = epsilon;
    rep.constant = constant;
    const int n = family.n;
    const double delta = family.delta, w = family.big_w;
    const double tubes = static_cast<double>(family.tubes.size());
    const double loss = constant * std::pow(delta, -epsilon);
    const double base = std::pow(delta, 2.0 * (n - 1) - epsilon);
    std::function<double(double)> bound;
    if (theorem == Theorem::t41) {
        rep.applicable = family.spacing_kind == SpacingKind::uniform_n;
        rep.threshold = base * tubes;
        bound = [=](double r) { return std::pow(w, -2.0 * (n - 1)) * tubes * tubes / (r * r); };
    } else {
        bool exact = family.spacing_kind == SpacingKind::exact_h0;
        bool at_most = family.spacing_kind == SpacingKind::at_most_h0;
        rep.applicable = (exact || at_most) && (n == 2 || n == 3);
        double h0 = family.spacing_param;
        double q = (n + 1.0) / (n - 1.0);
        if (at_most) {
            rep.threshold = std::max(base * std::pow(w, 4.0 * (n - 1)), 1 + h0);
            bound = [=](double r) { return std::pow(w, 4.0 * n) * std::pow(r, -q); };
        } else {
            rep.threshold = std::max(base * tubes, 1 + h0);
            bound = [=](double r) { return std::pow(tubes, n / (n - 1.0)) * std::pow(r, -q); };
        }
    }
    if (!rep.applicable) {
        rep.note = "spacing kind " + to_string(family.spacing_kind) + " does not meet the premise of " + to_string(theorem);
        rep.verdict = false;
        return rep;
    }
    bool ok = true;
    for (const auto& [r, count] : profile.entries) {
        if (!all_r && static_cast<double>(r) < rep.threshold) continue;
        BoundRow row;
        row.r = r;
        row.count = count;
        row.bound = loss * bound(static_cast<double>(r));
        row.ratio = count / row.bound;
        rep.max_ratio = std::max(rep.max_ratio, row.ratio);
        ok = ok && row.ratio <= 1;
        rep.rows.push_back(row);
    }
    rep.verdict = ok;
    return rep;
}

namespace {

bool unit_incident(const ComplexVector& c, const ComplexTube& t, double cinc) {
    return t.distance_to_segment(c) <= cinc;
}

}  // namespace

DichotomyReport heavy_ball_check(const std::vector<Ball>& balls, const std::vector<ComplexTube>& tubes, int big_e,
                                 double epsilon, double big_d, double slack) {
    require(big_e >= 1, "heavy_ball_check: E must be at least 1");
    require(big_d > 1 && epsilon > 0 && epsilon < 1 && slack >= 1, "heavy_ball_check: need D > 1, 0 < eps < 1, slack >= 1");
    DichotomyReport rep;
    rep.n = tubes.empty() ? (balls.empty() ? 2 : balls.front().dim()) : tubes.front().dim();
    const int n = rep.n;
    rep.big_d = big_d;
    rep.big_e = big_e;
    rep.epsilon = epsilon;
    rep.slack = slack;
    rep.lambda = std::pow(big_d, epsilon / (100.0 * n));
    rep.rho = std::pow(big_d, epsilon * epsilon * epsilon) / rep.lambda;
    rep.balls = balls.size();
    rep.tubes = tubes.size();
    const double lambda = rep.lambda, rho = rep.rho;
    const double cinc = incidence_constant(n);

    for (const ComplexTube& t : tubes)
        require(std::abs(t.radius - 1) < 1e-12 && t.dim() == n, "heavy_ball_check: tubes must have radius 1");
    for (std::size_t i = 0; i < balls.size(); ++i) {
        require(std::abs(balls[i].radius - 1) < 1e-12 && balls[i].dim() == n, "heavy_ball_check: balls must be unit balls");
        int c = 0;
        for (const ComplexTube& t : tubes) c += unit_incident(balls[i].center, t, cinc);
        if (c < big_e || c >= 2 * big_e)
            throw PreconditionError("heavy_ball_check: ball " + std::to_string(i) + " lies in " + std::to_string(c) +
                                    " tubes, outside [E, 2E)");
    }

    rep.thin_bound = lambda * lambda / (rho * rho) / (double(big_e) * big_e) * std::pow(big_d, 2.0 * (n - 1)) *
                     static_cast<double>(tubes.size());
    rep.thin_ratio = rep.thin_bound > 0 ? balls.size() / rep.thin_bound : (balls.empty() ? 0 : INFINITY);
    rep.thin_holds = rep.thin_ratio <= slack;

    rep.thick_tube_threshold = big_e / (lambda * lambda) * std::pow(rho, -2.0 * n) / slack;
    rep.capture_threshold = std::pow(lambda, -2.0 * (n + 1)) * std::pow(rho, -2.0 * n) / slack;
    if (balls.empty()) return rep;

    // candidate 2λ-ball centres: nearest points of a pitch λ/√(2n) lattice to each ball
    const double pitch = lambda / std::sqrt(2.0 * n);
    std::map<LatticeIndex, ComplexVector> cands;
    for (const Ball& b : balls) {
        LatticeIndex k{};
        ComplexVector c(n);
        for (int m = 0; m < n; ++m) {
            k[2 * m] = static_cast<int>(std::lround(b.center(m).real() / pitch));
            k[2 * m + 1] = static_cast<int>(std::lround(b.center(m).imag() / pitch));
            c(m) = cplx(pitch * k[2 * m], pitch * k[2 * m + 1]);
        }
        cands.emplace(k, c);
    }
    struct Cand {
        LatticeIndex k;
        ComplexVector c;
        std::size_t count;
    };
    std::vector<Cand> order;
    for (const auto& [k, c] : cands) {
        std::size_t cnt = 0;
        for (const ComplexTube& t : tubes) cnt += t.distance_to_segment(c) <= 2 * lambda + 1;
        order.push_back({k, c, cnt});
    }
    std::stable_sort(order.begin(), order.end(), [](const Cand& a, const Cand& b) { return a.count > b.count; });
    for (const Cand& c : order) {
        if (static_cast<double>(c.count) < rep.thick_tube_threshold) break;
        bool apart = true;
        for (const ThickBall& q : rep.thick_cover)
            if ((q.center - c.c).norm() < 4 * lambda) {
                apart = false;
                break;
            }
        if (apart) rep.thick_cover.push_back({c.c, c.count});
    }
    std::size_t captured = 0;
    for (const Ball& b : balls)
        for (const ThickBall& q : rep.thick_cover)
            if ((b.center - q.center).norm() + 1 <= 2 * lambda) {
                ++captured;
                break;
            }
    rep.captured_fraction = static_cast<double>(captured) / balls.size();
    rep.thick_holds = !rep.thick_cover.empty() && rep.captured_fraction >= rep.capture_threshold;
    return rep;
}

DichotomyConfig generate_dichotomy_config(int n, double big_d, const std::string& kind, int tube_count,
                                          std::uint64_t seed) {
    require(n == 2 || n == 3, "generate_dichotomy_config: n must be 2 or 3");
    require(big_d >= 11 && big_d <= 1024, "generate_dichotomy_config: D must lie in [11, 1024]");
    require(kind == "concentrated" || kind == "generic" || kind == "mixed",
            "generate_dichotomy_config: kind must be concentrated, generic or mixed");
    require(tube_count >= 1, "generate_dichotomy_config: need at least one tube");
    Rng rng(seed);
    auto in_ball = [&](double radius) {
        ComplexVector v = random_unit(n, rng);
        return ComplexVector(v * (radius * std::pow(rng.uniform(), 1.0 / (2 * n))));
    };
    std::vector<ComplexVector> hubs;
    for (int h = 0; h < 2; ++h) hubs.push_back(in_ball(big_d / 4));

    DichotomyConfig cfg;
    cfg.big_d = big_d;
    cfg.kind = kind;
    for (int i = 0; i < tube_count; ++i) {
        bool conc = kind == "concentrated" || (kind == "mixed" && i % 2 == 0);
        ComplexVector u = random_unit(n, rng);
        ComplexVector c;
        if (conc) {
            double rad = big_d / 4 * std::sqrt(rng.uniform());
            cplx z = std::polar(rad, 2 * kPi * rng.uniform());
            c = hubs[rng.below(hubs.size())] - z * u;
        } else {
            c = in_ball(big_d / 2);
        }
        cfg.tubes.push_back(ComplexTube::checked(c, u, big_d, 1));
    }

    // candidate balls from the rescaled δ = 1/D grid, recounted in the unit frame
    BallGrid grid(n, 1 / big_d, 1);
    const double cinc = incidence_constant(n);
    std::unordered_map<LatticeIndex, std::uint32_t, LatticeIndexHash> counts;
    for (const ComplexTube& t : cfg.tubes) {
        ComplexTube scaled(ComplexVector(t.center / big_d), t.direction, 1, 1 / big_d);
        for (const LatticeIndex& k : incident_balls(grid, scaled)) counts.emplace(k, 0);
    }
    std::vector<LatticeIndex> keys;
    for (const auto& [k, c] : counts) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    std::vector<ComplexVector> centres;
    std::vector<std::pair<std::size_t, double>> weights;
    for (const LatticeIndex& k : keys) {
        ComplexVector c = grid.center(k) * big_d;
        int cnt = 0;
        for (const ComplexTube& t : cfg.tubes) cnt += unit_incident(c, t, cinc);
        if (cnt == 0) continue;
        weights.emplace_back(centres.size(), cnt);
        centres.push_back(c);
    }
    require(!weights.empty(), "generate_dichotomy_config: no incident balls");
    DyadicClass cls = dyadic_pigeonhole(weights);
    if (kind != "generic") {
        // concentrated: the richest balls; mixed: the heaviest class with E >= 2
        std::map<int, std::vector<std::pair<std::size_t, double>>> by_class;
        for (const auto& w : weights) by_class[static_cast<int>(std::floor(std::log2(w.second)))].push_back(w);
        if (kind == "concentrated") {
            cls = dyadic_pigeonhole(by_class.rbegin()->second);
        } else if (by_class.size() > 1) {
            by_class.erase(0);
            std::vector<std::pair<std::size_t, double>> rest;
            for (const auto& [k, v] : by_class) rest.insert(rest.end(), v.begin(), v.end());
            cls = dyadic_pigeonhole(rest);
        }
    }
    cfg.big_e = static_cast<int>(cls.lo);
    for (std::size_t i : cls.members) cfg.balls.emplace_back(centres[i], 1.0);
    return cfg;
}

}  // namespace ctube
