#include "ctube/solids.hpp"

#include <array>
#include <limits>
#include <thread>

#include "ctube/quadrature.hpp"

namespace ctube {

ComplexTube::ComplexTube(ComplexVector c, ComplexVector u, double l, double r)
    : center(std::move(c)), direction(std::move(u)), length(l), radius(r) {
    require(center.size() == direction.size(), "ComplexTube: dimension mismatch");
    require(is_unit(direction, 1e-9), "ComplexTube: direction must be a unit vector");
    require(length > 0 && radius > 0, "ComplexTube: length and radius must be positive");
}

ComplexTube ComplexTube::checked(ComplexVector c, ComplexVector u, double l, double r) {
    require(l > 10 * r, "ComplexTube: length must exceed 10 * radius");
    return ComplexTube(std::move(c), std::move(u), l, r);
}

double ComplexTube::distance_to_axis(const ComplexVector& p) const {
    ComplexVector d = p - center;
    return (d - direction.dot(d) * direction).norm();
}

double ComplexTube::distance_to_segment(const ComplexVector& p) const {
    ComplexVector d = p - center;
    cplx z = direction.dot(d);
    double L = half_length();
    if (std::abs(z) > L) z *= L / std::abs(z);
    return (d - z * direction).norm();
}

Ball::Ball(ComplexVector c, double r) : center(std::move(c)), radius(r) {
    require(radius > 0, "Ball: radius must be positive");
}

bool Slab::contains(const RealVector& x) const {
    RealVector proj = axes.transpose() * (x - center);
    for (Eigen::Index k = 0; k < proj.size(); ++k)
        if (std::abs(proj(k)) > half_widths(k)) return false;
    return true;
}

double unit_ball_volume(int k) { return std::pow(kPi, 0.5 * k) / std::tgamma(0.5 * k + 1); }

namespace {

// integral of sin^k over [0, phi]
double sin_power_integral(int k, double phi) {
    if (k == 0) return phi;
    if (k == 1) return 1 - std::cos(phi);
    double s = std::sin(phi);
    return -std::pow(s, k - 1) * std::cos(phi) / k + double(k - 1) / k * sin_power_integral(k - 2, phi);
}

}  // namespace

double cap_volume(int dim, double R, double h) {
    if (h <= 0) return 0;
    if (h >= 2 * R) return unit_ball_volume(dim) * std::pow(R, dim);
    double phi = std::acos(std::clamp((R - h) / R, -1.0, 1.0));
    return unit_ball_volume(dim - 1) * std::pow(R, dim) * sin_power_integral(dim, phi);
}

double lens_volume(int dim, double R1, double R2, double d) {
    d = std::abs(d);
    if (d >= R1 + R2) return 0;
    if (d <= std::abs(R1 - R2)) return unit_ball_volume(dim) * std::pow(std::min(R1, R2), dim);
    double x1 = (d * d + R1 * R1 - R2 * R2) / (2 * d);
    return cap_volume(dim, R1, R1 - x1) + cap_volume(dim, R2, R2 - (d - x1));
}

double tube_core_volume(const ComplexTube& t) {
    int m = 2 * t.dim() - 2;
    return kPi * t.half_length() * t.half_length() * unit_ball_volume(m) * std::pow(t.radius, m);
}

double tube_volume(const ComplexTube& t) {
    // core cylinder plus the rounded rim beyond |z| = l/2
    int m = 2 * t.dim() - 2;
    double L = t.half_length(), r = t.radius;
    auto [x, w] = quad::gauss_legendre(24);
    double rim = 0;
    for (size_t k = 0; k < x.size(); ++k) {
        double s = 0.5 * r * (x[k] + 1);
        rim += 0.5 * r * w[k] * 2 * kPi * (L + s) * unit_ball_volume(m) * std::pow(r * r - s * s, 0.5 * m);
    }
    return tube_core_volume(t) + rim;
}

double solid_volume(const Solid& a) {
    if (auto b = std::get_if<Ball>(&a)) return unit_ball_volume(2 * b->dim()) * std::pow(b->radius, 2 * b->dim());
    return tube_volume(std::get<ComplexTube>(a));
}

bool tube_contains_point(const ComplexTube& t, const ComplexVector& p) {
    return t.distance_to_segment(p) <= t.radius;
}

bool ball_contains_point(const Ball& b, const ComplexVector& p) { return (p - b.center).norm() <= b.radius; }

double projection_residual(const Eigen::Vector2d& x, const Eigen::Vector2d& y, double r_slope, double zeta) {
    require(r_slope > 0, "projection_residual: slope must be positive");
    double r2 = r_slope * r_slope;
    return std::sqrt(r2 / (1 + r2)) * (x - rotate2<double>(y, zeta) / r_slope).norm();
}

bool slice_membership(const Eigen::Vector2d& x, const Eigen::Vector2d& y, double r_slope, double zeta,
                      double delta) {
    require(r_slope > 0, "slice_membership: slope must be positive");
    require(delta > 0, "slice_membership: delta must be positive");
    double rad = delta * std::sqrt(1 + r_slope * r_slope) / r_slope;
    return (x - rotate2<double>(y, zeta) / r_slope).norm() < rad;
}

double intersection_volume_exact(double theta, double delta, int n) {
    require(n == 2 || n == 3, "intersection_volume_exact: n must be 2 or 3");
    require(delta > 0, "intersection_volume_exact: delta must be positive");
    require(theta <= kPi / 2 + 1e-15 && theta >= 0, "intersection_volume_exact: theta outside [0, pi/2]");
    double s = std::sin(theta);
    if (s == 0) throw PreconditionError("intersection_volume_exact: parallel lines have infinite intersection");
    double base = kPi * kPi * std::pow(delta, 4) / (s * s);
    if (n == 2) return base;
    // fibre over the common perpendicular: int_{|w|<delta} (delta^2 - |w|^2)^2 dw
    return base * kPi * delta * delta / 3;
}


namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// flat representation used inside the sampling loops
struct Flat {
    int n = 2;
    int kind = 0;  // 0 ball, 1 tube / line neighbourhood
    std::array<cplx, 3> c{}, u{};
    double half = kInf;
    double r = 0;

    bool contains(const std::array<cplx, 3>& x) const {
        std::array<cplx, 3> d;
        for (int k = 0; k < n; ++k) d[k] = x[k] - c[k];
        if (kind == 0) {
            double s = 0;
            for (int k = 0; k < n; ++k) s += std::norm(d[k]);
            return s <= r * r;
        }
        cplx z = 0;
        for (int k = 0; k < n; ++k) z += std::conj(u[k]) * d[k];
        double az = std::abs(z);
        if (az > half) z *= half / az;
        double s = 0;
        for (int k = 0; k < n; ++k) s += std::norm(d[k] - z * u[k]);
        return s <= r * r;
    }
};

Flat flatten(const MCSolid& a) {
    Flat f;
    auto fill = [&](const ComplexVector& c, const ComplexVector* u) {
        f.n = static_cast<int>(c.size());
        for (int k = 0; k < f.n; ++k) {
            f.c[k] = c(k);
            if (u) f.u[k] = (*u)(k);
        }
    };
    if (auto b = std::get_if<Ball>(&a)) {
        fill(b->center, nullptr);
        f.r = b->radius;
    } else if (auto t = std::get_if<ComplexTube>(&a)) {
        fill(t->center, &t->direction);
        f.kind = 1;
        f.half = t->half_length();
        f.r = t->radius;
    } else {
        const auto& ln = std::get<LineNeighborhood>(a);
        fill(ln.line.point, &ln.line.direction);
        f.kind = 1;
        f.r = ln.radius;
    }
    return f;
}

// sampling region: a ball, or a cylinder {c + z u + e : |z| <= zmax, |e| <= r, e ⊥ u}
struct Region {
    int n = 2;
    bool ball = true;
    std::array<cplx, 3> c{}, u{};
    std::array<std::array<cplx, 3>, 2> perp{};
    double zmax = 0, r = 0;

    double volume() const {
        if (ball) return unit_ball_volume(2 * n) * std::pow(r, 2 * n);
        return kPi * zmax * zmax * unit_ball_volume(2 * n - 2) * std::pow(r, 2 * n - 2);
    }

    std::array<cplx, 3> sample(Rng& rng) const {
        std::array<cplx, 3> x = c;
        if (ball) {
            std::array<double, 6> v;
            double s;
            do {
                s = 0;
                for (int k = 0; k < 2 * n; ++k) {
                    v[k] = 2 * rng.uniform() - 1;
                    s += v[k] * v[k];
                }
            } while (s > 1);
            for (int k = 0; k < n; ++k) x[k] += r * cplx(v[2 * k], v[2 * k + 1]);
            return x;
        }
        double a, b;
        do {
            a = 2 * rng.uniform() - 1;
            b = 2 * rng.uniform() - 1;
        } while (a * a + b * b > 1);
        cplx z(zmax * a, zmax * b);
        std::array<double, 4> v;
        double s;
        do {
            s = 0;
            for (int k = 0; k < 2 * n - 2; ++k) {
                v[k] = 2 * rng.uniform() - 1;
                s += v[k] * v[k];
            }
        } while (s > 1);
        for (int k = 0; k < n; ++k) {
            cplx e = 0;
            for (int j = 0; j < n - 1; ++j) e += cplx(v[2 * j], v[2 * j + 1]) * perp[j][k];
            x[k] += z * u[k] + r * e;
        }
        return x;
    }
};

Region cylinder(const ComplexVector& c, const ComplexVector& u, double zmax, double r) {
    Region g;
    g.n = static_cast<int>(c.size());
    g.ball = false;
    g.zmax = zmax;
    g.r = r;
    Eigen::MatrixXcd b = complement_basis(u);
    for (int k = 0; k < g.n; ++k) {
        g.c[k] = c(k);
        g.u[k] = u(k);
        for (int j = 0; j < g.n - 1; ++j) g.perp[j][k] = b(k, j);
    }
    return g;
}

// bounding sphere of a finite solid
std::pair<ComplexVector, double> bounding_sphere(const MCSolid& a) {
    if (auto b = std::get_if<Ball>(&a)) return {b->center, b->radius};
    const auto& t = std::get<ComplexTube>(a);
    return {t.center, t.half_length() + t.radius};
}

// returns false when the two solids are certainly disjoint
bool sampling_region(const MCSolid& a1, const MCSolid& a2, Region& out) {
    const bool line1 = std::holds_alternative<LineNeighborhood>(a1);
    const bool line2 = std::holds_alternative<LineNeighborhood>(a2);
    if (!line1) {
        auto [c1, r1] = bounding_sphere(a1);
        if (!line2) {
            auto [c2, r2] = bounding_sphere(a2);
            if ((c1 - c2).norm() > r1 + r2) return false;
        } else {
            const auto& ln = std::get<LineNeighborhood>(a2);
            if (ln.line.distance_to(c1) > r1 + ln.radius) return false;
        }
        if (auto b = std::get_if<Ball>(&a1)) {
            out.n = b->dim();
            out.ball = true;
            out.r = b->radius;
            for (int k = 0; k < out.n; ++k) out.c[k] = b->center(k);
        } else {
            const auto& t = std::get<ComplexTube>(a1);
            out = cylinder(t.center, t.direction, t.half_length() + t.radius, t.radius);
        }
        return true;
    }
    const auto& ln = std::get<LineNeighborhood>(a1);
    const ComplexVector& p1 = ln.line.point;
    const ComplexVector& u1 = ln.line.direction;
    if (!line2) {
        auto [c2, r2] = bounding_sphere(a2);
        cplx zf = u1.dot(ComplexVector(c2 - p1));
        double d = ln.line.distance_to(c2);
        double reach = r2 + ln.radius;
        if (d > reach) return false;
        out = cylinder(ComplexVector(p1 + zf * u1), u1, std::sqrt(reach * reach - d * d), ln.radius);
        return true;
    }
    const auto& l2 = std::get<LineNeighborhood>(a2);
    const ComplexVector& u2 = l2.line.direction;
    double s = std::sin(std::acos(overlap<double>(u1, u2)));
    if (s < 1e-12) throw PreconditionError("intersection_volume_mc: parallel line neighbourhoods");
    Eigen::MatrixXcd m(u1.size(), 2);
    m.col(0) = u1;
    m.col(1) = -u2;
    Eigen::VectorXcd z = m.colPivHouseholderQr().solve(ComplexVector(l2.line.point - p1));
    double d = (m * z - (l2.line.point - p1)).norm();
    if (d > ln.radius + l2.radius) return false;
    out = cylinder(ComplexVector(p1 + z(0) * u1), u1, (ln.radius + l2.radius + d) / s, ln.radius);
    return true;
}

}  // namespace

VolumeEstimate intersection_volume_mc(const MCSolid& a1, const MCSolid& a2, const MCOptions& opts) {
    require(opts.samples >= 10000, "intersection_volume_mc: at least 1e4 samples required");
    require(opts.shards >= 1, "intersection_volume_mc: shard count must be positive");
    VolumeEstimate est;
    est.samples = opts.samples;
    est.seed = opts.seed;
    Region region;
    if (!sampling_region(a1, a2, region)) return est;
    Flat f1 = flatten(a1), f2 = flatten(a2);
    require(f1.n == f2.n && f1.n == region.n, "intersection_volume_mc: dimension mismatch");

    std::vector<std::uint64_t> hits(opts.shards, 0);
    auto run = [&](int shard) {
        std::uint64_t count = opts.samples / opts.shards + (std::uint64_t(shard) < opts.samples % opts.shards);
        Rng rng(derive_seed(opts.seed, shard));
        std::uint64_t h = 0;
        for (std::uint64_t i = 0; i < count; ++i) {
            auto x = region.sample(rng);
            if (f1.contains(x) && f2.contains(x)) ++h;
        }
        hits[shard] = h;
    };
    std::vector<std::thread> pool;
    for (int s = 1; s < opts.shards; ++s) pool.emplace_back(run, s);
    run(0);
    for (auto& t : pool) t.join();

    std::uint64_t total = 0;
    for (auto h : hits) total += h;
    double p = double(total) / double(opts.samples);
    double vol = region.volume();
    est.value = vol * p;
    est.standard_error = vol * std::sqrt(p * (1 - p) / double(opts.samples));
    return est;
}


double ball_tube_overlap(int n, double ball_radius, double tube_radius, double a) {
    int m = 2 * n - 2;
    if (a >= ball_radius + tube_radius) return 0;
    auto slice = [&](double s) { return lens_volume(m, std::sqrt(std::max(s, 0.0)), tube_radius, a); };
    std::vector<double> breaks;
    double lo = std::abs(tube_radius - a), hi = tube_radius + a;
    breaks.push_back(lo * lo);
    breaks.push_back(hi * hi);
    double R2 = ball_radius * ball_radius;
    double scale = unit_ball_volume(2 * n) * std::pow(ball_radius, 2 * n);
    return kPi * quad::integrate_pieces(slice, 0, R2, breaks, 1e-13 * scale);
}

namespace {

const std::pair<std::vector<double>, std::vector<double>>& radial_rule() {
    static const auto rule = quad::gauss_legendre(16);
    return rule;
}

constexpr int kAngles = 48;

double ball_tube_fast(const Ball& b, const ComplexTube& t) {
    int n = t.dim();
    ComplexVector d = b.center - t.center;
    cplx z0 = t.direction.dot(d);
    double a = (d - z0 * t.direction).norm();
    double L = t.half_length(), rb = b.radius;
    if (a >= rb + t.radius) return 0;
    double az = std::abs(z0);
    if (az - rb >= L) return 0;
    if (az + rb <= L) return ball_tube_overlap(n, rb, t.radius, a);
    const auto& [x, w] = radial_rule();
    int m = 2 * n - 2;
    double total = 0;
    for (size_t k = 0; k < x.size(); ++k) {
        double r = 0.5 * rb * (x[k] + 1);
        double slice = lens_volume(m, std::sqrt(std::max(rb * rb - r * r, 0.0)), t.radius, a);
        if (slice == 0) continue;
        int inside = 0;
        for (int j = 0; j < kAngles; ++j)
            if (std::abs(z0 + std::polar(r, 2 * kPi * (j + 0.5) / kAngles)) <= L) ++inside;
        total += 0.5 * rb * w[k] * r * slice * (2 * kPi * inside / kAngles);
    }
    return total;
}

bool parallel(const ComplexVector& u1, const ComplexVector& u2) { return 1 - overlap<double>(u1, u2) < 1e-12; }

double line_distance(const ComplexTube& t1, const ComplexTube& t2) {
    Eigen::MatrixXcd m(t1.dim(), 2);
    m.col(0) = t1.direction;
    m.col(1) = -t2.direction;
    ComplexVector rhs = t2.center - t1.center;
    Eigen::VectorXcd z = m.colPivHouseholderQr().solve(rhs);
    return (m * z - rhs).norm();
}

// cross-sections of t1 perpendicular to its axis, tested against t2's perpendicular ball
double tube_tube_oriented(const ComplexTube& t1, const ComplexTube& t2) {
    int m = 2 * t1.dim() - 2;
    const auto& [x, w] = radial_rule();
    double L1 = t1.half_length(), L2 = t2.half_length();
    double total = 0;
    for (size_t k = 0; k < x.size(); ++k) {
        double r = 0.5 * L1 * (x[k] + 1);
        double ring = 0;
        for (int j = 0; j < kAngles; ++j) {
            cplx z = std::polar(r, 2 * kPi * (j + 0.5) / kAngles);
            ComplexVector p = t1.center + z * t1.direction - t2.center;
            cplx z2 = t2.direction.dot(p);
            if (std::abs(z2) > L2) continue;
            double d = (p - z2 * t2.direction).norm();
            ring += lens_volume(m, t1.radius, t2.radius, d);
        }
        total += 0.5 * L1 * w[k] * r * ring * (2 * kPi / kAngles);
    }
    return total;
}

double tube_tube_fast(const ComplexTube& t1, const ComplexTube& t2) {
    if ((t1.center - t2.center).norm() > t1.half_length() + t2.half_length() + t1.radius + t2.radius) return 0;
    int m = 2 * t1.dim() - 2;
    if (parallel(t1.direction, t2.direction)) {
        ComplexVector d = t2.center - t1.center;
        cplx z = t1.direction.dot(d);
        double a = (d - z * t1.direction).norm();
        return lens_volume(2, t1.half_length(), t2.half_length(), std::abs(z)) *
               lens_volume(m, t1.radius, t2.radius, a);
    }
    if (line_distance(t1, t2) >= t1.radius + t2.radius) return 0;
    return 0.5 * (tube_tube_oriented(t1, t2) + tube_tube_oriented(t2, t1));
}

}  // namespace

double overlap_volume(const Solid& a1, const Solid& a2) {
    const Ball* b1 = std::get_if<Ball>(&a1);
    const Ball* b2 = std::get_if<Ball>(&a2);
    if (b1 && b2) {
        require(b1->dim() == b2->dim(), "overlap_volume: dimension mismatch");
        return lens_volume(2 * b1->dim(), b1->radius, b2->radius, (b1->center - b2->center).norm());
    }
    if (b1) return ball_tube_fast(*b1, std::get<ComplexTube>(a2));
    if (b2) return ball_tube_fast(*b2, std::get<ComplexTube>(a1));
    const auto& t1 = std::get<ComplexTube>(a1);
    const auto& t2 = std::get<ComplexTube>(a2);
    require(t1.dim() == t2.dim(), "overlap_volume: dimension mismatch");
    return tube_tube_fast(t1, t2);
}

double max_overlap_volume(const Solid& a1, const Solid& a2) {
    const Ball* b1 = std::get_if<Ball>(&a1);
    const Ball* b2 = std::get_if<Ball>(&a2);
    if (b1 && b2) return unit_ball_volume(2 * b1->dim()) * std::pow(std::min(b1->radius, b2->radius), 2 * b1->dim());
    if (b1 || b2) {
        const Ball& b = b1 ? *b1 : *b2;
        const auto& t = std::get<ComplexTube>(b1 ? a2 : a1);
        return ball_tube_fast(Ball(t.center, b.radius), t);
    }
    const auto& t1 = std::get<ComplexTube>(a1);
    const auto& t2 = std::get<ComplexTube>(a2);
    double L = std::min(t1.half_length(), t2.half_length());
    int m = 2 * t1.dim() - 2;
    return kPi * L * L * unit_ball_volume(m) * std::pow(std::min(t1.radius, t2.radius), m);
}

namespace {

bool same_shape(const Solid& a1, const Solid& a2) {
    if (a1.index() != a2.index()) return false;
    if (auto b = std::get_if<Ball>(&a1)) return b->radius == std::get<Ball>(a2).radius;
    const auto& t1 = std::get<ComplexTube>(a1);
    const auto& t2 = std::get<ComplexTube>(a2);
    return t1.length == t2.length && t1.radius == t2.radius;
}

MCSolid as_mc(const Solid& a) {
    if (auto b = std::get_if<Ball>(&a)) return *b;
    return std::get<ComplexTube>(a);
}

}  // namespace

bool essentially_intersect(const Solid& a1, const Solid& a2, const EssentialOptions& opts) {
    if (opts.mode == VolumeMode::fast) return overlap_volume(a1, a2) >= 0.5 * max_overlap_volume(a1, a2);
    double best = same_shape(a1, a2) ? solid_volume(a1) : max_overlap_volume(a1, a2);
    VolumeEstimate est = intersection_volume_mc(as_mc(a1), as_mc(a2), opts.mc);
    return est.value >= 0.5 * best;
}

bool essentially_distinct(const Solid& a1, const Solid& a2, const EssentialOptions& opts) {
    return !essentially_intersect(a1, a2, opts);
}

std::vector<Solid> axis_translates(const Solid& a) {
    std::vector<Solid> out;
    const cplx i(0, 1);
    if (auto b = std::get_if<Ball>(&a)) {
        int n = b->dim();
        for (int k = 0; k < n; ++k)
            for (cplx e : {cplx(1, 0), i})
                for (double sgn : {1.0, -1.0}) {
                    Ball moved = *b;
                    moved.center(k) += sgn * 2 * b->radius * e;
                    out.emplace_back(moved);
                }
        return out;
    }
    const auto& t = std::get<ComplexTube>(a);
    Eigen::MatrixXcd perp = complement_basis(t.direction);
    for (Eigen::Index j = 0; j < perp.cols(); ++j)
        for (cplx e : {cplx(1, 0), i})
            for (double sgn : {1.0, -1.0}) {
                ComplexTube moved = t;
                moved.center += sgn * 2 * t.radius * e * perp.col(j);
                out.emplace_back(moved);
            }
    for (cplx e : {cplx(1, 0), i})
        for (double sgn : {1.0, -1.0}) {
            ComplexTube moved = t;
            moved.center += sgn * t.length * e * t.direction;
            out.emplace_back(moved);
        }
    return out;
}

bool essentially_contains(const Solid& a1, const Solid& a2, const EssentialOptions& opts) {
    if (!essentially_intersect(a1, a2, opts)) return false;
    for (const Solid& moved : axis_translates(a2))
        if (essentially_distinct(moved, a2, opts) && essentially_intersect(a1, moved, opts)) return true;
    return false;
}

Solid scale_shape(const Solid& a, double b) {
    require(b >= 0, "scale_shape: factor must be nonnegative");
    if (auto ball = std::get_if<Ball>(&a)) {
        Ball out = *ball;
        out.radius *= b;
        return out;
    }
    ComplexTube t = std::get<ComplexTube>(a);
    t.length *= b;
    t.radius *= b;
    return t;
}

Slab dual_slab(const ComplexTube& t) {
    int n = t.dim();
    const cplx i(0, 1);
    Slab s;
    s.center = RealVector::Zero(2 * n);
    s.axes.resize(2 * n, 2 * n);
    s.half_widths.resize(2 * n);
    s.axes.col(0) = embed<double>(t.direction);
    s.axes.col(1) = embed<double>(ComplexVector(i * t.direction));
    s.half_widths(0) = s.half_widths(1) = 1.0 / t.length;
    Eigen::MatrixXcd perp = complement_basis(t.direction);
    for (int j = 0; j < n - 1; ++j) {
        s.axes.col(2 + 2 * j) = embed<double>(ComplexVector(perp.col(j)));
        s.axes.col(3 + 2 * j) = embed<double>(ComplexVector(i * perp.col(j)));
        s.half_widths(2 + 2 * j) = s.half_widths(3 + 2 * j) = 1.0 / t.radius;
    }
    return s;
}

}  // namespace ctube
