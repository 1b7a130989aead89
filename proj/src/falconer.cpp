#include "ctube/falconer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "ctube/error.hpp"
#include "ctube/rng.hpp"

namespace ctube {

namespace {

using Cell = std::array<long, 4>;

struct CellHash {
    std::size_t operator()(const Cell& c) const {
        std::uint64_t h = 0;
        for (long v : c) h = splitmix64(h ^ static_cast<std::uint64_t>(v));
        return static_cast<std::size_t>(h);
    }
};

Cell cell_of(const ComplexVector& p, double pitch) {
    RealVector x = embed(p);
    Cell c{};
    for (int i = 0; i < 4; ++i) c[i] = static_cast<long>(std::floor(x(i) / pitch));
    return c;
}

ComplexVector point2(double a, double b, double c, double d) {
    ComplexVector p(2);
    p << cplx(a, b), cplx(c, d);
    return p;
}

// uniform in the real 4-ball of radius r around c
ComplexVector uniform_in_ball(const ComplexVector& c, double r, Rng& rng) {
    for (;;) {
        double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1), x = rng.uniform(-1, 1), y = rng.uniform(-1, 1);
        if (a * a + b * b + x * x + y * y <= 1) return c + r * point2(a, b, x, y);
    }
}

PointSet restrict_to(const PointSet& e, const ComplexVector& b) {
    PointSet out = e;
    out.balls.clear();
    for (const Ball& q : e.balls)
        if ((q.center - b).norm() <= kC1) out.balls.push_back(q);
    return out;
}

struct BucketKey {
    long re, im;
    bool operator==(const BucketKey&) const = default;
};
struct BucketHash {
    std::size_t operator()(const BucketKey& k) const {
        return static_cast<std::size_t>(splitmix64(static_cast<std::uint64_t>(k.re) * 0x9e3779b97f4a7c15ULL ^
                                                   static_cast<std::uint64_t>(k.im)));
    }
};

BucketKey bucket(cplx v, double delta) {
    return {static_cast<long>(std::floor(v.real() / delta)), static_cast<long>(std::floor(v.imag() / delta))};
}

std::vector<cplx> cross_values(const SplitSets& split) {
    std::vector<cplx> a;
    a.reserve(split.e1.balls.size() * split.e2.balls.size());
    for (const Ball& q1 : split.e1.balls)
        for (const Ball& q2 : split.e2.balls) a.push_back(complex_distance(q1.center, q2.center));
    return a;
}

}  // namespace

cplx complex_distance(const ComplexVector& p1, const ComplexVector& p2) {
    require(p1.size() == 2 && p2.size() == 2, "complex_distance: points must lie in C^2");
    cplx dx = p1(0) - p2(0), dy = p1(1) - p2(1);
    return dx * dx + dy * dy;
}

ComplexVector aux_direction(const ComplexVector& p1, const ComplexVector& p2) {
    ComplexVector v(3);
    v << (p1(1) - p2(1)) / 2.0, -(p1(0) - p2(0)) / 2.0, cplx(1, 0);
    return v;
}

ComplexLine aux_line(const ComplexVector& p1, const ComplexVector& p2) {
    require(p1.size() == 2 && p2.size() == 2, "aux_line: points must lie in C^2");
    ComplexVector point(3);
    point << (p1(0) + p2(0)) / 2.0, (p1(1) + p2(1)) / 2.0, cplx(0, 0);
    return ComplexLine(point, normalized(aux_direction(p1, p2)));
}

int max_cell_count(const PointSet& e) {
    const double pitch = std::pow(e.delta, e.s / 4);
    std::unordered_map<Cell, int, CellHash> cells;
    int best = 0;
    for (const Ball& q : e.balls) best = std::max(best, ++cells[cell_of(q.center, pitch)]);
    return best;
}

int max_ball_count(const PointSet& e, double radius) {
    int best = 0;
    for (const Ball& a : e.balls) {
        int c = 0;
        for (const Ball& b : e.balls) c += (a.center - b.center).norm() <= radius;
        best = std::max(best, c);
    }
    return best;
}

PointSet generate_point_set(double s, double delta, int big_n, std::uint64_t seed) {
    require(s > 1 && s < 2, "generate_point_set: s must lie in (1, 2)");
    require(delta >= std::ldexp(1.0, -10) && delta < 1, "generate_point_set: delta outside [2^-10, 1)");
    require(big_n >= 0, "generate_point_set: big_n must be non-negative");
    PointSet e;
    e.delta = delta;
    e.s = s;
    e.big_n = big_n;
    e.seed = seed;
    if (big_n == 0) return e;

    const double pitch = std::pow(delta, s / 4), inner = 1 - delta;
    const long k = static_cast<long>(std::ceil(1 / pitch));
    std::vector<Cell> cells;
    for (long a = -k; a < k; ++a)
        for (long b = -k; b < k; ++b)
            for (long c = -k; c < k; ++c)
                for (long d = -k; d < k; ++d) {
                    double m2 = 0;
                    for (long v : {a, b, c, d}) m2 += std::pow((v + 0.5) * pitch, 2);
                    if (m2 <= inner * inner) cells.push_back({a, b, c, d});
                }
    Rng rng(derive_seed(seed, 0x9017));
    for (std::size_t i = cells.size(); i > 1; --i) std::swap(cells[i - 1], cells[rng.below(i)]);

    const auto target = static_cast<std::size_t>(std::llround(big_n * std::pow(delta, -s)));
    for (const Cell& cell : cells) {
        std::vector<ComplexVector> here;
        for (int m = 0; m < big_n && e.balls.size() < target; ++m) {
            for (int attempt = 0; attempt < 200; ++attempt) {
                ComplexVector p = point2((cell[0] + rng.uniform()) * pitch, (cell[1] + rng.uniform()) * pitch,
                                         (cell[2] + rng.uniform()) * pitch, (cell[3] + rng.uniform()) * pitch);
                if (p.norm() > inner) continue;
                bool apart = std::all_of(here.begin(), here.end(),
                                         [&](const ComplexVector& o) { return (o - p).norm() >= 2 * delta; });
                if (!apart) continue;
                here.push_back(p);
                e.balls.emplace_back(p, delta);
                break;
            }
        }
        if (e.balls.size() >= target) break;
    }
    return e;
}

SplitSets split_point_set(const PointSet& e) {
    require(!e.balls.empty(), "split_point_set: empty point set");
    SplitSets best;
    std::size_t best_score = 0;
    const std::size_t m = e.balls.size();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            const ComplexVector& a = e.balls[i].center;
            const ComplexVector& b = e.balls[j].center;
            double d = (b - a).norm();
            if (std::abs(d - kC2) > kC1) continue;
            ComplexVector mid = (a + b) / 2.0, u = (b - a) / d;
            ComplexVector b1 = mid - (kC2 / 2) * u, b2 = mid + (kC2 / 2) * u;
            if (b1.norm() > 1 - kC1 || b2.norm() > 1 - kC1) continue;
            PointSet e1 = restrict_to(e, b1), e2 = restrict_to(e, b2);
            std::size_t score = e1.balls.size() * e2.balls.size();
            if (score > best_score) {
                best_score = score;
                best.e1 = std::move(e1);
                best.e2 = std::move(e2);
                best.b1_center = b1;
                best.b2_center = b2;
            }
        }
    if (best_score == 0) throw InfeasibleError("split_point_set: no pair of centres at distance C2 within C1");
    best.c_split = static_cast<double>(m) / std::min(best.e1.balls.size(), best.e2.balls.size());
    return best;
}

TubeFamily build_tubes(const SplitSets& split, double delta) {
    TubeFamily f;
    f.n = 3;
    f.delta = delta;
    f.big_w = std::pow(delta, -split.e1.s / 4);
    f.spacing_kind = SpacingKind::at_most_h0;
    f.spacing_param = split.e1.big_n * split.e1.big_n;
    f.seed = split.e1.seed;
    auto emit = [&](const PointSet& from, const PointSet& to) {
        for (const Ball& q1 : from.balls)
            for (const Ball& q2 : to.balls) {
                ComplexLine line = aux_line(q1.center, q2.center);
                const ComplexVector& u = line.direction;
                ComplexVector foot = line.point - u.dot(line.point) * u;
                double d = foot.norm();
                require(d < 1, "build_tubes: auxiliary line misses the unit ball");
                f.tubes.emplace_back(foot, u, 2 * std::sqrt(1 - d * d), delta);
            }
    };
    emit(split.e1, split.e2);
    emit(split.e2, split.e1);
    return f;
}

QuadrupleCount count_quadruples(const SplitSets& split, double delta, QuadMethod method) {
    QuadrupleCount out;
    out.delta = delta;
    const std::size_t n1 = split.e1.balls.size(), n2 = split.e2.balls.size();
    if (method == QuadMethod::brute) {
        out.method = "brute";
        if (n1 * n2 > 1000000) throw BudgetError("count_quadruples: brute method exceeds the 10^6 pair budget");
        const auto& e1 = split.e1.balls;
        const auto& e2 = split.e2.balls;
        for (const Ball& q1 : e1)
            for (const Ball& q2 : e2) {
                cplx a = complex_distance(q1.center, q2.center);
                for (const Ball& q3 : e2)
                    for (const Ball& q4 : e1)
                        out.q_count += std::abs(a - complex_distance(q3.center, q4.center)) < delta;
            }
        return out;
    }
    out.method = "hashed";
    std::vector<cplx> values = cross_values(split);
    std::unordered_map<BucketKey, std::vector<cplx>, BucketHash> buckets;
    for (cplx v : values) buckets[bucket(v, delta)].push_back(v);
    for (cplx v : values) {
        BucketKey k = bucket(v, delta);
        for (long dr = -1; dr <= 1; ++dr)
            for (long di = -1; di <= 1; ++di) {
                auto it = buckets.find({k.re + dr, k.im + di});
                if (it == buckets.end()) continue;
                for (cplx w : it->second) out.q_count += std::abs(v - w) < delta;
            }
    }
    return out;
}

std::uint64_t covering_number(const std::vector<cplx>& values, double delta) {
    require(delta > 0, "covering_number: delta must be positive");
    std::vector<std::pair<long, long>> keys;
    keys.reserve(values.size());
    for (cplx v : values) {
        BucketKey k = bucket(v, delta);
        keys.emplace_back(k.re, k.im);
    }
    std::sort(keys.begin(), keys.end());
    return static_cast<std::uint64_t>(std::unique(keys.begin(), keys.end()) - keys.begin());
}

double cs_lower_bound(std::uint64_t n1, std::uint64_t n2, std::uint64_t q_count) {
    require(q_count >= 1, "cs_lower_bound: q_count must be at least 1");
    double p = static_cast<double>(n1) * static_cast<double>(n2);
    return p * p / static_cast<double>(q_count);
}

ComplexVector g_param(const ComplexVector& pa, const ComplexVector& pb, double alpha, double beta) {
    ComplexVector base(3);
    base << (pa(0) + pb(0)) / 2.0, (pa(1) + pb(1)) / 2.0, cplx(0, 0);
    return base + cplx(alpha, beta) * aux_direction(pa, pb);
}

OneTubeReport verify_one_tube_claim(const ComplexVector& p1, const ComplexVector& p2, const ComplexVector& p3,
                                    const ComplexVector& p4, double s, double delta) {
    const double sep = std::pow(delta, s / 4);
    const std::array<const ComplexVector*, 4> p{&p1, &p2, &p3, &p4};
    for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b)
            if ((*p[a] - *p[b]).norm() < sep)
                throw PreconditionError("verify_one_tube_claim: p" + std::to_string(a + 1) + ", p" +
                                        std::to_string(b + 1) + " closer than delta^(s/4)");
    OneTubeReport r;
    r.required = sep / 32;
    r.sum_gap = ((p1 + p3) - (p2 + p4)).norm();
    r.diff_gap = ((p1 - p3) - (p2 - p4)).norm();
    double lhs = 2 * (p1 - p2).squaredNorm() + 2 * (p3 - p4).squaredNorm();
    double mid = ((p1 - p2) + (p3 - p4)).squaredNorm() + ((p1 - p2) - (p3 - p4)).squaredNorm();
    r.parallelogram_residual = std::max(std::abs(lhs - mid), std::abs(lhs - r.sum_gap * r.sum_gap - r.diff_gap * r.diff_gap));

    auto gap = [&](double a, double b) { return (g_param(p1, p3, a, b) - g_param(p2, p4, a, b)).norm(); };
    if (r.diff_gap <= 16 * r.sum_gap) {
        r.case_id = 1;
        r.separation = gap(0, 0);
    } else {
        r.case_id = 2;
        r.separation = -1;
        for (double radius : {0.125, 0.25})
            for (int k = 0; k < 720; ++k) {
                double t = 2 * kPi * k / 720, a = radius * std::cos(t), b = radius * std::sin(t);
                double g = gap(a, b);
                if (g > r.separation) r.separation = g, r.alpha = a, r.beta = b;
            }
    }
    r.holds = r.separation >= r.required;
    return r;
}

double aux_m0() {
    return 0.5 * (std::hypot(kC2 / 2 + kC1, 1.0) + std::hypot(kC2 / 2 - kC1, 1.0));
}

double aux_eps0() {
    return 0.5 * (std::hypot(kC2 / 2 + kC1, 1.0) - std::hypot(kC2 / 2 - kC1, 1.0));
}

IntersectionReport verify_intersection_prop(const ComplexVector& p1, const ComplexVector& p2,
                                            const ComplexVector& p3, const ComplexVector& p4, double delta) {
    require(std::abs(complex_distance(p1, p2) - complex_distance(p3, p4)) < delta,
            "verify_intersection_prop: |Δ(p1,p2) - Δ(p3,p4)| must be below delta");
    IntersectionReport r;
    const ComplexVector v = aux_direction(p1, p3), w = aux_direction(p2, p4);
    const double nv = v.norm(), nw = w.norm();
    r.max_cos = -1;
    for (int k = 0; k < 720; ++k) {
        cplx z = std::polar(1.0, 2 * kPi * k / 720);
        r.max_cos = std::max(r.max_cos, (v.dot(z * w)).real() / (nv * nw));
    }
    r.angle_ok = r.max_cos <= 1 - 1.0 / 8000;

    const cplx dx = p1(0) - p3(0) - p2(0) + p4(0), dy = p1(1) - p3(1) - p2(1) + p4(1);
    if (std::abs(dx) < delta && std::abs(dy) < delta)
        throw InfeasibleError("verify_intersection_prop: both branch denominators are below delta");
    r.x_branch = std::abs(dx) >= std::abs(dy);
    r.s_param = r.x_branch ? (p1(1) + p3(1) - p2(1) - p4(1)) / dx : -(p1(0) + p3(0) - p2(0) - p4(0)) / dy;
    ComplexVector base13(3), base24(3);
    base13 << (p1(0) + p3(0)) / 2.0, (p1(1) + p3(1)) / 2.0, cplx(0, 0);
    base24 << (p2(0) + p4(0)) / 2.0, (p2(1) + p4(1)) / 2.0, cplx(0, 0);
    const ComplexVector on13 = base13 + r.s_param * v, on24 = base24 + r.s_param * w;
    r.a_norm = (on13 - on24).norm();
    r.a_limit = delta / (kC2 - 2 * kC1);
    r.distance_ok = r.a_norm < r.a_limit && std::abs(r.s_param) < 0.5;
    r.witness = (on13 + on24) / 2.0;
    r.witness_norm = r.witness.norm();
    r.inside_ok = r.witness_norm + delta / 2 <= 0.75;
    r.holds = r.angle_ok && r.distance_ok && r.inside_ok;
    return r;
}

std::vector<QQuadruple> generate_q_quadruples(double delta, std::size_t count, std::uint64_t seed) {
    require(delta > 0 && delta < 1, "generate_q_quadruples: delta must lie in (0, 1)");
    Rng rng(derive_seed(seed, 0x4a4d));
    std::vector<QQuadruple> out;
    out.reserve(count);
    ComplexVector zero = ComplexVector::Zero(2);
    while (out.size() < count) {
        ComplexVector c = uniform_in_ball(zero, 0.25, rng);
        RealVector dir(4);
        for (int i = 0; i < 4; ++i) dir(i) = rng.normal();
        ComplexVector e = unembed(RealVector(dir / dir.norm()));
        QQuadruple q;
        q.b1 = c + (kC2 / 2) * e;
        q.b2 = c - (kC2 / 2) * e;
        q.p[0] = uniform_in_ball(q.b1, kC1, rng);
        q.p[1] = uniform_in_ball(q.b2, kC1, rng);
        q.p[3] = uniform_in_ball(q.b1, kC1, rng);
        const cplx target = complex_distance(q.p[0], q.p[1]);
        ComplexVector p3 = uniform_in_ball(q.b2, kC1, rng);
        // Newton on the holomorphic map p3 -> Δ(p3, p4), minimal-norm steps
        for (int it = 0; it < 30; ++it) {
            cplx miss = target - complex_distance(p3, q.p[3]);
            if (std::abs(miss) < 1e-3 * delta) break;
            ComplexVector g = 2.0 * (p3 - q.p[3]);
            p3 += miss * g.conjugate() / g.squaredNorm();
        }
        if ((p3 - q.b2).norm() > kC1 || std::abs(target - complex_distance(p3, q.p[3])) >= delta / 2) continue;
        q.p[2] = p3;
        out.push_back(std::move(q));
    }
    return out;
}

FalconerReport run_falconer(double s, double delta, int big_n, double epsilon, std::uint64_t seed) {
    FalconerReport r;
    r.s = s;
    r.delta = delta;
    r.epsilon = epsilon;
    r.big_n = big_n;
    r.seed = seed;
    PointSet e = generate_point_set(s, delta, big_n, seed);
    r.points = e.balls.size();
    if (e.balls.empty()) return r;

    SplitSets split = split_point_set(e);
    r.e1 = split.e1.balls.size();
    r.e2 = split.e2.balls.size();
    r.c_split = split.c_split;
    TubeFamily family = build_tubes(split, delta);
    r.tubes = family.tubes.size();
    r.spacing = check_spacing(family, family.big_w);
    BallGrid grid(3, delta);
    r.profile = richness_profile(grid, family);
    for (const auto& [rr, c] : r.profile.entries) r.incidence_sum += static_cast<double>(rr) * rr * c;

    r.q_count = count_quadruples(split, delta, QuadMethod::hashed).q_count;
    r.covering_e12 = covering_number(cross_values(split), delta);
    std::vector<cplx> all;
    all.reserve(e.balls.size() * (e.balls.size() + 1) / 2);
    for (std::size_t i = 0; i < e.balls.size(); ++i)
        for (std::size_t j = i; j < e.balls.size(); ++j) all.push_back(complex_distance(e.balls[i].center, e.balls[j].center));
    r.covering_all = covering_number(all, delta);
    r.cs_lower_bound = cs_lower_bound(r.e1, r.e2, r.q_count);
    r.target = std::pow(delta, -s + epsilon);
    r.q_le_incidences = static_cast<double>(r.q_count) <= r.incidence_sum;
    r.covering_ge_cs = 9.0 * static_cast<double>(r.covering_e12) >= r.cs_lower_bound;
    r.pass = r.q_le_incidences && r.covering_ge_cs && r.spacing.max <= big_n * big_n;
    return r;
}

void write_point_set(std::ostream& os, const PointSet& e) {
    os << "pointset 2 " << std::setprecision(17) << e.delta << ' ' << e.s << ' ' << e.big_n << ' ' << e.seed << '\n';
    for (const Ball& q : e.balls) {
        for (int k = 0; k < 2; ++k) os << q.center(k).real() << ' ' << q.center(k).imag() << ' ';
        os << q.radius << '\n';
    }
}

PointSet read_point_set(std::istream& is) {
    PointSet e;
    std::string tag;
    int n = 0;
    if (!(is >> tag) || tag != "pointset") throw PreconditionError("read_point_set: missing pointset header");
    if (!(is >> n >> e.delta >> e.s >> e.big_n >> e.seed) || n != 2)
        throw PreconditionError("read_point_set: malformed header");
    std::string line;
    std::getline(is, line);
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        double v[5];
        for (double& x : v)
            if (!(ls >> x)) throw PreconditionError("read_point_set: short record on line " + std::to_string(lineno));
        e.balls.emplace_back(point2(v[0], v[1], v[2], v[3]), v[4]);
    }
    return e;
}

}  // namespace ctube
