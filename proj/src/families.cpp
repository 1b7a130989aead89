#include "ctube/families.hpp"

#include <algorithm>
#include <memory>
#include <mutex>
#include <tuple>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace ctube {

double fs_distance(const ComplexVector& u, const ComplexVector& v) { return std::acos(overlap<double>(u, v)); }

std::size_t CapPartition::KeyHash::operator()(const Key& k) const {
    std::uint64_t h = 0;
    for (int x : k) h = splitmix64(h ^ static_cast<std::uint32_t>(x));
    return static_cast<std::size_t>(h);
}

std::array<double, 5> CapPartition::coords_of(const ComplexVector& u, int chart) const {
    std::array<double, 5> f{};
    f[0] = std::norm(u(chart));
    int slot = 1;
    for (int j = 0; j < n_; ++j) {
        if (j == chart) continue;
        cplx p = std::sqrt(2.0) * u(chart) * std::conj(u(j));
        f[slot++] = p.real();
        f[slot++] = p.imag();
    }
    return f;
}

CapPartition::Key CapPartition::key_of(const ComplexVector& u, int chart) const {
    std::array<double, 5> f = coords_of(u, chart);
    Key k{};
    for (int j = 0; j < 2 * n_ - 1; ++j) k[j] = static_cast<int>(std::floor(f[j] / cell_));
    return k;
}

void CapPartition::near(const ComplexVector& u, double radius,
                        std::vector<std::pair<std::size_t, double>>& out) const {
    out.clear();
    double chord = std::sqrt(2.0) * std::sin(std::min(radius, kPi / 2));
    double cos_sq = std::cos(radius) * std::cos(radius);
    int chart;
    u.cwiseAbs2().maxCoeff(&chart);
    int dims = 2 * n_ - 1;
    std::array<double, 5> f = coords_of(u, chart);
    Key lo{}, q{};
    std::array<int, 5> span{};
    int cells = 1;
    for (int j = 0; j < dims; ++j) {
        lo[j] = static_cast<int>(std::floor((f[j] - chord) / cell_));
        span[j] = static_cast<int>(std::floor((f[j] + chord) / cell_)) - lo[j] + 1;
        cells *= span[j];
    }
    const auto& grid = grids_[chart];
    cplx uu[3] = {u(0), u(1), n_ == 3 ? u(2) : cplx(0)};
    for (int c = 0; c < cells; ++c) {
        for (int j = 0, rest = c; j < dims; ++j) {
            q[j] = lo[j] + rest % span[j];
            rest /= span[j];
        }
        auto it = grid.find(q);
        if (it == grid.end()) continue;
        for (std::size_t idx : it->second) {
            const cplx* x = &flat_[3 * idx];
            double ov = std::norm(std::conj(x[0]) * uu[0] + std::conj(x[1]) * uu[1] + std::conj(x[2]) * uu[2]);
            if (ov > cos_sq) out.emplace_back(idx, ov);
        }
    }
}

void CapPartition::insert(const ComplexVector& u) {
    // a centre is filed under every chart that a query within 2.5 cap radii could pick
    double margin = 1.01 * std::sqrt(2.0) * std::sin(std::min(2.5 * scale_, kPi / 2));
    for (int j = 0; j < n_; ++j)
        if (std::norm(u(j)) >= 1.0 / n_ - margin) grids_[j][key_of(u, j)].push_back(centers_.size());
    centers_.push_back(u);
    for (int k = 0; k < 3; ++k) flat_.push_back(k < n_ ? u(k) : cplx(0));
}

CapPartition::CapPartition(int n, double scale, std::uint64_t seed) : n_(n), scale_(scale), seed_(seed) {
    require(n == 2 || n == 3, "cap_partition: n must be 2 or 3");
    require(scale > 0 && scale < kPi / 2 + 1e-12, "cap_partition: scale outside (0, pi/2]");
    cell_ = 3 * std::sqrt(2.0) * std::sin(std::min(scale, kPi / 2));
    grids_.resize(n);
    Rng rng(seed);
    std::vector<std::pair<std::size_t, double>> hits;
    auto try_add = [&](const ComplexVector& u) {
        near(u, scale, hits);
        if (!hits.empty()) return false;
        insert(u);
        return true;
    };
    // dart throwing around active centres, then uniform darts to close leftover holes
    try_add(random_unit(n, rng));
    std::vector<std::size_t> active{0};
    while (!active.empty()) {
        std::size_t pick = rng.below(active.size());
        ComplexVector x = centers_[active[pick]];
        Eigen::MatrixXcd perp = complement_basis(x);
        bool grew = false;
        for (int t = 0; t < (n == 2 ? 40 : 120) && !grew; ++t) {
            double r = std::min(scale * (1 + rng.uniform()), kPi / 2);
            ComplexVector w = ComplexVector::Zero(n);
            for (int j = 0; j < n - 1; ++j) w += cplx(rng.normal(), rng.normal()) * perp.col(j);
            w.normalize();
            if (try_add(std::cos(r) * x + std::sin(r) * w)) {
                active.push_back(centers_.size() - 1);
                grew = true;
            }
        }
        if (!grew) {
            active[pick] = active.back();
            active.pop_back();
        }
    }
    std::size_t darts = std::max<std::size_t>(20000, 30 * centers_.size());
    for (std::size_t t = 0; t < darts; ++t) try_add(random_unit(n, rng));
    if (n == 2)
        close_holes_cp1();
    else
        close_holes_by_ascent(rng);
}

namespace {

Eigen::Vector3d bloch(const ComplexVector& u) {
    cplx ab = u(0) * std::conj(u(1));
    return {std::norm(u(0)) - std::norm(u(1)), 2 * ab.real(), 2 * ab.imag()};
}

ComplexVector from_bloch(const Eigen::Vector3d& v) {
    double theta = std::acos(std::clamp(v(0), -1.0, 1.0));
    double phi = std::atan2(v(2), v(1));
    ComplexVector u(2);
    u << std::cos(theta / 2), std::sin(theta / 2) * std::polar(1.0, -phi);
    return u;
}

}  // namespace

// Climb away from the nearest centres; any local maximum of the distance to the centre set that lies
// beyond scale is a hole and becomes a centre.
void CapPartition::close_holes_by_ascent(Rng& rng) {
    std::vector<std::pair<std::size_t, double>> hits;
    auto nearest = [&](const ComplexVector& u) {
        near(u, std::min(1.2 * scale_, kPi / 2 - 1e-9), hits);
        double best = std::pow(std::cos(std::min(1.2 * scale_, kPi / 2)), 2);
        for (const auto& h : hits) best = std::max(best, h.second);
        return std::acos(std::sqrt(std::min(best, 1.0)));
    };
    std::size_t darts = 40 * centers_.size();
    for (std::size_t t = 0; t < darts; ++t) {
        ComplexVector u = random_unit(n_, rng);
        double d = nearest(u);
        if (d < 0.8 * scale_) continue;
        double step = 0.25 * scale_;
        for (int it = 0; it < 80 && d <= scale_ && step > 1e-4 * scale_; ++it) {
            ComplexVector g = ComplexVector::Zero(n_);
            for (const auto& h : hits) {
                double dist = std::acos(std::sqrt(std::min(h.second, 1.0)));
                if (dist > d + 0.05 * scale_) continue;
                const ComplexVector& x = centers_[h.first];
                cplx ov = x.dot(u);
                ComplexVector away = -(x * (ov / std::max(std::abs(ov), 1e-300)) - std::abs(ov) * u);
                double len = away.norm();
                if (len > 1e-12) g += away / len;
            }
            if (g.norm() < 1e-12) break;
            ComplexVector v = normalized(ComplexVector(u + step * g.normalized()));
            double dv = nearest(v);
            if (dv > d) {
                u = v;
                d = dv;
            } else {
                step *= 0.5;
            }
        }
        if (d > scale_) {
            near(u, scale_, hits);
            if (hits.empty()) insert(u);
        }
    }
}

// On CP^1 the covering radius is attained at circumcentres of centre triples (Voronoi vertices on the
// Bloch sphere, where Fubini-Study distance is half the angle). Any circumcentre farther than scale from
// every centre becomes a new centre.
void CapPartition::close_holes_cp1() {
    double reach = std::min(2.5 * scale_, kPi / 2 - 1e-9);
    std::vector<std::pair<std::size_t, double>> nb, hits;
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t i = 0; i < centers_.size(); ++i) {
            near(centers_[i], reach, nb);
            Eigen::Vector3d bi = bloch(centers_[i]);
            for (std::size_t a = 0; a < nb.size(); ++a)
                for (std::size_t b = a + 1; b < nb.size(); ++b) {
                    std::size_t j = nb[a].first, k = nb[b].first;
                    if (j <= i || k <= i) continue;
                    Eigen::Vector3d c = (bloch(centers_[j]) - bi).cross(bloch(centers_[k]) - bi);
                    if (c.norm() < 1e-14) continue;
                    c.normalize();
                    for (double sign : {1.0, -1.0}) {
                        ComplexVector u = from_bloch(sign * c);
                        near(u, scale_, hits);
                        if (hits.empty()) {
                            insert(u);
                            changed = true;
                        }
                    }
                }
        }
    }
}

std::size_t CapPartition::cell_of(const ComplexVector& u) const {
    std::vector<std::pair<std::size_t, double>> hits;
    near(u, scale_ * 1.0000001, hits);
    if (hits.empty()) {
        for (std::size_t k = 0; k < centers_.size(); ++k) hits.emplace_back(k, std::norm(centers_[k].dot(u)));
    }
    auto best = std::min_element(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
        return a.second > b.second || (a.second == b.second && a.first < b.first);
    });
    return best->first;
}

CapPartition cap_partition(int n, double scale, std::uint64_t seed) {
    static std::mutex mu;
    static std::map<std::tuple<int, double, std::uint64_t>, std::shared_ptr<const CapPartition>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{n, scale, seed}];
    if (!slot) slot = std::make_shared<const CapPartition>(n, scale, seed);
    return *slot;
}

std::string to_string(SpacingKind k) {
    switch (k) {
        case SpacingKind::uniform_n: return "uniform-N";
        case SpacingKind::exact_h0: return "exact-H0";
        case SpacingKind::at_most_h0: return "at-most-H0";
        default: return "unconstrained";
    }
}

SpacingKind spacing_kind_from_string(const std::string& s) {
    if (s == "uniform-N") return SpacingKind::uniform_n;
    if (s == "exact-H0") return SpacingKind::exact_h0;
    if (s == "at-most-H0") return SpacingKind::at_most_h0;
    if (s == "unconstrained") return SpacingKind::unconstrained;
    throw PreconditionError("unknown spacing kind: " + s);
}

namespace {

constexpr double kInner = 0.86602540378443864676;  // sqrt(3)/2

void lattice_rec(int dims, int bound, double limit2, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (static_cast<int>(cur.size()) == dims) {
        double s = 0;
        for (int x : cur) s += double(x) * x;
        if (s <= limit2 + 1e-9) out.push_back(cur);
        return;
    }
    for (int x = -bound; x <= bound; ++x) {
        cur.push_back(x);
        lattice_rec(dims, bound, limit2, cur, out);
        cur.pop_back();
    }
}

ComplexVector offset_vector(const Eigen::MatrixXcd& perp, const std::vector<double>& coords) {
    ComplexVector v = ComplexVector::Zero(perp.rows());
    for (Eigen::Index j = 0; j < perp.cols(); ++j) v += cplx(coords[2 * j], coords[2 * j + 1]) * perp.col(j);
    return v;
}

}  // namespace

std::vector<std::vector<int>> cover_lattice(int n, double big_w) {
    double reach = std::max(0.0, kInner - 1.0 / big_w) * big_w;
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    lattice_rec(2 * (n - 1), static_cast<int>(std::floor(reach)), reach * reach, cur, out);
    return out;
}

int slots_per_axis(double delta, double big_w) {
    double ratio = 1.0 / (big_w * delta);
    int half = static_cast<int>(std::floor((ratio - 1) / 2 + 1e-9));
    return 2 * std::max(half, 0) + 1;
}

std::size_t tube_capacity(int n, double delta, double big_w) {
    std::size_t m = slots_per_axis(delta, big_w), cap = 1;
    for (int k = 0; k < 2 * (n - 1); ++k) cap *= m;
    return cap;
}

ComplexTube cover_tube(const ComplexVector& center_dir, const Eigen::MatrixXcd& perp, const std::vector<int>& k,
                       double big_w) {
    std::vector<double> coords(k.begin(), k.end());
    for (double& c : coords) c /= big_w;
    return ComplexTube(offset_vector(perp, coords), center_dir, 1.0, 1.0 / big_w);
}

namespace {

TubeFamily lay_down(int n, double delta, double big_w, double cap_scale, int per_cover, bool at_most,
                    std::uint64_t seed) {
    require(n == 2 || n == 3, "family generators: n must be 2 or 3");
    require(delta > 0 && delta < 0.1, "family generators: delta must lie in (0, 0.1)");
    require(big_w >= 1 && big_w <= 1 / delta + 1e-9, "family generators: need 1 <= W <= 1/delta");
    require(per_cover >= 1, "family generators: per-cover count must be at least 1");
    std::size_t capacity = tube_capacity(n, delta, big_w);
    if (static_cast<std::size_t>(per_cover) > capacity)
        throw InfeasibleError("requested " + std::to_string(per_cover) + " tubes per cover tube but capacity is " +
                              std::to_string(capacity));

    CapPartition caps = cap_partition(n, cap_scale, seed);
    auto lattice = cover_lattice(n, big_w);
    const int dims = 2 * (n - 1);
    const int m = slots_per_axis(delta, big_w);

    // slots of the δ sub-lattice, nearest to the cell centre first
    std::vector<std::vector<double>> slots;
    for (std::size_t idx = 0; idx < capacity; ++idx) {
        std::vector<double> s(dims);
        std::size_t rest = idx;
        for (int d = 0; d < dims; ++d) {
            s[d] = (int(rest % m) - (m - 1) / 2) * delta;
            rest /= m;
        }
        slots.push_back(s);
    }
    auto norm2 = [](const std::vector<double>& s) {
        double t = 0;
        for (double x : s) t += x * x;
        return t;
    };
    std::stable_sort(slots.begin(), slots.end(), [&](const auto& a, const auto& b) { return norm2(a) < norm2(b); });

    const double jitter = static_cast<std::size_t>(per_cover) < capacity ? 0.05 * delta : 0.0;
    TubeFamily fam;
    fam.n = n;
    fam.delta = delta;
    fam.big_w = big_w;
    fam.seed = seed;
    Rng rng(derive_seed(seed, 1));
    std::vector<std::size_t> order(capacity);
    for (std::size_t c = 0; c < caps.size(); ++c) {
        const ComplexVector& u = caps.centers()[c];
        Eigen::MatrixXcd perp = complement_basis(u);
        for (const auto& k : lattice) {
            int count = at_most ? static_cast<int>(rng.below(per_cover + 1)) : per_cover;
            // shuffle slots within equal-distance shells so the choice is seeded but still central
            std::iota(order.begin(), order.end(), 0);
            for (std::size_t a = 0; a < capacity;) {
                std::size_t b = a;
                while (b < capacity && std::abs(norm2(slots[b]) - norm2(slots[a])) < 1e-12 * delta * delta) ++b;
                for (std::size_t i = b - 1; i > a; --i) std::swap(order[i], order[a + rng.below(i - a + 1)]);
                a = b;
            }
            for (int j = 0; j < count; ++j) {
                std::vector<double> coords(dims);
                for (int d = 0; d < dims; ++d)
                    coords[d] = k[d] / big_w + slots[order[j]][d] + (jitter > 0 ? rng.uniform(-jitter, jitter) : 0.0);
                fam.tubes.push_back(ComplexTube::checked(offset_vector(perp, coords), u, 1.0, delta));
                fam.cap_index.push_back(c);
            }
        }
    }
    return fam;
}

}  // namespace

TubeFamily generate_spaced_family(int n, double delta, double big_w, int big_n, std::uint64_t seed) {
    require(big_n >= 1 && big_n <= 1 / (big_w * delta) + 1e-9, "generate_spaced_family: need 1 <= N <= 1/(W delta)");
    TubeFamily fam = lay_down(n, delta, big_w, delta, big_n, false, seed);
    fam.spacing_kind = SpacingKind::uniform_n;
    fam.spacing_param = big_n;
    return fam;
}

TubeFamily generate_h0_family(int n, double delta, double big_w, int h0, std::uint64_t seed, bool at_most) {
    TubeFamily fam = lay_down(n, delta, big_w, 1.0 / big_w, h0, at_most, seed);
    fam.spacing_kind = at_most ? SpacingKind::at_most_h0 : SpacingKind::exact_h0;
    fam.spacing_param = h0;
    return fam;
}


SpacingReport check_spacing(const TubeFamily& family, double big_w) {
    require(big_w >= 1 && big_w <= 1 / family.delta + 1e-9, "check_spacing: need 1 <= W <= 1/delta");
    const int n = family.n;
    const bool per_delta_cap = family.spacing_kind == SpacingKind::uniform_n;
    CapPartition caps = cap_partition(n, per_delta_cap ? family.delta : 1.0 / big_w, family.seed);
    auto lattice = cover_lattice(n, big_w);
    const int dims = 2 * (n - 1);

    std::map<std::vector<int>, std::size_t> lattice_index;
    for (std::size_t i = 0; i < lattice.size(); ++i) lattice_index[lattice[i]] = i;
    std::vector<Eigen::MatrixXcd> perp(caps.size());
    std::vector<bool> have_perp(caps.size(), false);

    std::vector<int> counts(caps.size() * lattice.size(), 0);
    std::map<std::pair<std::size_t, std::vector<int>>, int> extra;
    SpacingReport rep;
    for (const ComplexTube& t : family.tubes) {
        std::size_t c = caps.cell_of(t.direction);
        const ComplexVector& u = caps.centers()[c];
        if (!have_perp[c]) {
            perp[c] = complement_basis(u);
            have_perp[c] = true;
        }
        ComplexVector off = t.center - u.dot(t.center) * u;
        std::vector<int> k(dims);
        for (int j = 0; j < n - 1; ++j) {
            cplx coord = ComplexVector(perp[c].col(j)).dot(off);
            k[2 * j] = static_cast<int>(std::lround(coord.real() * big_w));
            k[2 * j + 1] = static_cast<int>(std::lround(coord.imag() * big_w));
        }
        ComplexTube cover = cover_tube(u, perp[c], k, big_w);
        if (!essentially_contains(cover, t)) {
            ++rep.uncovered;
            continue;
        }
        ++rep.memberships;
        auto it = lattice_index.find(k);
        if (it != lattice_index.end())
            ++counts[c * lattice.size() + it->second];
        else
            ++extra[{c, k}];
    }

    auto record = [&](int v) {
        ++rep.histogram[v];
        ++rep.cover_tubes;
    };
    for (int v : counts) record(v);
    for (const auto& [key, v] : extra) record(v);
    if (rep.cover_tubes) {
        rep.min = rep.histogram.begin()->first;
        rep.max = rep.histogram.rbegin()->first;
        rep.mean = double(rep.memberships) / double(rep.cover_tubes);
    }
    const int p = family.spacing_param;
    switch (family.spacing_kind) {
        case SpacingKind::uniform_n: {
            bool ok = rep.uncovered == 0;
            for (const auto& [v, cnt] : rep.histogram) ok = ok && v >= p && v < 2 * p;
            rep.verdict = ok;
            break;
        }
        case SpacingKind::exact_h0: rep.verdict = rep.uncovered == 0 && rep.min == p && rep.max == p; break;
        case SpacingKind::at_most_h0: rep.verdict = rep.uncovered == 0 && rep.max <= p; break;
        default: rep.verdict = true;
    }
    return rep;
}

DualSlabResult dual_slab_count_check(int n, double delta, double sigma, int probes, std::uint64_t seed) {
    require(delta > 0 && sigma > delta && sigma <= 1, "dual_slab_count_check: need 0 < delta < sigma <= 1");
    require(probes >= 1, "dual_slab_count_check: probes must be positive");
    CapPartition caps = cap_partition(n, delta, seed);
    std::vector<Slab> slabs;
    slabs.reserve(caps.size());
    for (const ComplexVector& u : caps.centers())
        slabs.push_back(dual_slab(ComplexTube(ComplexVector::Zero(n), u, 1 / delta, 1)));
    Rng rng(derive_seed(seed, 2));
    double total = 0;
    for (int p = 0; p < probes; ++p) {
        RealVector w = sigma * embed<double>(random_unit(n, rng));
        for (const Slab& s : slabs) total += s.contains(w);
    }
    DualSlabResult res;
    res.observed_mean = total / probes;
    res.predicted = std::pow(sigma, -2) * std::pow(delta, -2.0 * (n - 2));
    res.directions = caps.size();
    return res;
}

void write_family(std::ostream& os, const TubeFamily& f) {
    os << "tubefamily " << f.n << ' ' << std::setprecision(17) << f.delta << ' ' << f.big_w << ' '
       << to_string(f.spacing_kind) << ' ' << f.spacing_param << ' ' << f.seed << '\n';
    for (const ComplexTube& t : f.tubes) {
        for (int k = 0; k < f.n; ++k) os << t.center(k).real() << ' ' << t.center(k).imag() << ' ';
        for (int k = 0; k < f.n; ++k) os << t.direction(k).real() << ' ' << t.direction(k).imag() << ' ';
        os << t.length << ' ' << t.radius << '\n';
    }
}

TubeFamily read_family(std::istream& is) {
    TubeFamily f;
    std::string tag, kind;
    if (!(is >> tag) || tag != "tubefamily") throw PreconditionError("read_family: missing tubefamily header");
    if (!(is >> f.n >> f.delta >> f.big_w >> kind >> f.spacing_param >> f.seed))
        throw PreconditionError("read_family: malformed header");
    require(f.n == 2 || f.n == 3, "read_family: n must be 2 or 3");
    f.spacing_kind = spacing_kind_from_string(kind);
    std::string line;
    std::getline(is, line);
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<double> v(4 * f.n + 2);
        for (double& x : v)
            if (!(ls >> x)) throw PreconditionError("read_family: short record on line " + std::to_string(lineno));
        ComplexVector c(f.n), u(f.n);
        for (int k = 0; k < f.n; ++k) {
            c(k) = {v[2 * k], v[2 * k + 1]};
            u(k) = {v[2 * f.n + 2 * k], v[2 * f.n + 2 * k + 1]};
        }
        f.tubes.emplace_back(c, u, v[4 * f.n], v[4 * f.n + 1]);
    }
    return f;
}

}  // namespace ctube
