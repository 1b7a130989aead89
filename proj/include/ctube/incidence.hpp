#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "ctube/families.hpp"

namespace ctube {

// lattice index in real coordinates (2n entries used)
using LatticeIndex = std::array<int, 6>;

struct LatticeIndexHash {
    std::size_t operator()(const LatticeIndex& k) const;
};

// δ-balls centred on the pitch 2δ/√(2n) lattice inside B(0, R)
class BallGrid {
public:
    BallGrid(int n, double delta, double domain_radius = 1.0);

    int n() const { return n_; }
    double delta() const { return delta_; }
    double pitch() const { return pitch_; }
    double domain_radius() const { return radius_; }
    int extent() const { return extent_; }
    // squared radius of the domain in lattice units
    double limit() const { return limit_; }
    std::uint64_t size() const { return size_; }
    bool dense() const { return dense_; }

    bool contains(const LatticeIndex& k) const;
    ComplexVector center(const LatticeIndex& k) const;
    LatticeIndex nearest(const ComplexVector& p) const;
    // position of k in the dense count array; requires dense() and contains(k)
    std::uint64_t slot(const LatticeIndex& k) const;
    // index of k in the bounding box: row-major over the first 2n-1 coordinates, with the last one
    // padded to a power of two so that the row is a shift away
    std::uint64_t cube_index(const LatticeIndex& k) const {
        std::uint64_t c = 0;
        for (int j = 0; j < 2 * n_; ++j) c += static_cast<std::uint64_t>(k[j] + extent_) * cube_stride(j);
        return c;
    }
    std::uint64_t cube_stride(int j) const { return strides_[j]; }
    std::uint64_t cube_size() const { return strides_[0] * side_; }
    // dense slot of a cube index; requires dense() and that the index lies in the domain
    std::uint64_t slot_of_cube(std::uint64_t c) const {
        std::uint64_t row = c >> last_bits_;
        return offset_[row] + (c & ((std::uint64_t(1) << last_bits_) - 1)) + static_cast<std::uint64_t>(half_[row]) -
               static_cast<std::uint64_t>(extent_);
    }

    template <class F>
    void for_each(F&& f) const {
        LatticeIndex k{};
        int dims = 2 * n_;
        for (std::uint64_t row = 0; row < rows_; ++row) {
            std::uint64_t rest = row;
            long s = 0;
            for (int j = dims - 2; j >= 0; --j) {
                k[j] = static_cast<int>(rest % side_) - extent_;
                rest /= side_;
                s += static_cast<long>(k[j]) * k[j];
            }
            int m = last_half_width(s);
            for (int t = -m; t <= m; ++t) {
                k[dims - 1] = t;
                f(k);
            }
        }
    }

    // largest |k_last| allowed when the other coordinates have squared norm s, or -1
    int last_half_width(long s) const;

private:
    int n_;
    double delta_, pitch_, radius_;
    int extent_;
    std::uint64_t side_ = 0, rows_ = 0, size_ = 0;
    int last_bits_ = 0;
    std::array<std::uint64_t, 6> strides_{};
    bool dense_ = false;
    double limit_ = 0;                  // (R / pitch)^2
    std::vector<std::uint64_t> offset_;  // dense only, one per row
    std::vector<std::int32_t> half_;
};

// c_inc: a δ-ball and a δ-tube are incident when the centre lies within c_inc·δ of the central segment
double incidence_constant(int n);

enum class IncidenceMode { fast, oracle };

bool incident(const Ball& q, const ComplexTube& t, IncidenceMode mode = IncidenceMode::fast,
              const MCOptions& mc = {40000, 0, 1});

class BallCounts {
public:
    explicit BallCounts(const BallGrid& grid);

    void add(const LatticeIndex& k);
    // adds one to the ball at each listed cube index; clears `cubes`
    void add_cube_indices(std::vector<std::uint64_t>& cubes, std::vector<std::uint64_t>& scratch);
    void add_cube_indices(std::vector<std::uint32_t>& cubes, std::vector<std::uint32_t>& scratch);
    std::uint32_t at(const LatticeIndex& k) const;
    // count -> number of balls with exactly that many incident tubes (count >= 1)
    std::map<std::uint32_t, std::uint64_t> histogram() const;
    const BallGrid& grid() const { return *grid_; }

private:
    const BallGrid* grid_;
    std::vector<std::uint32_t> dense_;
    std::unordered_map<LatticeIndex, std::uint32_t, LatticeIndexHash> sparse_;
};

BallCounts count_incidences(const BallGrid& grid, const std::vector<ComplexTube>& tubes);
BallCounts count_incidences_exhaustive(const BallGrid& grid, const std::vector<ComplexTube>& tubes);
// lattice indices of the grid balls incident to one tube
std::vector<LatticeIndex> incident_balls(const BallGrid& grid, const ComplexTube& tube);

struct RichnessProfile {
    int n = 2;
    double delta = 0;
    std::string family;  // identity of the tube set
    std::string mode = "indexed";
    std::uint64_t grid_size = 0;
    std::uint64_t tubes = 0;
    std::map<std::uint64_t, std::uint64_t> entries;    // dyadic r -> |P_r|
    std::map<std::uint32_t, std::uint64_t> histogram;  // exact count -> balls

    std::uint64_t at(std::uint64_t r) const;
};

RichnessProfile profile_from_counts(const BallCounts& counts, std::uint64_t tubes);
RichnessProfile richness_profile(const BallGrid& grid, const TubeFamily& family);
RichnessProfile richness_profile_exhaustive(const BallGrid& grid, const TubeFamily& family);
std::string family_identity(const TubeFamily& family);

struct DyadicClass {
    int k = 0;  // values in [2^k, 2^{k+1})
    double lo = 1, hi = 2;
    std::vector<std::size_t> members;
    double total = 0;
    std::size_t classes = 0;  // number of nonempty classes
};

DyadicClass dyadic_pigeonhole(const std::vector<std::pair<std::size_t, double>>& weights);

double fit_exponent(const std::vector<std::pair<double, double>>& points);

enum class Theorem { t41, t42 };
std::string to_string(Theorem t);
Theorem theorem_from_string(const std::string& s);

struct BoundRow {
    std::uint64_t r = 0;
    std::uint64_t count = 0;
    double bound = 0;  // constant · δ^{-ε} · bound(r)
    double ratio = 0;
};

struct BoundReport {
    Theorem theorem = Theorem::t41;
    double epsilon = 0.1;
    double constant = 100;
    double threshold = 0;
    bool applicable = true;
    std::string note;
    std::vector<BoundRow> rows;
    double max_ratio = 0;
    bool verdict = false;
};

// all_r: check every dyadic r, not only those above the theorem's threshold
BoundReport verify_bound(const TubeFamily& family, const RichnessProfile& profile, Theorem theorem,
                         double epsilon = 0.1, double constant = 100, bool all_r = false);

struct ThickBall {
    ComplexVector center;
    std::size_t tubes = 0;
};

struct DichotomyReport {
    int n = 2;
    double big_d = 0;
    int big_e = 1;
    double epsilon = 0.1;
    double slack = 64;
    double lambda = 1, rho = 1;
    std::size_t balls = 0, tubes = 0;
    double thin_bound = 0;
    double thin_ratio = 0;
    bool thin_holds = false;
    std::vector<ThickBall> thick_cover;
    double thick_tube_threshold = 0;
    double captured_fraction = 0;
    double capture_threshold = 0;
    bool thick_holds = false;
};

DichotomyReport heavy_ball_check(const std::vector<Ball>& balls, const std::vector<ComplexTube>& tubes, int big_e,
                                 double epsilon, double big_d, double slack = 64);

struct DichotomyConfig {
    std::vector<Ball> balls;
    std::vector<ComplexTube> tubes;
    int big_e = 1;
    double big_d = 16;
    std::string kind;
};

// unit balls and tubes of length D, radius 1 in B(0, D); kind is concentrated, generic or mixed
DichotomyConfig generate_dichotomy_config(int n, double big_d, const std::string& kind, int tube_count,
                                          std::uint64_t seed);

}  // namespace ctube
