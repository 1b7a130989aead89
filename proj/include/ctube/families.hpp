#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "ctube/solids.hpp"

namespace ctube {

double fs_distance(const ComplexVector& u, const ComplexVector& v);

class CapPartition {
public:
    CapPartition() = default;
    CapPartition(int n, double scale, std::uint64_t seed);

    int n() const { return n_; }
    double scale() const { return scale_; }
    std::uint64_t seed() const { return seed_; }
    const std::vector<ComplexVector>& centers() const { return centers_; }
    std::size_t size() const { return centers_.size(); }
    // index of the Fubini-Study nearest centre
    std::size_t cell_of(const ComplexVector& u) const;

private:
    using Key = std::array<int, 5>;
    struct KeyHash {
        std::size_t operator()(const Key& k) const;
    };

    // grid key from row `chart` of the projector uu*
    std::array<double, 5> coords_of(const ComplexVector& u, int chart) const;
    Key key_of(const ComplexVector& u, int chart) const;
    // centres within Fubini-Study distance `radius` of u, paired with squared overlaps
    void near(const ComplexVector& u, double radius, std::vector<std::pair<std::size_t, double>>& out) const;
    void insert(const ComplexVector& u);
    void close_holes_cp1();
    void close_holes_by_ascent(Rng& rng);

    int n_ = 2;
    double scale_ = 0.1;
    std::uint64_t seed_ = 0;
    double cell_ = 0.1;
    std::vector<ComplexVector> centers_;
    std::vector<cplx> flat_;  // centres padded to three coordinates
    std::vector<std::unordered_map<Key, std::vector<std::size_t>, KeyHash>> grids_;
};

CapPartition cap_partition(int n, double scale, std::uint64_t seed);

enum class SpacingKind { uniform_n, exact_h0, at_most_h0, unconstrained };

std::string to_string(SpacingKind k);
SpacingKind spacing_kind_from_string(const std::string& s);

struct TubeFamily {
    int n = 2;
    double delta = 1.0 / 16;
    double big_w = 1;
    SpacingKind spacing_kind = SpacingKind::unconstrained;
    int spacing_param = 0;
    std::uint64_t seed = 0;
    std::vector<ComplexTube> tubes;
    std::vector<std::size_t> cap_index;  // generator's direction cap per tube, empty when unknown
};

struct SpacingReport {
    std::map<int, std::size_t> histogram;  // count -> number of cover tubes
    int min = 0;
    int max = 0;
    double mean = 0;
    std::size_t cover_tubes = 0;
    std::size_t uncovered = 0;  // δ-tubes essentially contained in no cover tube
    std::size_t memberships = 0;
    bool verdict = false;
};

// integer offsets of the W^{-1} translation lattice kept inside the unit ball, in 2(n-1) real coordinates
std::vector<std::vector<int>> cover_lattice(int n, double big_w);
// per-axis slot count of the δ sub-lattice inside one cover cell
int slots_per_axis(double delta, double big_w);
std::size_t tube_capacity(int n, double delta, double big_w);
// cover tube for a cap centre and lattice offset
ComplexTube cover_tube(const ComplexVector& center_dir, const Eigen::MatrixXcd& perp, const std::vector<int>& k,
                       double big_w);

TubeFamily generate_spaced_family(int n, double delta, double big_w, int big_n, std::uint64_t seed);
TubeFamily generate_h0_family(int n, double delta, double big_w, int h0, std::uint64_t seed, bool at_most = false);

SpacingReport check_spacing(const TubeFamily& family, double big_w);

struct DualSlabResult {
    double observed_mean = 0;
    double predicted = 0;
    std::size_t directions = 0;
};

DualSlabResult dual_slab_count_check(int n, double delta, double sigma, int probes, std::uint64_t seed);

void write_family(std::ostream& os, const TubeFamily& family);
TubeFamily read_family(std::istream& is);

}  // namespace ctube
