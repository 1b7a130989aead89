#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ctube/families.hpp"
#include "ctube/incidence.hpp"

namespace ctube {

constexpr double kC1 = 0.01;
constexpr double kC2 = 1.2;

struct PointSet {
    std::vector<Ball> balls;  // δ-balls in B(0,1) of ℂ²
    double delta = 1.0 / 32;
    double s = 1.5;
    int big_n = 1;
    std::uint64_t seed = 0;
};

// most balls whose centres share one cell of the δ^{s/4} lattice
int max_cell_count(const PointSet& e);
// most centres within distance `radius` of any one centre (a ball of that radius around each member)
int max_ball_count(const PointSet& e, double radius);

struct SplitSets {
    PointSet e1, e2;
    ComplexVector b1_center, b2_center;
    double c_split = 0;  // |E| / min(|E1|, |E2|)
};

struct QuadrupleCount {
    std::uint64_t q_count = 0;
    std::string method;
    double delta = 0;
};

struct FalconerReport {
    double s = 1.5, delta = 1.0 / 32, epsilon = 0.1;
    int big_n = 1;
    std::uint64_t seed = 0;
    std::size_t points = 0, e1 = 0, e2 = 0;
    double c_split = 0;
    std::size_t tubes = 0;
    SpacingReport spacing;
    RichnessProfile profile;
    double incidence_sum = 0;  // Σ r² |P_r| over dyadic r
    std::uint64_t q_count = 0;
    std::uint64_t covering_e12 = 0;  // δ-cover of Δ(E1, E2)
    std::uint64_t covering_all = 0;  // δ-cover of Δ(E)
    double cs_lower_bound = 0;
    double target = 0;  // δ^{-s+ε}
    bool q_le_incidences = false;
    bool covering_ge_cs = false;
    bool pass = false;
};

cplx complex_distance(const ComplexVector& p1, const ComplexVector& p2);
ComplexLine aux_line(const ComplexVector& p1, const ComplexVector& p2);
// unnormalised direction ((y1-y2)/2, -(x1-x2)/2, 1)
ComplexVector aux_direction(const ComplexVector& p1, const ComplexVector& p2);

PointSet generate_point_set(double s, double delta, int big_n, std::uint64_t seed);
SplitSets split_point_set(const PointSet& e);
TubeFamily build_tubes(const SplitSets& split, double delta);

enum class QuadMethod { brute, hashed };
QuadrupleCount count_quadruples(const SplitSets& split, double delta, QuadMethod method);
std::uint64_t covering_number(const std::vector<cplx>& values, double delta);
double cs_lower_bound(std::uint64_t n1, std::uint64_t n2, std::uint64_t q_count);

struct OneTubeReport {
    int case_id = 1;
    double alpha = 0, beta = 0;
    double separation = 0;
    double required = 0;  // δ^{s/4} / 32
    double sum_gap = 0;   // ‖(p1+p3) - (p2+p4)‖
    double diff_gap = 0;  // ‖(p1-p3) - (p2-p4)‖
    double parallelogram_residual = 0;
    bool holds = false;
};

// G_{1,3}(α, β) as a point of ℂ³: the line through p1, p3 at parameter α + iβ
ComplexVector g_param(const ComplexVector& pa, const ComplexVector& pb, double alpha, double beta);
OneTubeReport verify_one_tube_claim(const ComplexVector& p1, const ComplexVector& p2, const ComplexVector& p3,
                                    const ComplexVector& p4, double s, double delta);

struct IntersectionReport {
    double max_cos = 0;  // over the z grid
    bool angle_ok = false;
    bool x_branch = true;
    cplx s_param = 0;
    double a_norm = 0;
    double a_limit = 0;  // δ / (C2 - 2 C1)
    ComplexVector witness;  // centre of the witness ball
    double witness_norm = 0;
    bool distance_ok = false;
    bool inside_ok = false;
    bool holds = false;
};

// m0 and ε0 from the radicals in C1, C2
double aux_m0();
double aux_eps0();

IntersectionReport verify_intersection_prop(const ComplexVector& p1, const ComplexVector& p2,
                                            const ComplexVector& p3, const ComplexVector& p4, double delta);

struct QQuadruple {
    std::array<ComplexVector, 4> p;
    ComplexVector b1, b2;
};
// p1, p4 in B1 and p2, p3 in B2 with |Δ(p1,p2) - Δ(p3,p4)| < δ
std::vector<QQuadruple> generate_q_quadruples(double delta, std::size_t count, std::uint64_t seed);

FalconerReport run_falconer(double s, double delta, int big_n, double epsilon, std::uint64_t seed);

void write_point_set(std::ostream& os, const PointSet& e);
PointSet read_point_set(std::istream& is);

}  // namespace ctube
