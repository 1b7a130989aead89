#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "ctube/cgeom.hpp"

namespace ctube {

struct ComplexTube {
    ComplexVector center;
    ComplexVector direction;
    double length = 1.0;
    double radius = 0.1;

    ComplexTube() = default;
    // does not enforce length > 10 radius; cover tubes of radius 1/W need that freedom
    ComplexTube(ComplexVector c, ComplexVector u, double l, double r);
    static ComplexTube checked(ComplexVector c, ComplexVector u, double l, double r);

    int dim() const { return static_cast<int>(center.size()); }
    double half_length() const { return 0.5 * length; }
    double distance_to_axis(const ComplexVector& p) const;
    double distance_to_segment(const ComplexVector& p) const;
};

struct Ball {
    ComplexVector center;
    double radius = 1.0;

    Ball() = default;
    Ball(ComplexVector c, double r);
    int dim() const { return static_cast<int>(center.size()); }
};

// radius-neighbourhood of an entire complex line
struct LineNeighborhood {
    ComplexLine line;
    double radius = 0.1;
};

using Solid = std::variant<Ball, ComplexTube>;
using MCSolid = std::variant<Ball, ComplexTube, LineNeighborhood>;

struct Slab {
    RealVector center;
    Eigen::MatrixXd axes;  // orthonormal columns
    RealVector half_widths;

    bool contains(const RealVector& x) const;
};

struct VolumeEstimate {
    double value = 0.0;
    double standard_error = 0.0;
    std::uint64_t samples = 0;
    std::uint64_t seed = 0;
};

struct MCOptions {
    std::uint64_t samples = 1000000;
    std::uint64_t seed = 0;
    int shards = 4;
};

enum class VolumeMode { fast, monte_carlo };

struct EssentialOptions {
    VolumeMode mode = VolumeMode::fast;
    MCOptions mc{200000, 0, 1};
};

double unit_ball_volume(int k);
// volume of the cap of height h of a radius-R ball in R^dim
double cap_volume(int dim, double R, double h);
// |B(0,R1) ∩ B(d e, R2)| in R^dim
double lens_volume(int dim, double R1, double R2, double d);
double tube_volume(const ComplexTube& t);
double tube_core_volume(const ComplexTube& t);
double solid_volume(const Solid& a);

bool tube_contains_point(const ComplexTube& t, const ComplexVector& p);
bool ball_contains_point(const Ball& b, const ComplexVector& p);

double projection_residual(const Eigen::Vector2d& x, const Eigen::Vector2d& y, double r_slope, double zeta);
bool slice_membership(const Eigen::Vector2d& x, const Eigen::Vector2d& y, double r_slope, double zeta,
                      double delta);

double intersection_volume_exact(double theta, double delta, int n = 2);
VolumeEstimate intersection_volume_mc(const MCSolid& a1, const MCSolid& a2, const MCOptions& opts);

// |B(c, rb) ∩ T| for a ball whose axial footprint lies inside the tube's axial disk; a = perpendicular offset
double ball_tube_overlap(int n, double ball_radius, double tube_radius, double a);
double overlap_volume(const Solid& a1, const Solid& a2);
double max_overlap_volume(const Solid& a1, const Solid& a2);

bool essentially_intersect(const Solid& a1, const Solid& a2, const EssentialOptions& opts = {});
bool essentially_distinct(const Solid& a1, const Solid& a2, const EssentialOptions& opts = {});
bool essentially_contains(const Solid& a1, const Solid& a2, const EssentialOptions& opts = {});
std::vector<Solid> axis_translates(const Solid& a);

Solid scale_shape(const Solid& a, double b);
Slab dual_slab(const ComplexTube& t);

}  // namespace ctube
