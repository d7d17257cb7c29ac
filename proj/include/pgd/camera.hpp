#pragma once

#include "pgd/types.hpp"

namespace pgd {

// Pinhole model with one focal length for both axes and an optional baseline
// offset (b_x, b_y, b_z) against the reference camera. The projection matrix
//
//   [ f  0  c_u  -f*b_x ]
//   [ 0  f  c_v  -f*b_y ]
//   [ 0  0   1   -f*b_z ]
//
// maps homogeneous (x, y, z, 1) to d * (u', v', 1), so the projective depth
// of a point is d = z - f*b_z, not z itself.
struct CameraModel {
    double f = 1.0;
    double c_u = 0.0;
    double c_v = 0.0;
    double b_x = 0.0;
    double b_y = 0.0;
    double b_z = 0.0;

    void validate() const;  // throws DomainError unless f > 0
};

// Image location of a projected point. v is the signed distance below the
// horizon row: v = v' - c_v, positive below (y is down-positive).
struct ProjectedCenter {
    double u_prime = 0.0;
    double v_prime = 0.0;
    double v = 0.0;
};

struct Projection {
    ProjectedCenter center;
    double depth = 0.0;  // projective depth d
};

// Destinations closer than this to the horizon are rejected by the depth
// transfer instead of amplifying bottom-height noise by f/|v|.
inline constexpr double kDefaultVMin = 1.0;

Projection project_point(const CameraModel& cam, double x, double y, double z);

// Inverse of project_point for a known projective depth.
void back_project(const CameraModel& cam, double u_prime, double v_prime, double depth,
                  double& x, double& y, double& z);

// Transfers depth from object 1 to object 2 through the shared camera:
//   d2 = (v1/v2) * d1 + (f/v2) * (y2 - y1)
// with y the height of each projected center. Exact for exact inputs.
double pairwise_depth_strict(const CameraModel& cam, double v1, double d1, double y1,
                             double v2, double y2, double v_min = kDefaultVMin);

// Shared-ground approximation of the strict transfer. With centers on a
// common ground plane, y2 - y1 = (h1 - h2)/2, so only box heights are needed:
//   d2 = (v1/v2) * d1 + f * (h1 - h2) / (2 * v2)
double pairwise_depth_approx(const CameraModel& cam, double v1, double d1, double h1,
                             double v2, double h2, double v_min = kDefaultVMin);

// Depth error caused by a bottom-height mismatch delta at image offset v2:
// |d_err| = f * delta / |v2|.
double propagation_error_bound(double focal, double v2, double delta);

} // namespace pgd
