#include "pgd/camera.hpp"

#include "pgd/errors.hpp"

#include <cmath>
#include <string>

namespace pgd {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kMinDepth = 1e-6;
} // namespace

double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * kPi);
    if (a <= -kPi) {
        a += 2.0 * kPi;
    } else if (a > kPi) {
        a -= 2.0 * kPi;
    }
    return a;
}

void CameraModel::validate() const {
    if (!(f > 0.0)) {
        throw_domain("camera: focal length must be positive, got " + std::to_string(f));
    }
}

Projection project_point(const CameraModel& cam, double x, double y, double z) {
    cam.validate();
    const double d = z - cam.f * cam.b_z;
    if (!(d > kMinDepth)) {
        throw_domain("non_positive_depth: projective depth " + std::to_string(d) +
                     " is at or behind the camera plane");
    }
    Projection p;
    p.depth = d;
    p.center.u_prime = (cam.f * x + cam.c_u * z - cam.f * cam.b_x) / d;
    p.center.v_prime = (cam.f * y + cam.c_v * z - cam.f * cam.b_y) / d;
    p.center.v = p.center.v_prime - cam.c_v;
    return p;
}

void back_project(const CameraModel& cam, double u_prime, double v_prime, double depth,
                  double& x, double& y, double& z) {
    cam.validate();
    if (!(depth > 0.0)) {
        throw_domain("non_positive_depth: cannot back-project depth " + std::to_string(depth));
    }
    z = depth + cam.f * cam.b_z;
    x = (u_prime * depth - cam.c_u * z) / cam.f + cam.b_x;
    y = (v_prime * depth - cam.c_v * z) / cam.f + cam.b_y;
}

namespace {

void check_transfer(double d1, double v2, double v_min) {
    if (!(d1 > 0.0)) {
        throw_domain("pairwise transfer: source depth must be positive, got " +
                     std::to_string(d1));
    }
    if (!(std::abs(v2) > v_min)) {
        throw_domain("horizon_singular: |v2| = " + std::to_string(std::abs(v2)) +
                     " px is within the v_min = " + std::to_string(v_min) +
                     " px margin of the horizon");
    }
}

} // namespace

double pairwise_depth_strict(const CameraModel& cam, double v1, double d1, double y1,
                             double v2, double y2, double v_min) {
    cam.validate();
    check_transfer(d1, v2, v_min);
    return (v1 / v2) * d1 + (cam.f / v2) * (y2 - y1);
}

double pairwise_depth_approx(const CameraModel& cam, double v1, double d1, double h1,
                             double v2, double h2, double v_min) {
    cam.validate();
    check_transfer(d1, v2, v_min);
    return (v1 / v2) * d1 + cam.f * (h1 - h2) / (2.0 * v2);
}

double propagation_error_bound(double focal, double v2, double delta) {
    if (!(focal > 0.0)) {
        throw_domain("error bound: focal length must be positive");
    }
    if (v2 == 0.0) {
        throw_domain("horizon_singular: error bound diverges at v2 = 0");
    }
    if (!(delta >= 0.0)) {
        throw_domain("error bound: bottom mismatch delta must be nonnegative");
    }
    return focal / std::abs(v2) * delta;
}

} // namespace pgd
