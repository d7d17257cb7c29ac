#pragma once

namespace pgd {

// 7-DoF box in camera coordinates. x points right, y points down (image row
// direction), z is the optical axis. yaw rotates about the vertical axis and
// is kept in (-pi, pi]; yaw = 0 faces +x. The box bottom sits at y + h/2.
struct Box3D {
    double x = 0.0, y = 0.0, z = 0.0;  // center (m)
    double w = 0.0;                    // width,  lateral extent  (m)
    double l = 0.0;                    // length, heading extent  (m)
    double h = 0.0;                    // height, vertical extent (m)
    double yaw = 0.0;                  // rad
    int category = 0;
    double vx = 0.0, vz = 0.0;         // BEV velocity (m/s)
    int attribute = 0;
    int difficulty = 0;                // 0 easy, 1 moderate, 2 hard

    double bottom() const { return y + 0.5 * h; }
    double volume() const { return w * l * h; }
};

// Normalizes an angle into (-pi, pi].
double wrap_angle(double a);

} // namespace pgd
