#pragma once

// Hyperbolic plane in the hyperboloid model: points on the upper sheet of
// <x,x> = -1 for the Minkowski form <u,v> = -u0 v0 + u1 v1 + u2 v2.

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <vector>

namespace hyperbuild {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kHyperboloidTol = 1e-12;
inline constexpr double kIsometryTol = 1e-10;
inline constexpr double kCrossingTol = 1e-9;
inline constexpr double kQuantum = 1e-9;

double minkowski(const Vec3& u, const Vec3& v) noexcept;

struct HPoint {
    Vec3 coords;

    /// Validating constructor; rejects vectors off the upper sheet.
    static HPoint from(const Vec3& coords);
    /// Projects an approximately-hyperboloid vector back onto the sheet.
    static HPoint normalized(const Vec3& coords);
    static HPoint origin() noexcept;
    /// Point at hyperbolic distance `radius` from the origin in direction `angle`.
    static HPoint polar(double radius, double angle) noexcept;
};

struct HGeodesic {
    Vec3 normal;  // spacelike, <n,n> = 1

    static HGeodesic from_normal(const Vec3& normal);
    static HGeodesic through(const HPoint& a, const HPoint& b);
    /// Same line, normal sign fixed so the first nonzero quantized coordinate is positive.
    HGeodesic canonical() const;
    std::array<long long, 3> quantized_key() const;
    /// Signed value <x, n>; sinh of the signed distance from x to the line.
    double side(const HPoint& x) const noexcept { return minkowski(x.coords, normal); }
};

class HIsometry {
public:
    HIsometry() : m_(Mat3::Identity()) {}
    /// Validating constructor: the matrix must preserve the form and the sheet.
    static HIsometry from(const Mat3& m);
    static HIsometry reflection(const HGeodesic& w);
    /// Pure boost carrying the origin to `x`.
    static HIsometry boost_to(const HPoint& x);
    static HIsometry rotation(double angle);

    const Mat3& matrix() const noexcept { return m_; }
    HPoint apply(const HPoint& x) const;
    HGeodesic apply(const HGeodesic& w) const;
    Vec3 apply_vector(const Vec3& v) const { return m_ * v; }
    HIsometry operator*(const HIsometry& other) const;
    HIsometry inverse() const;

private:
    explicit HIsometry(const Mat3& m) : m_(m) {}
    Mat3 m_;
};

bool preserves_form(const Mat3& m, double tol = kIsometryTol);

struct Ray {
    HPoint base;
    Vec3 direction;  // unit spacelike tangent at base

    static Ray from(const HPoint& base, const Vec3& direction);
    /// Ray leaving `base` at `angle`, measured in the frame transported from the origin.
    static Ray at_angle(const HPoint& base, double angle);
    HPoint at(double s) const;
    /// Unit tangent of the ray at parameter s.
    Vec3 tangent(double s) const;
};

struct Polygon {
    int p = 0;
    double circumradius = 0.0;
    std::vector<HPoint> vertices;
    std::vector<HGeodesic> sides;  // sides[k] joins vertices[k] and vertices[k+1]; outward normals

    double side_length() const;
    double inradius() const;
    double interior_angle(int k) const;
};

double dist(const HPoint& x, const HPoint& y);
HPoint reflect(const HGeodesic& w, const HPoint& x);
/// Angle at `vertex` between the geodesics towards `u` and `w`.
double angle_at(const HPoint& vertex, const HPoint& u, const HPoint& w);

/// Regular p-gon with right interior angles, centred at the origin with
/// vertex 0 on the positive x1-axis. The circumradius is found by bisection
/// on the vertex-angle residual.
Polygon build_right_angled_polygon(int p);

/// Parameter s >= 0 at which the ray changes side of the wall, if it does.
/// Throws DegenerateCrossingError when the ray lies in the wall or is
/// asymptotic to it within kCrossingTol.
std::optional<double> crossing_parameter(const Ray& r, const HGeodesic& w);

}  // namespace hyperbuild
