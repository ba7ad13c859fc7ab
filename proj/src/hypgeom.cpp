#include "hyperbuild/hypgeom.hpp"

#include "hyperbuild/errors.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>

namespace hyperbuild {

namespace {

const Mat3 kJ = Vec3(-1.0, 1.0, 1.0).asDiagonal();

Vec3 minkowski_cross(const Vec3& u, const Vec3& v) { return kJ * u.cross(v); }

long long quantize(double v) { return std::llround(v / kQuantum); }

}  // namespace

double minkowski(const Vec3& u, const Vec3& v) noexcept {
    return -u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
}

HPoint HPoint::from(const Vec3& coords) {
    const double form = minkowski(coords, coords);
    const double scale = std::max(1.0, coords[0] * coords[0]);
    if (!(coords[0] > 0.0) || std::abs(form + 1.0) > kHyperboloidTol * scale) {
        throw InvalidInputError(fmt::format("point ({}, {}, {}) is off the hyperboloid (<x,x> = {})",
                                            coords[0], coords[1], coords[2], form));
    }
    return HPoint{coords};
}

HPoint HPoint::normalized(const Vec3& coords) {
    const double form = minkowski(coords, coords);
    if (!(form < 0.0)) {
        throw InvalidInputError("cannot normalize a non-timelike vector onto the hyperboloid");
    }
    Vec3 x = coords / std::sqrt(-form);
    if (x[0] < 0.0) x = -x;
    return HPoint{x};
}

HPoint HPoint::origin() noexcept { return HPoint{Vec3(1.0, 0.0, 0.0)}; }

HPoint HPoint::polar(double radius, double angle) noexcept {
    const double sh = std::sinh(radius);
    return HPoint{Vec3(std::cosh(radius), sh * std::cos(angle), sh * std::sin(angle))};
}

HGeodesic HGeodesic::from_normal(const Vec3& normal) {
    const double form = minkowski(normal, normal);
    if (!(form > 0.0)) {
        throw InvalidInputError("geodesic normal must be spacelike");
    }
    return HGeodesic{normal / std::sqrt(form)};
}

HGeodesic HGeodesic::through(const HPoint& a, const HPoint& b) {
    return from_normal(minkowski_cross(a.coords, b.coords));
}

HGeodesic HGeodesic::canonical() const {
    for (int i = 0; i < 3; ++i) {
        const long long q = quantize(normal[i]);
        if (q != 0) return q > 0 ? *this : HGeodesic{-normal};
    }
    return *this;
}

std::array<long long, 3> HGeodesic::quantized_key() const {
    const HGeodesic c = canonical();
    return {quantize(c.normal[0]), quantize(c.normal[1]), quantize(c.normal[2])};
}

bool preserves_form(const Mat3& m, double tol) {
    const Mat3 defect = m.transpose() * kJ * m - kJ;
    return defect.cwiseAbs().maxCoeff() <= tol && m(0, 0) > 0.0;
}

HIsometry HIsometry::from(const Mat3& m) {
    if (!preserves_form(m)) {
        throw InvalidInputError("matrix does not preserve the Minkowski form or the upper sheet");
    }
    return HIsometry(m);
}

HIsometry HIsometry::reflection(const HGeodesic& w) {
    // x -> x - 2 <x,n> n
    const Vec3& n = w.normal;
    return HIsometry(Mat3::Identity() - 2.0 * n * (kJ * n).transpose());
}

HIsometry HIsometry::boost_to(const HPoint& x) {
    const double x0 = x.coords[0];
    const Eigen::Vector2d xv = x.coords.tail<2>();
    Mat3 m;
    m(0, 0) = x0;
    m.block<1, 2>(0, 1) = xv.transpose();
    m.block<2, 1>(1, 0) = xv;
    m.block<2, 2>(1, 1) = Eigen::Matrix2d::Identity() + xv * xv.transpose() / (1.0 + x0);
    return HIsometry(m);
}

HIsometry HIsometry::rotation(double angle) {
    Mat3 m = Mat3::Identity();
    m(1, 1) = std::cos(angle);
    m(1, 2) = -std::sin(angle);
    m(2, 1) = std::sin(angle);
    m(2, 2) = std::cos(angle);
    return HIsometry(m);
}

HPoint HIsometry::apply(const HPoint& x) const { return HPoint{m_ * x.coords}; }

HGeodesic HIsometry::apply(const HGeodesic& w) const { return HGeodesic{m_ * w.normal}; }

HIsometry HIsometry::operator*(const HIsometry& other) const { return HIsometry(m_ * other.m_); }

HIsometry HIsometry::inverse() const { return HIsometry(kJ * m_.transpose() * kJ); }

Ray Ray::from(const HPoint& base, const Vec3& direction) {
    if (std::abs(minkowski(base.coords, direction)) > kIsometryTol * std::max(1.0, base.coords[0])) {
        throw InvalidInputError("ray direction is not tangent at its base point");
    }
    const double norm2 = minkowski(direction, direction);
    if (!(norm2 > 0.0)) throw InvalidInputError("ray direction must be spacelike");
    return Ray{base, direction / std::sqrt(norm2)};
}

Ray Ray::at_angle(const HPoint& base, double angle) {
    const HIsometry frame = HIsometry::boost_to(base);
    return Ray{base, frame.apply_vector(Vec3(0.0, std::cos(angle), std::sin(angle)))};
}

HPoint Ray::at(double s) const {
    return HPoint{std::cosh(s) * base.coords + std::sinh(s) * direction};
}

Vec3 Ray::tangent(double s) const { return std::sinh(s) * base.coords + std::cosh(s) * direction; }

double dist(const HPoint& x, const HPoint& y) {
    auto check = [](const HPoint& z) {
        const double scale = std::max(1.0, z.coords[0] * z.coords[0]);
        if (!(z.coords[0] > 0.0) || std::abs(minkowski(z.coords, z.coords) + 1.0) > 1e-9 * scale) {
            throw InvalidInputError("dist: argument is off the hyperboloid");
        }
    };
    check(x);
    check(y);
    // chord form: accurate for nearby points where acosh loses half the digits
    const Vec3 d = x.coords - y.coords;
    return 2.0 * std::asinh(0.5 * std::sqrt(std::max(0.0, minkowski(d, d))));
}

HPoint reflect(const HGeodesic& w, const HPoint& x) {
    return HPoint{x.coords - 2.0 * minkowski(x.coords, w.normal) * w.normal};
}

double angle_at(const HPoint& vertex, const HPoint& u, const HPoint& w) {
    const Vec3& v = vertex.coords;
    const Vec3 tu = u.coords + minkowski(u.coords, v) * v;
    const Vec3 tw = w.coords + minkowski(w.coords, v) * v;
    const double c = minkowski(tu, tw) / std::sqrt(minkowski(tu, tu) * minkowski(tw, tw));
    return std::acos(std::clamp(c, -1.0, 1.0));
}

namespace {

std::vector<HPoint> regular_vertices(int p, double radius) {
    std::vector<HPoint> out;
    out.reserve(p);
    for (int k = 0; k < p; ++k) {
        out.push_back(HPoint::polar(radius, 2.0 * std::numbers::pi * k / p));
    }
    return out;
}

double vertex_angle(int p, double radius) {
    const auto v = regular_vertices(p, radius);
    return angle_at(v[0], v[p - 1], v[1]);
}

}  // namespace

Polygon build_right_angled_polygon(int p) {
    if (p < 5) {
        throw DomainError(fmt::format("no regular right-angled hyperbolic {}-gon exists (need p >= 5)", p));
    }
    const double target = std::numbers::pi / 2.0;
    double lo = 1e-6;
    double hi = 20.0;
    // The vertex angle decreases from the Euclidean value to 0 as the radius grows.
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (vertex_angle(p, mid) > target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Polygon poly;
    poly.p = p;
    poly.circumradius = 0.5 * (lo + hi);
    poly.vertices = regular_vertices(p, poly.circumradius);
    const HPoint o = HPoint::origin();
    for (int k = 0; k < p; ++k) {
        HGeodesic side = HGeodesic::through(poly.vertices[k], poly.vertices[(k + 1) % p]);
        if (side.side(o) > 0.0) side.normal = -side.normal;
        poly.sides.push_back(side);
    }
    return poly;
}

double Polygon::side_length() const { return dist(vertices[0], vertices[1 % p]); }

double Polygon::inradius() const { return std::asinh(std::abs(sides[0].side(HPoint::origin()))); }

double Polygon::interior_angle(int k) const {
    return angle_at(vertices[k], vertices[(k + p - 1) % p], vertices[(k + 1) % p]);
}

std::optional<double> crossing_parameter(const Ray& r, const HGeodesic& w) {
    const double a = minkowski(r.base.coords, w.normal);
    const double b = minkowski(r.direction, w.normal);
    const double scale = std::max(1.0, r.base.coords[0]);
    const double tol = kCrossingTol * scale;
    if (std::abs(a) <= tol && std::abs(b) <= tol) {
        throw DegenerateCrossingError("ray lies inside the wall");
    }
    if (std::abs(a + b) <= tol) {
        throw DegenerateCrossingError("ray is asymptotic to the wall");
    }
    if (std::abs(a) <= tol) return 0.0;
    if ((a < 0.0) == (a + b < 0.0)) return std::nullopt;
    return std::atanh(-a / b);
}

}  // namespace hyperbuild
