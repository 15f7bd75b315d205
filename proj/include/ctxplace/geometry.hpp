#pragma once

// 2D convex geometry on the ground plane (x, z).

#include <algorithm>
#include <span>
#include <vector>

#include "scene.hpp"

namespace ctxplace {

struct Point2 {
    double x = 0.0, z = 0.0;

    friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.z + b.z}; }
    friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.z - b.z}; }
    friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.z}; }
    friend bool operator==(const Point2&, const Point2&) = default;
    friend auto operator<=>(const Point2&, const Point2&) = default;
};

inline double cross(Point2 a, Point2 b) { return a.x * b.z - a.z * b.x; }
inline double cross(Point2 o, Point2 a, Point2 b) { return cross(a - o, b - o); }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.z * b.z; }
inline double length(Point2 a) { return std::hypot(a.x, a.z); }

// Counter-clockwise in the (x, z) plane with x to the right and z up.
// Zero, one or two vertices are the degenerate empty / point / segment forms.
class ConvexPolygon {
public:
    ConvexPolygon() = default;

    // Takes vertices already in CCW convex order (not validated beyond size).
    static ConvexPolygon from_ccw(std::vector<Point2> v) {
        ConvexPolygon p;
        p.v_ = std::move(v);
        return p;
    }

    const std::vector<Point2>& vertices() const { return v_; }
    std::size_t size() const { return v_.size(); }
    bool empty() const { return v_.empty(); }
    // Point or segment: zero area, but still has a location.
    bool degenerate() const { return v_.size() < 3; }

    ConvexPolygon translated(Point2 t) const {
        ConvexPolygon p = *this;
        for (auto& q : p.v_) q = q + t;
        return p;
    }

    friend bool operator==(const ConvexPolygon&, const ConvexPolygon&) = default;

private:
    std::vector<Point2> v_;
};

inline double polygon_area(const ConvexPolygon& p) {
    const auto& v = p.vertices();
    if (v.size() < 3) return 0.0;
    double a = 0.0;
    for (std::size_t i = 0, n = v.size(); i < n; ++i) a += cross(v[i], v[(i + 1) % n]);
    return std::max(0.0, 0.5 * a);
}

inline double perimeter(const ConvexPolygon& p) {
    const auto& v = p.vertices();
    if (v.size() < 2) return 0.0;
    if (v.size() == 2) return 2.0 * length(v[1] - v[0]);
    double s = 0.0;
    for (std::size_t i = 0, n = v.size(); i < n; ++i) s += length(v[(i + 1) % n] - v[i]);
    return s;
}

inline Point2 vertex_centroid(const ConvexPolygon& p) {
    Point2 c;
    for (const auto& q : p.vertices()) c = c + q;
    return p.empty() ? c : (1.0 / static_cast<double>(p.size())) * c;
}

namespace detail {

// Removes repeated vertices and vertices whose neighbours make them collinear
// (sine of the turn <= kGeomEps), keeping CCW order.
inline std::vector<Point2> simplify_ring(std::vector<Point2> v) {
    auto same = [](Point2 a, Point2 b) { return std::abs(a.x - b.x) <= kGeomEps && std::abs(a.z - b.z) <= kGeomEps; };
    std::vector<Point2> out;
    for (const auto& q : v)
        if (out.empty() || !same(out.back(), q)) out.push_back(q);
    while (out.size() > 1 && same(out.front(), out.back())) out.pop_back();
    bool changed = true;
    while (changed && out.size() >= 3) {
        changed = false;
        for (std::size_t i = 0; i < out.size() && out.size() >= 3; ++i) {
            const std::size_t n = out.size();
            const Point2 a = out[(i + n - 1) % n], b = out[i], c = out[(i + 1) % n];
            if (std::abs(cross(a, b, c)) <= kGeomEps * length(b - a) * length(c - b) && dot(b - a, c - b) >= 0.0) {
                out.erase(out.begin() + static_cast<std::ptrdiff_t>(i));
                changed = true;
            }
        }
    }
    return out;
}

}  // namespace detail

// Andrew's monotone chain. Collinear boundary points are dropped; coincident
// input yields a single-vertex (degenerate) polygon, collinear input a segment.
inline ConvexPolygon convex_hull(std::span<const Point2> points) {
    if (points.empty()) throw Error("convex_hull: no points");
    std::vector<Point2> pts(points.begin(), points.end());
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() == 1) return ConvexPolygon::from_ccw(pts);

    std::vector<Point2> hull(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= kGeomEps) --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= kGeomEps) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    if (hull.size() < 3) {
        // all collinear: keep the two extreme points
        if (hull.size() == 1 || pts.front() == pts.back()) return ConvexPolygon::from_ccw({pts.front()});
        return ConvexPolygon::from_ccw({pts.front(), pts.back()});
    }
    return ConvexPolygon::from_ccw(std::move(hull));
}

inline ConvexPolygon convex_hull(std::initializer_list<Point2> points) {
    return convex_hull(std::span<const Point2>(points.begin(), points.size()));
}

// Regular n-gon with the given circumradius; vertex 0 at angle 0.
inline ConvexPolygon regular_polygon(int n, double circumradius, Point2 center = {}) {
    std::vector<Point2> v;
    v.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double a = 2.0 * std::numbers::pi * k / n;
        v.push_back({center.x + circumradius * std::cos(a), center.z + circumradius * std::sin(a)});
    }
    return ConvexPolygon::from_ccw(std::move(v));
}

// Merged-edge (rotating calipers) Minkowski sum of two convex polygons.
inline ConvexPolygon minkowski_sum(const ConvexPolygon& p, const ConvexPolygon& q) {
    if (p.empty() || q.empty()) throw Error("minkowski_sum: empty operand");
    auto rotate_to_lowest = [](std::vector<Point2> v) {
        auto lowest = std::min_element(v.begin(), v.end(), [](Point2 a, Point2 b) {
            return a.z < b.z || (a.z == b.z && a.x < b.x);
        });
        std::rotate(v.begin(), lowest, v.end());
        return v;
    };
    std::vector<Point2> a = rotate_to_lowest(p.vertices());
    std::vector<Point2> b = rotate_to_lowest(q.vertices());
    const std::size_t n = a.size(), m = b.size();
    a.push_back(a[0]);
    a.push_back(a[1 % n]);
    b.push_back(b[0]);
    b.push_back(b[1 % m]);

    std::vector<Point2> out;
    out.reserve(n + m);
    std::size_t i = 0, j = 0;
    while (i < n || j < m) {
        out.push_back(a[i] + b[j]);
        const double c = cross(a[i + 1] - a[i], b[j + 1] - b[j]);
        if (c >= 0.0 && i < n) ++i;
        if (c <= 0.0 && j < m) ++j;
    }
    return ConvexPolygon::from_ccw(detail::simplify_ring(std::move(out)));
}

inline constexpr int kClearanceSegments = 64;

// Grows p by the disk of radius `clearance`: every edge moves outward by
// exactly `clearance`, and each vertex gets a circular arc split into chords
// of at most 2*pi/64. A point input therefore yields the regular 64-gon.
// clearance == 0 returns p unchanged.
inline ConvexPolygon dilate(const ConvexPolygon& p, double clearance) {
    if (clearance < 0.0) throw Error("dilate: negative clearance");
    if (clearance == 0.0 || p.empty()) return p;
    const auto& v = p.vertices();
    if (v.size() == 1) return regular_polygon(kClearanceSegments, clearance, v[0]);

    const std::size_t n = v.size();
    std::vector<double> normal_angle(n);  // outward normal of edge i -> i+1
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 e = v[(i + 1) % n] - v[i];
        normal_angle[i] = std::atan2(-e.x, e.z);  // normal (e.z, -e.x)
    }
    const double max_step = 2.0 * std::numbers::pi / kClearanceSegments;
    std::vector<Point2> out;
    for (std::size_t i = 0; i < n; ++i) {
        const double start = normal_angle[(i + n - 1) % n];
        double sweep = normal_angle[i] - start;
        while (sweep < 0.0) sweep += 2.0 * std::numbers::pi;
        while (sweep >= 2.0 * std::numbers::pi) sweep -= 2.0 * std::numbers::pi;
        const int segs = std::max(1, static_cast<int>(std::ceil(sweep / max_step - 1e-12)));
        for (int k = 0; k <= segs; ++k) {
            const double a = start + sweep * k / segs;
            out.push_back({v[i].x + clearance * std::cos(a), v[i].z + clearance * std::sin(a)});
        }
    }
    return ConvexPolygon::from_ccw(detail::simplify_ring(std::move(out)));
}

namespace detail {

// Sutherland-Hodgman clip of `subject` by the convex `clip` polygon.
inline std::vector<Point2> clip_convex(const std::vector<Point2>& subject, const std::vector<Point2>& clip) {
    std::vector<Point2> out = subject;
    const std::size_t m = clip.size();
    for (std::size_t e = 0; e < m && !out.empty(); ++e) {
        const Point2 a = clip[e], b = clip[(e + 1) % m];
        std::vector<Point2> in = std::move(out);
        out.clear();
        for (std::size_t i = 0, n = in.size(); i < n; ++i) {
            const Point2 p = in[i], q = in[(i + 1) % n];
            const double sp = cross(a, b, p), sq = cross(a, b, q);
            if (sp >= 0.0) out.push_back(p);
            if ((sp >= 0.0) != (sq >= 0.0)) {
                const double t = sp / (sp - sq);
                out.push_back(p + t * (q - p));
            }
        }
    }
    return out;
}

}  // namespace detail

// Exact (up to rounding) area of p intersect q. The operands are put in a
// canonical order first so the result is bit-identical under swapping.
inline double intersection_area(const ConvexPolygon& p, const ConvexPolygon& q) {
    if (p.degenerate() || q.degenerate()) return 0.0;
    const bool swap = q.vertices() < p.vertices();
    const auto& a = swap ? q : p;
    const auto& b = swap ? p : q;
    const auto clipped = detail::clip_convex(a.vertices(), b.vertices());
    if (clipped.size() < 3) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0, n = clipped.size(); i < n; ++i) s += cross(clipped[i], clipped[(i + 1) % n]);
    return std::max(0.0, 0.5 * s);
}

// Separating-axis test over the edge normals of two convex polygons.
// Projections overlapping by no more than `tol` count as separated.
inline bool separated(const ConvexPolygon& p, const ConvexPolygon& q, double tol = kGeomEps) {
    if (p.empty() || q.empty()) return true;
    auto test_axes = [&](const ConvexPolygon& src) {
        const auto& v = src.vertices();
        const std::size_t n = v.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Point2 e = v[(i + 1) % n] - v[i];
            const double len = length(e);
            if (len <= 0.0) continue;
            const Point2 axis{-e.z / len, e.x / len};
            double pmin = 1e300, pmax = -1e300, qmin = 1e300, qmax = -1e300;
            for (const auto& w : p.vertices()) pmin = std::min(pmin, dot(w, axis)), pmax = std::max(pmax, dot(w, axis));
            for (const auto& w : q.vertices()) qmin = std::min(qmin, dot(w, axis)), qmax = std::max(qmax, dot(w, axis));
            if (std::min(pmax, qmax) - std::max(pmin, qmin) <= tol) return true;
        }
        return false;
    };
    return test_axes(p) || test_axes(q);
}

// Is point inside (or within tol of) the convex polygon.
inline bool contains(const ConvexPolygon& p, Point2 pt, double tol = kGeomEps) {
    const auto& v = p.vertices();
    if (v.size() < 3) return false;
    for (std::size_t i = 0, n = v.size(); i < n; ++i) {
        const Point2 e = v[(i + 1) % n] - v[i];
        if (cross(e, pt - v[i]) < -tol * length(e)) return false;
    }
    return true;
}

// Convex hull of the eight box corners projected onto (x, z).
inline ConvexPolygon footprint(const ObjectInstance& obj) {
    const auto corners = world_corners(obj);
    std::array<Point2, 8> pts;
    for (std::size_t i = 0; i < 8; ++i) pts[i] = {corners[i].x, corners[i].z};
    return convex_hull(std::span<const Point2>(pts));
}

inline Point2 ground(Vec3 v) { return {v.x, v.z}; }

// Center of the footprint's bounding rectangle; equals the box center on the
// ground plane for any rotation.
inline Point2 footprint_center(const ConvexPolygon& p) {
    if (p.empty()) return {};
    double minx = p.vertices()[0].x, maxx = minx, minz = p.vertices()[0].z, maxz = minz;
    for (const auto& q : p.vertices()) {
        minx = std::min(minx, q.x), maxx = std::max(maxx, q.x);
        minz = std::min(minz, q.z), maxz = std::max(maxz, q.z);
    }
    return {0.5 * (minx + maxx), 0.5 * (minz + maxz)};
}

// Radius of the circle around footprint_center that encloses the footprint.
inline double bounding_radius(const ConvexPolygon& p) {
    const Point2 c = footprint_center(p);
    double r = 0.0;
    for (const auto& q : p.vertices()) r = std::max(r, length(q - c));
    return r;
}

}  // namespace ctxplace
