#pragma once

// Minimal 2D vector drawing: primitives in view coordinates (u right, v up),
// serialized to SVG or rasterized to an RGB image / PNG.

#include <cstdint>
#include <cstring>
#include <variant>

#include <zlib.h>

#include "geometry.hpp"

namespace ctxplace {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;

    std::string hex() const {
        char buf[8];
        std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
        return buf;
    }
};

namespace colors {
inline constexpr Rgb white{255, 255, 255};
inline constexpr Rgb black{0, 0, 0};
inline constexpr Rgb outline{51, 51, 51};
inline constexpr Rgb target_fill{255, 236, 179};
inline constexpr Rgb object_fill{221, 221, 221};
inline constexpr Rgb ground_fill{244, 244, 240};
inline constexpr Rgb front_axis{31, 79, 255};  // blue, like a z gizmo
inline constexpr Rgb top_axis{31, 170, 63};    // green, y
inline constexpr Rgb right_axis{224, 32, 32};  // red, x
inline constexpr Rgb circle_free{44, 160, 44};
inline constexpr Rgb circle_hit{214, 39, 40};
inline constexpr Rgb shade_front{244, 163, 163};
inline constexpr Rgb shade_back{163, 184, 244};
}  // namespace colors

struct PolyPrim {
    std::vector<Point2> pts;  // (u, v)
    std::optional<Rgb> fill;
    std::optional<Rgb> stroke;
    double width = 1.0;  // stroke width in pixels
    bool closed = true;
};

struct CirclePrim {
    Point2 center;
    double radius = 0.0;
    Rgb stroke;
    double width = 2.0;
};

struct DotPrim {
    Point2 center;
    double radius_px = 4.0;
    Rgb fill;
};

struct TextPrim {
    Point2 pos;
    std::string text;
    Rgb color;
    double size_px = 12.0;
};

using Prim = std::variant<PolyPrim, CirclePrim, DotPrim, TextPrim>;

struct Drawing {
    std::string name;    // e.g. "top", "side_px"
    std::string u_axis;  // world direction shown to the right, e.g. "+x"
    std::string v_axis;  // world direction shown up
    std::vector<Prim> prims;
};

struct Viewport {
    double u0 = -1, u1 = 1, v0 = -1, v1 = 1;
    int width = 512, height = 512;

    double scale() const { return width / (u1 - u0); }
    double px(double u) const { return (u - u0) * scale(); }
    double py(double v) const { return (v1 - v) * scale(); }
};

// World-unit bounds of everything drawn, padded by 8% (min 0.05) on each side.
inline Viewport fit_viewport(const Drawing& d, int width_px) {
    double u0 = 1e300, u1 = -1e300, v0 = 1e300, v1 = -1e300;
    auto add = [&](Point2 p, double r) {
        u0 = std::min(u0, p.x - r), u1 = std::max(u1, p.x + r);
        v0 = std::min(v0, p.z - r), v1 = std::max(v1, p.z + r);
    };
    for (const auto& prim : d.prims) {
        if (const auto* p = std::get_if<PolyPrim>(&prim))
            for (const auto& q : p->pts) add(q, 0);
        else if (const auto* c = std::get_if<CirclePrim>(&prim))
            add(c->center, c->radius);
        else if (const auto* dot = std::get_if<DotPrim>(&prim))
            add(dot->center, 0);
        else if (const auto* t = std::get_if<TextPrim>(&prim))
            add(t->pos, 0);
    }
    if (u0 > u1) u0 = -1, u1 = 1, v0 = -1, v1 = 1;
    const double span = std::max({u1 - u0, v1 - v0, 1e-3});
    const double pad = std::max(0.08 * span, 0.05);
    Viewport vp;
    vp.u0 = u0 - pad, vp.u1 = u1 + pad, vp.v0 = v0 - pad, vp.v1 = v1 + pad;
    vp.width = width_px;
    vp.height = std::max(1, static_cast<int>(std::lround(width_px * (vp.v1 - vp.v0) / (vp.u1 - vp.u0))));
    return vp;
}

// ---------------------------------------------------------------------- SVG

namespace detail {

inline std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace detail

inline std::string to_svg(const Drawing& d, int width_px = 640) {
    const Viewport vp = fit_viewport(d, width_px);
    auto f = [](double v) { return fixed(v, 2); };
    std::string s;
    s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(vp.width) + "\" height=\"" +
         std::to_string(vp.height) + "\" viewBox=\"0 0 " + std::to_string(vp.width) + " " + std::to_string(vp.height) +
         "\">\n";
    s += "<!-- view=" + detail::xml_escape(d.name) + " right=" + d.u_axis + " up=" + d.v_axis + " -->\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    for (const auto& prim : d.prims) {
        if (const auto* p = std::get_if<PolyPrim>(&prim)) {
            s += p->closed ? "<polygon points=\"" : "<polyline points=\"";
            for (std::size_t i = 0; i < p->pts.size(); ++i) {
                if (i) s += ' ';
                s += f(vp.px(p->pts[i].x)) + "," + f(vp.py(p->pts[i].z));
            }
            s += "\" fill=\"" + (p->fill ? p->fill->hex() : std::string("none")) + "\"";
            if (p->stroke) s += " stroke=\"" + p->stroke->hex() + "\" stroke-width=\"" + f(p->width) + "\"";
            s += "/>\n";
        } else if (const auto* c = std::get_if<CirclePrim>(&prim)) {
            s += "<circle cx=\"" + f(vp.px(c->center.x)) + "\" cy=\"" + f(vp.py(c->center.z)) + "\" r=\"" +
                 f(c->radius * vp.scale()) + "\" fill=\"none\" stroke=\"" + c->stroke.hex() + "\" stroke-width=\"" +
                 f(c->width) + "\"/>\n";
        } else if (const auto* dot = std::get_if<DotPrim>(&prim)) {
            s += "<circle cx=\"" + f(vp.px(dot->center.x)) + "\" cy=\"" + f(vp.py(dot->center.z)) + "\" r=\"" +
                 f(dot->radius_px) + "\" fill=\"" + dot->fill.hex() + "\"/>\n";
        } else if (const auto* t = std::get_if<TextPrim>(&prim)) {
            s += "<text x=\"" + f(vp.px(t->pos.x)) + "\" y=\"" + f(vp.py(t->pos.z)) +
                 "\" font-family=\"monospace\" font-size=\"" + f(t->size_px) +
                 "\" text-anchor=\"middle\" dominant-baseline=\"central\" fill=\"" + t->color.hex() + "\">" +
                 detail::xml_escape(t->text) + "</text>\n";
        }
    }
    s += "</svg>\n";
    return s;
}

// ------------------------------------------------------------------- raster

struct Image {
    int width = 0, height = 0;
    std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

    Image(int w, int h, Rgb bg = colors::white) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3) {
        for (std::size_t i = 0; i < rgb.size(); i += 3) rgb[i] = bg.r, rgb[i + 1] = bg.g, rgb[i + 2] = bg.b;
    }
    Rgb at(int x, int y) const {
        const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
        return {rgb[i], rgb[i + 1], rgb[i + 2]};
    }
    void set(int x, int y, Rgb c) {
        if (x < 0 || y < 0 || x >= width || y >= height) return;
        const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
        rgb[i] = c.r, rgb[i + 1] = c.g, rgb[i + 2] = c.b;
    }
};

namespace detail {

// Even-odd scanline fill sampled at pixel centers.
inline void fill_polygon(Image& img, const std::vector<Point2>& px, Rgb c) {
    if (px.size() < 3) return;
    double ymin = 1e300, ymax = -1e300;
    for (const auto& p : px) ymin = std::min(ymin, p.z), ymax = std::max(ymax, p.z);
    const int y0 = std::max(0, static_cast<int>(std::floor(ymin))), y1 = std::min(img.height - 1, static_cast<int>(std::ceil(ymax)));
    std::vector<double> xs;
    for (int y = y0; y <= y1; ++y) {
        const double sy = y + 0.5;
        xs.clear();
        for (std::size_t i = 0, n = px.size(); i < n; ++i) {
            const Point2 a = px[i], b = px[(i + 1) % n];
            if ((a.z <= sy) != (b.z <= sy)) xs.push_back(a.x + (sy - a.z) * (b.x - a.x) / (b.z - a.z));
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
            const int xa = std::max(0, static_cast<int>(std::ceil(xs[k] - 0.5)));
            const int xb = std::min(img.width - 1, static_cast<int>(std::floor(xs[k + 1] - 0.5)));
            for (int x = xa; x <= xb; ++x) img.set(x, y, c);
        }
    }
}

inline void draw_segment(Image& img, Point2 a, Point2 b, double width, Rgb c) {
    const Point2 d = b - a;
    const double len = length(d);
    const double hw = std::max(0.5, width / 2);
    if (len < 1e-9) {
        fill_polygon(img, {{a.x - hw, a.z - hw}, {a.x + hw, a.z - hw}, {a.x + hw, a.z + hw}, {a.x - hw, a.z + hw}}, c);
        return;
    }
    const Point2 n{-d.z / len * hw, d.x / len * hw};
    fill_polygon(img, {a + n, b + n, b - n, a - n}, c);
}

inline void draw_ring(Image& img, Point2 center, double r, double width, Rgb c, bool filled) {
    const double outer = r + width / 2, inner = filled ? -1.0 : std::max(0.0, r - width / 2);
    const int x0 = std::max(0, static_cast<int>(center.x - outer - 1)), x1 = std::min(img.width - 1, static_cast<int>(center.x + outer + 1));
    const int y0 = std::max(0, static_cast<int>(center.z - outer - 1)), y1 = std::min(img.height - 1, static_cast<int>(center.z + outer + 1));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double dd = std::hypot(x + 0.5 - center.x, y + 0.5 - center.z);
            if (dd <= outer && dd >= inner) img.set(x, y, c);
        }
}

// 3x5 bitmap digits (plus '-' and '.'); rows top to bottom, bit 2 = left column.
inline const std::uint8_t* glyph(char ch) {
    static constexpr std::uint8_t digits[10][5] = {
        {7, 5, 5, 5, 7}, {2, 6, 2, 2, 7}, {7, 1, 7, 4, 7}, {7, 1, 7, 1, 7}, {5, 5, 7, 1, 1},
        {7, 4, 7, 1, 7}, {7, 4, 7, 5, 7}, {7, 1, 1, 1, 1}, {7, 5, 7, 5, 7}, {7, 5, 7, 1, 7},
    };
    static constexpr std::uint8_t minus[5] = {0, 0, 7, 0, 0};
    static constexpr std::uint8_t dot[5] = {0, 0, 0, 0, 2};
    if (ch >= '0' && ch <= '9') return digits[ch - '0'];
    if (ch == '-') return minus;
    if (ch == '.') return dot;
    return nullptr;
}

// Only digits, '-' and '.' are drawn; other characters leave a gap.
inline void draw_text(Image& img, Point2 center, const std::string& text, double size_px, Rgb c) {
    const int cell = std::max(1, static_cast<int>(size_px / 5));
    const double total_w = static_cast<double>(text.size()) * 4 * cell - cell;
    double x = center.x - total_w / 2;
    const double y = center.z - 2.5 * cell;
    for (char ch : text) {
        if (const auto* g = glyph(ch))
            for (int row = 0; row < 5; ++row)
                for (int col = 0; col < 3; ++col)
                    if (g[row] & (4 >> col))
                        for (int dy = 0; dy < cell; ++dy)
                            for (int dx = 0; dx < cell; ++dx)
                                img.set(static_cast<int>(x) + col * cell + dx, static_cast<int>(y) + row * cell + dy, c);
        x += 4 * cell;
    }
}

}  // namespace detail

inline Image rasterize(const Drawing& d, int width_px = 512) {
    const Viewport vp = fit_viewport(d, width_px);
    Image img(vp.width, vp.height);
    auto P = [&](Point2 p) { return Point2{vp.px(p.x), vp.py(p.z)}; };
    for (const auto& prim : d.prims) {
        if (const auto* p = std::get_if<PolyPrim>(&prim)) {
            std::vector<Point2> px;
            for (const auto& q : p->pts) px.push_back(P(q));
            if (p->fill && p->closed) detail::fill_polygon(img, px, *p->fill);
            if (p->stroke) {
                const std::size_t n = px.size();
                for (std::size_t i = 0; i + (p->closed ? 0 : 1) < n; ++i)
                    detail::draw_segment(img, px[i], px[(i + 1) % n], p->width, *p->stroke);
            }
        } else if (const auto* c = std::get_if<CirclePrim>(&prim)) {
            detail::draw_ring(img, P(c->center), c->radius * vp.scale(), c->width, c->stroke, false);
        } else if (const auto* dot = std::get_if<DotPrim>(&prim)) {
            detail::draw_ring(img, P(dot->center), dot->radius_px, 0, dot->fill, true);
        } else if (const auto* t = std::get_if<TextPrim>(&prim)) {
            detail::draw_text(img, P(t->pos), t->text, t->size_px, t->color);
        }
    }
    return img;
}

// ---------------------------------------------------------------------- PNG

namespace detail {

inline void put_be32(std::string& out, std::uint32_t v) {
    out += static_cast<char>((v >> 24) & 0xff);
    out += static_cast<char>((v >> 16) & 0xff);
    out += static_cast<char>((v >> 8) & 0xff);
    out += static_cast<char>(v & 0xff);
}

inline void put_chunk(std::string& out, const char* type, const std::string& data) {
    put_be32(out, static_cast<std::uint32_t>(data.size()));
    std::string body(type, 4);
    body += data;
    out += body;
    put_be32(out, static_cast<std::uint32_t>(
                      crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()))));
}

}  // namespace detail

// 8-bit RGB, no interlace, filter type 0 on every row.
inline std::string encode_png(const Image& img) {
    std::string raw;
    raw.reserve(static_cast<std::size_t>(img.height) * (1 + img.width * 3));
    for (int y = 0; y < img.height; ++y) {
        raw += '\0';
        raw.append(reinterpret_cast<const char*>(img.rgb.data()) + static_cast<std::size_t>(y) * img.width * 3,
                   static_cast<std::size_t>(img.width) * 3);
    }
    uLongf len = compressBound(static_cast<uLong>(raw.size()));
    std::string z(len, '\0');
    if (compress2(reinterpret_cast<Bytef*>(z.data()), &len, reinterpret_cast<const Bytef*>(raw.data()),
                  static_cast<uLong>(raw.size()), 9) != Z_OK)
        throw Error("png: compression failed");
    z.resize(len);

    std::string out("\x89PNG\r\n\x1a\n", 8);
    std::string ihdr;
    detail::put_be32(ihdr, static_cast<std::uint32_t>(img.width));
    detail::put_be32(ihdr, static_cast<std::uint32_t>(img.height));
    ihdr += std::string("\x08\x02\x00\x00\x00", 5);
    detail::put_chunk(out, "IHDR", ihdr);
    detail::put_chunk(out, "IDAT", z);
    detail::put_chunk(out, "IEND", "");
    return out;
}

}  // namespace ctxplace
