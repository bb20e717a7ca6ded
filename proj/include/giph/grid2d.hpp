#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "giph/io.hpp"

namespace giph {

/// A function R^2 -> R sampled on a square-cell grid, row-major storage.
///
/// The grid is centered so that the unit square [0,1]^2 occupies the middle;
/// node (ix, iy) sits at (x0 + ix*cell, y0 + iy*cell) with
/// x0 = -((w-1)*cell - 1) / 2. Dataset images keep a zero padding ring and
/// values in [-1, 1]; operator outputs may extend outside the unit square.
struct GridFunction2D {
    std::string id;
    int w = 0;
    int h = 0;
    double cell = 1.0;
    std::vector<double> values;  // values[iy * w + ix]

    double x0() const { return -((w - 1) * cell - 1.0) / 2.0; }
    double y0() const { return -((h - 1) * cell - 1.0) / 2.0; }

    double at(int ix, int iy) const { return values[static_cast<std::size_t>(iy) * w + ix]; }
    double& at(int ix, int iy) { return values[static_cast<std::size_t>(iy) * w + ix]; }

    double max_abs() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }
};

inline GridFunction2D make_grid2d(std::string id, int w, int h, double cell) {
    if (w < 2 || h < 2) throw std::invalid_argument("GridFunction2D: grid too small");
    if (!(cell > 0.0)) throw std::invalid_argument("GridFunction2D: cell must be positive");
    GridFunction2D g;
    g.id = std::move(id);
    g.w = w;
    g.h = h;
    g.cell = cell;
    g.values.assign(static_cast<std::size_t>(w) * h, 0.0);
    return g;
}

/// True when the outermost ring is identically zero and values lie in [-1,1].
inline bool grid2d_admissible(const GridFunction2D& g) {
    for (int ix = 0; ix < g.w; ++ix)
        if (g.at(ix, 0) != 0.0 || g.at(ix, g.h - 1) != 0.0) return false;
    for (int iy = 0; iy < g.h; ++iy)
        if (g.at(0, iy) != 0.0 || g.at(g.w - 1, iy) != 0.0) return false;
    for (double v : g.values)
        if (!(v >= -1.0 && v <= 1.0)) return false;
    return true;
}

/// Riemann sum cell^2 * sum(values).
inline double integral(const GridFunction2D& g) {
    double s = 0.0;
    for (double v : g.values) s += v;
    return s * g.cell * g.cell;
}

/// The 8 symmetries of the square grid (rotations by 90 degrees and
/// reflections), exact node permutations. k in [0, 8): low two bits rotate,
/// bit 2 mirrors horizontally first. Requires w == h.
inline GridFunction2D d4_transform(const GridFunction2D& g, int k) {
    if (g.w != g.h) throw std::invalid_argument("d4_transform: grid must be square");
    if (k < 0 || k > 7) throw std::invalid_argument("d4_transform: k must be in [0, 8)");
    int n = g.w;
    GridFunction2D out = g;
    int rot = k & 3;
    bool flip = (k & 4) != 0;
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            int sx = x, sy = y;
            switch (rot) {
                case 0: break;
                case 1: sx = y; sy = n - 1 - x; break;
                case 2: sx = n - 1 - x; sy = n - 1 - y; break;
                case 3: sx = n - 1 - y; sy = x; break;
            }
            if (flip) sx = n - 1 - sx;
            out.at(x, y) = g.at(sx, sy);
        }
    }
    return out;
}

// --- serialization ---------------------------------------------------------

/// One image record: {"id":..., "w":..., "h":..., "cell":..., "values":[...]}.
inline nlohmann::json to_json(const GridFunction2D& g) {
    return nlohmann::json{{"id", g.id}, {"w", g.w}, {"h", g.h}, {"cell", g.cell}, {"values", g.values}};
}

inline GridFunction2D grid2d_from_json(const nlohmann::json& j) {
    for (const char* key : {"id", "w", "h", "cell", "values"})
        if (!j.contains(key)) throw std::invalid_argument(std::string("image record: missing ") + key);
    GridFunction2D g = make_grid2d(j.at("id").get<std::string>(), j.at("w").get<int>(),
                                   j.at("h").get<int>(), j.at("cell").get<double>());
    auto vals = j.at("values").get<std::vector<double>>();
    if (vals.size() != g.values.size())
        throw std::invalid_argument("image record: values length does not match w*h");
    g.values = std::move(vals);
    return g;
}

/// Binary PGM snapshot, [-1, 1] mapped linearly onto [0, 255].
inline void export_pgm(const GridFunction2D& g, const std::string& path) {
    std::string out = "P5\n" + std::to_string(g.w) + " " + std::to_string(g.h) + "\n255\n";
    out.reserve(out.size() + g.values.size());
    for (int iy = g.h - 1; iy >= 0; --iy) {  // top row first
        for (int ix = 0; ix < g.w; ++ix) {
            double v = (g.at(ix, iy) + 1.0) * 0.5 * 255.0;
            int b = static_cast<int>(std::lround(std::clamp(v, 0.0, 255.0)));
            out.push_back(static_cast<char>(b));
        }
    }
    write_file_atomic(path, out);
}

}  // namespace giph
