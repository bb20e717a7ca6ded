#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "giph/grid2d.hpp"
#include "giph/io.hpp"
#include "giph/pl_function.hpp"
#include "giph/rng.hpp"

namespace giph {

// --- 1-d generator -----------------------------------------------------------

/// Random compactly supported piecewise-linear functions on [0, 1]:
/// breakpoints (0,0), (x_1,y_1) ... (x_k,y_k), (1,0) with sorted uniform
/// interior abscissae, uniform ordinates in [-1, 1], and whole-function
/// rejection until the Lipschitz constant is at most lipschitz_cap.
struct GenSpec1D {
    int count = 100;
    std::uint64_t seed = 1;
    int interior_points = 6;
    double lipschitz_cap = 5.0;
    std::string id_prefix = "fn";
};

inline PLFunction generate_one_1d(const GenSpec1D& spec, const std::string& id, Rng& rng) {
    const int k = spec.interior_points;
    for (int attempt = 0; attempt < 100000; ++attempt) {
        std::vector<double> xs(static_cast<std::size_t>(k));
        for (double& x : xs) x = rng.next_double();
        std::sort(xs.begin(), xs.end());
        bool distinct = xs.front() > 1e-9 && xs.back() < 1.0 - 1e-9;
        for (std::size_t i = 0; i + 1 < xs.size() && distinct; ++i)
            if (xs[i + 1] - xs[i] < 1e-9) distinct = false;
        if (!distinct) continue;

        std::vector<Breakpoint> bp;
        bp.reserve(static_cast<std::size_t>(k) + 2);
        bp.push_back({0.0, 0.0});
        for (double x : xs) bp.push_back({x, rng.uniform(-1.0, 1.0)});
        bp.push_back({1.0, 0.0});

        bool ok = true;
        for (std::size_t i = 0; i + 1 < bp.size() && ok; ++i)
            if (std::abs(bp[i + 1].y - bp[i].y) > spec.lipschitz_cap * (bp[i + 1].x - bp[i].x))
                ok = false;
        if (ok) return PLFunction(id, std::move(bp));
    }
    throw std::runtime_error("generate_one_1d: rejection sampling did not converge");
}

inline std::vector<PLFunction> generate_1d(const GenSpec1D& spec) {
    Rng rng(spec.seed);
    std::vector<PLFunction> out;
    out.reserve(static_cast<std::size_t>(spec.count));
    for (int i = 0; i < spec.count; ++i) {
        std::string id = spec.id_prefix + "-" + std::to_string(i);
        out.push_back(generate_one_1d(spec, id, rng));
    }
    return out;
}

// --- 2-d generator -----------------------------------------------------------

/// Random images on the unit square: a sum of raised-cosine bumps
/// h/2 * (1 + cos(pi t / r)) for t = |p - c| <= r, clamped to [0, 1]. The
/// interior holds 128x128 nodes at spacing 1/127; a ring of zero nodes is
/// added around it so the image is admissible and isometries act exactly.
struct GenSpec2D {
    int count = 100;
    std::uint64_t seed = 1;
    int interior = 128;     // nodes per axis covering [0, 1]
    int ring = 8;           // zero-padding nodes per side
    int min_bumps = 3;
    int max_bumps = 6;
    double min_radius = 0.06;
    double max_radius = 0.18;
    double min_height = 0.4;
    double max_height = 1.0;
    std::string id_prefix = "img";
};

inline GridFunction2D generate_one_2d(const GenSpec2D& spec, const std::string& id, Rng& rng) {
    const int side = spec.interior + 2 * spec.ring;
    const double cell = 1.0 / static_cast<double>(spec.interior - 1);
    GridFunction2D img = make_grid2d(id, side, side, cell);

    int bumps = rng.int_range(spec.min_bumps, spec.max_bumps);
    struct Bump {
        double cx, cy, r, h;
    };
    std::vector<Bump> bs(static_cast<std::size_t>(bumps));
    for (auto& b : bs) {
        b.r = rng.uniform(spec.min_radius, spec.max_radius);
        b.h = rng.uniform(spec.min_height, spec.max_height);
        b.cx = rng.uniform(b.r + 0.02, 1.0 - b.r - 0.02);
        b.cy = rng.uniform(b.r + 0.02, 1.0 - b.r - 0.02);
    }
    const double pi = std::numbers::pi;
    for (int iy = 0; iy < side; ++iy) {
        double y = img.y0() + iy * cell;
        for (int ix = 0; ix < side; ++ix) {
            double x = img.x0() + ix * cell;
            double v = 0.0;
            for (const auto& b : bs) {
                double dx = x - b.cx, dy = y - b.cy;
                double t = std::sqrt(dx * dx + dy * dy);
                if (t < b.r) v += b.h * 0.5 * (1.0 + std::cos(pi * t / b.r));
            }
            img.at(ix, iy) = std::min(1.0, std::max(0.0, v));
        }
    }
    return img;
}

inline std::vector<GridFunction2D> generate_2d(const GenSpec2D& spec) {
    Rng rng(spec.seed);
    std::vector<GridFunction2D> out;
    out.reserve(static_cast<std::size_t>(spec.count));
    for (int i = 0; i < spec.count; ++i) {
        std::string id = spec.id_prefix + "-" + std::to_string(i);
        out.push_back(generate_one_2d(spec, id, rng));
    }
    return out;
}

// --- JSONL persistence ---------------------------------------------------------

inline std::string dump_pl_dataset(const std::vector<PLFunction>& fns) {
    std::string out;
    for (const auto& f : fns) out += to_json(f).dump() + "\n";
    return out;
}

inline std::vector<PLFunction> parse_pl_dataset(const std::vector<std::string>& lines,
                                                const std::string& origin) {
    std::vector<PLFunction> fns;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        try {
            fns.push_back(pl_from_json(nlohmann::json::parse(lines[i])));
        } catch (const std::exception& e) {
            throw std::runtime_error(origin + " line " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return fns;
}

inline void save_pl_dataset(const std::string& path, const std::vector<PLFunction>& fns) {
    write_file_atomic(path, dump_pl_dataset(fns));
}

inline std::vector<PLFunction> load_pl_dataset(const std::string& path) {
    return parse_pl_dataset(read_lines(path), path);
}

inline std::string dump_image_dataset(const std::vector<GridFunction2D>& imgs) {
    std::string out;
    for (const auto& g : imgs) out += to_json(g).dump() + "\n";
    return out;
}

inline std::vector<GridFunction2D> parse_image_dataset(const std::vector<std::string>& lines,
                                                       const std::string& origin) {
    std::vector<GridFunction2D> imgs;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        try {
            imgs.push_back(grid2d_from_json(nlohmann::json::parse(lines[i])));
        } catch (const std::exception& e) {
            throw std::runtime_error(origin + " line " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return imgs;
}

inline void save_image_dataset(const std::string& path, const std::vector<GridFunction2D>& imgs) {
    write_file_atomic(path, dump_image_dataset(imgs));
}

inline std::vector<GridFunction2D> load_image_dataset(const std::string& path) {
    return parse_image_dataset(read_lines(path), path);
}

}  // namespace giph
