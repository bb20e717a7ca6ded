#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace giph {

/// Affine change of variable x -> a*x + b on the real line, a != 0.
/// Instances double as group elements for the invariance groups used here:
/// all reparametrizations (a != 0), orientation-preserving (a > 0),
/// isometries (a = +-1), translations (a = 1) and the identity.
struct AffineMap {
    double a = 1.0;
    double b = 0.0;

    AffineMap() = default;
    AffineMap(double a_, double b_) : a(a_), b(b_) {
        if (a == 0.0 || !std::isfinite(a) || !std::isfinite(b))
            throw std::invalid_argument("AffineMap: scale must be finite and non-zero");
    }

    double operator()(double x) const { return a * x + b; }

    /// (this.after(g))(x) == this(g(x)).
    AffineMap after(const AffineMap& g) const { return AffineMap(a * g.a, a * g.b + b); }
    AffineMap inverse() const { return AffineMap(1.0 / a, -b / a); }
};

struct Breakpoint {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Breakpoint&, const Breakpoint&) = default;
};

/// Continuous piecewise-linear function R -> R with compact support.
///
/// Breakpoints have strictly increasing x; the first and last y are 0 so the
/// function extends continuously by zero outside [support_lo, support_hi].
class PLFunction {
public:
    PLFunction(std::string id, std::vector<Breakpoint> pts) : id_(std::move(id)), pts_(std::move(pts)) {
        if (pts_.size() < 2) throw std::invalid_argument("PLFunction: need at least two breakpoints");
        for (const auto& p : pts_) {
            if (!std::isfinite(p.x) || !std::isfinite(p.y))
                throw std::invalid_argument("PLFunction: non-finite breakpoint");
        }
        for (std::size_t i = 1; i < pts_.size(); ++i) {
            if (!(pts_[i - 1].x < pts_[i].x))
                throw std::invalid_argument("PLFunction: breakpoint x must be strictly increasing");
        }
        if (pts_.front().y != 0.0 || pts_.back().y != 0.0)
            throw std::invalid_argument("PLFunction: support endpoints must have value 0");
    }

    explicit PLFunction(std::vector<Breakpoint> pts) : PLFunction(std::string(), std::move(pts)) {}

    /// The zero function, represented on [0, 1].
    static PLFunction zero() { return PLFunction({{0.0, 0.0}, {1.0, 0.0}}); }

    const std::string& id() const { return id_; }
    void set_id(std::string id) { id_ = std::move(id); }
    const std::vector<Breakpoint>& breakpoints() const { return pts_; }

    double support_lo() const { return pts_.front().x; }
    double support_hi() const { return pts_.back().x; }
    double support_width() const { return support_hi() - support_lo(); }

    double operator()(double x) const {
        if (x <= pts_.front().x || x >= pts_.back().x) return 0.0;
        // index of the first breakpoint with bp.x > x; the segment is [i-1, i]
        auto it = std::upper_bound(pts_.begin(), pts_.end(), x,
                                   [](double v, const Breakpoint& bp) { return v < bp.x; });
        std::size_t i = static_cast<std::size_t>(it - pts_.begin());
        const Breakpoint& l = pts_[i - 1];
        const Breakpoint& r = pts_[i];
        if (x == l.x) return l.y;
        double t = (x - l.x) / (r.x - l.x);
        return l.y + t * (r.y - l.y);
    }

    friend bool operator==(const PLFunction& f1, const PLFunction& f2) {
        return f1.pts_ == f2.pts_;
    }

private:
    std::string id_;
    std::vector<Breakpoint> pts_;
};

inline double evaluate(const PLFunction& f, double x) { return f(x); }

/// f o g as an exact PLFunction: breakpoints move to (x - g.b) / g.a and are
/// reversed when g.a < 0. Values are untouched, so the composition introduces
/// no interpolation error.
inline PLFunction compose_affine(const PLFunction& f, const AffineMap& g) {
    const auto& src = f.breakpoints();
    std::vector<Breakpoint> pts(src.size());
    AffineMap inv = g.inverse();
    if (g.a > 0) {
        for (std::size_t i = 0; i < src.size(); ++i) pts[i] = {inv(src[i].x), src[i].y};
    } else {
        for (std::size_t i = 0; i < src.size(); ++i)
            pts[src.size() - 1 - i] = {inv(src[i].x), src[i].y};
    }
    return PLFunction(std::move(pts));
}

/// Exact sup norm of f1 - f2. The difference is piecewise linear with
/// breakpoints contained in the union of both breakpoint sets, so the maximum
/// over those nodes is the true supremum.
inline double sup_distance(const PLFunction& f1, const PLFunction& f2) {
    double m = 0.0;
    for (const auto& p : f1.breakpoints()) m = std::max(m, std::abs(p.y - f2(p.x)));
    for (const auto& p : f2.breakpoints()) m = std::max(m, std::abs(f1(p.x) - p.y));
    return m;
}

/// sup_distance(f1, compose_affine(f2, g)) without building the composition.
/// (f2 o g)(x) equals f2's breakpoint value exactly at x = g^{-1}(x2).
inline double sup_distance_composed(const PLFunction& f1, const PLFunction& f2, const AffineMap& g) {
    double m = 0.0;
    for (const auto& p : f1.breakpoints()) m = std::max(m, std::abs(p.y - f2(g(p.x))));
    double inv_a = 1.0 / g.a;
    for (const auto& p : f2.breakpoints()) {
        double x = (p.x - g.b) * inv_a;
        m = std::max(m, std::abs(f1(x) - p.y));
    }
    return m;
}

inline double sup_norm(const PLFunction& f) {
    double m = 0.0;
    for (const auto& p : f.breakpoints()) m = std::max(m, std::abs(p.y));
    return m;
}

/// Largest slope magnitude over the segments.
inline double lipschitz_constant(const PLFunction& f) {
    const auto& pts = f.breakpoints();
    double m = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        m = std::max(m, std::abs((pts[i].y - pts[i - 1].y) / (pts[i].x - pts[i - 1].x)));
    return m;
}

/// Exact integral over the support (trapezoid rule is exact for PL).
inline double integral(const PLFunction& f) {
    const auto& pts = f.breakpoints();
    double s = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        s += 0.5 * (pts[i].y + pts[i - 1].y) * (pts[i].x - pts[i - 1].x);
    return s;
}

/// Maximum of f over all of R (0 outside the support, hence at least 0).
inline double max_value(const PLFunction& f) {
    double m = 0.0;
    for (const auto& p : f.breakpoints()) m = std::max(m, p.y);
    return m;
}

/// Uniform sampling grid: nodes x0 + i*dx for i in [0, n).
struct Grid1D {
    double x0 = 0.0;
    double dx = 1.0;
    int n = 0;

    double node(int i) const { return x0 + dx * i; }
    double hi() const { return node(n - 1); }
    double cell() const { return dx; }
    friend bool operator==(const Grid1D&, const Grid1D&) = default;
};

inline void validate(const Grid1D& g) {
    if (g.n < 1) throw std::invalid_argument("Grid1D: empty grid");
    if (!(g.dx > 0.0) || !std::isfinite(g.dx) || !std::isfinite(g.x0))
        throw std::invalid_argument("Grid1D: invalid spacing");
}

/// Canonical padded window of f: the support extended by one support width on
/// each side. Quantities defined over all of R are computed on this window.
inline Grid1D padded_grid(const PLFunction& f, int resolution) {
    if (resolution < 2) throw std::invalid_argument("padded_grid: resolution must be >= 2");
    double w = f.support_width();
    double lo = f.support_lo() - w;
    double hi = f.support_hi() + w;
    return Grid1D{lo, (hi - lo) / (resolution - 1), resolution};
}

/// Exact evaluation of f at every grid node.
inline std::vector<double> sample(const PLFunction& f, const Grid1D& grid) {
    validate(grid);
    std::vector<double> out(static_cast<std::size_t>(grid.n));
    for (int i = 0; i < grid.n; ++i) out[static_cast<std::size_t>(i)] = f(grid.node(i));
    return out;
}

/// out[k] += w * f(x0 + k*dx) for k in [0, n). One linear pass over the
/// breakpoints; this is the hot path of operator application.
inline void accumulate_samples(const PLFunction& f, double x0, double dx, int n, double w,
                               double* out) {
    const auto& pts = f.breakpoints();
    const double lo = pts.front().x;
    const double hi = pts.back().x;
    // first node strictly inside the support
    int k = 0;
    if (x0 <= lo) {
        double steps = (lo - x0) / dx;
        k = static_cast<int>(steps) + 1;
        if (k < 0) k = 0;
    }
    std::size_t seg = 1;  // current segment is [seg-1, seg]
    for (; k < n; ++k) {
        double x = x0 + dx * k;
        if (x >= hi) break;
        if (x <= lo) continue;
        while (pts[seg].x <= x) ++seg;
        const Breakpoint& l = pts[seg - 1];
        const Breakpoint& r = pts[seg];
        double t = (x - l.x) / (r.x - l.x);
        out[k] += w * (l.y + t * (r.y - l.y));
    }
}

/// A function sampled on a uniform grid. Evaluation between nodes is linear
/// interpolation; outside the window it clamps to the edge values.
struct Sampled1D {
    Grid1D grid;
    std::vector<double> values;

    double eval(double x) const {
        if (x <= grid.x0) return values.front();
        double t = (x - grid.x0) / grid.dx;
        double fi = std::floor(t);
        int i = static_cast<int>(fi);
        if (i >= grid.n - 1) return values.back();
        double frac = t - fi;
        return values[static_cast<std::size_t>(i)] * (1.0 - frac) +
               values[static_cast<std::size_t>(i) + 1] * frac;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }
};

// --- serialization ---------------------------------------------------------

/// One dataset record: {"id": ..., "breakpoints": [[x, y], ...]}.
inline nlohmann::json to_json(const PLFunction& f) {
    nlohmann::json bps = nlohmann::json::array();
    for (const auto& p : f.breakpoints()) bps.push_back({p.x, p.y});
    return nlohmann::json{{"id", f.id()}, {"breakpoints", std::move(bps)}};
}

inline PLFunction pl_from_json(const nlohmann::json& j) {
    if (!j.contains("id") || !j.contains("breakpoints"))
        throw std::invalid_argument("function record: missing id or breakpoints");
    std::vector<Breakpoint> pts;
    for (const auto& e : j.at("breakpoints")) {
        if (!e.is_array() || e.size() != 2)
            throw std::invalid_argument("function record: breakpoints must be [x, y] pairs");
        pts.push_back({e[0].get<double>(), e[1].get<double>()});
    }
    return PLFunction(j.at("id").get<std::string>(), std::move(pts));
}

}  // namespace giph
