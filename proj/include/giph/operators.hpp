#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "giph/grid2d.hpp"
#include "giph/pl_function.hpp"
#include "giph/rng.hpp"

namespace giph {

// --- invariance groups ------------------------------------------------------

/// G1: all affine reparametrizations (a != 0); G2: orientation-preserving
/// (a > 0); G3: isometries (a = +-1); G4: translations (a = 1); G5: identity
/// only. ISO2: isometries of the plane (for grid images, realized exactly by
/// the 8 square symmetries).
enum class Group { G1, G2, G3, G4, G5, ISO2 };

inline std::string_view group_name(Group g) {
    switch (g) {
        case Group::G1: return "G1";
        case Group::G2: return "G2";
        case Group::G3: return "G3";
        case Group::G4: return "G4";
        case Group::G5: return "G5";
        case Group::ISO2: return "ISO2";
    }
    return "?";
}

inline Group group_from_name(std::string_view s) {
    for (Group g : {Group::G1, Group::G2, Group::G3, Group::G4, Group::G5, Group::ISO2})
        if (group_name(g) == s) return g;
    throw std::invalid_argument("unknown group: " + std::string(s));
}

/// Membership test: is the affine map an element of the group?
inline bool group_contains(Group g, const AffineMap& m) {
    switch (g) {
        case Group::G1: return m.a != 0.0;
        case Group::G2: return m.a > 0.0;
        case Group::G3: return m.a == 1.0 || m.a == -1.0;
        case Group::G4: return m.a == 1.0;
        case Group::G5: return m.a == 1.0 && m.b == 0.0;
        case Group::ISO2: return false;  // not represented by 1-d affine maps
    }
    return false;
}

// --- operator descriptors ---------------------------------------------------

enum class OpKind {
    Pointwise,
    ShiftCombine,
    AffineSup,
    OrientedAffineSup,
    MultiplicativeProfile,
    Convolution2D,
    ConstantIntegral,
    NegationWrapper,
};

inline std::string_view kind_name(OpKind k) {
    switch (k) {
        case OpKind::Pointwise: return "pointwise";
        case OpKind::ShiftCombine: return "shift-combine";
        case OpKind::AffineSup: return "affine-sup";
        case OpKind::OrientedAffineSup: return "oriented-affine-sup";
        case OpKind::MultiplicativeProfile: return "multiplicative-profile";
        case OpKind::Convolution2D: return "convolution-2d";
        case OpKind::ConstantIntegral: return "constant-integral";
        case OpKind::NegationWrapper: return "negation-wrapper";
    }
    return "?";
}

inline OpKind kind_from_name(std::string_view s) {
    for (OpKind k : {OpKind::Pointwise, OpKind::ShiftCombine, OpKind::AffineSup,
                     OpKind::OrientedAffineSup, OpKind::MultiplicativeProfile, OpKind::Convolution2D,
                     OpKind::ConstantIntegral, OpKind::NegationWrapper})
        if (kind_name(k) == s) return k;
    throw std::invalid_argument("unknown operator kind: " + std::string(s));
}

struct Operator;

/// F(phi) = scale * phi + offset with |scale| <= 1; constants commute with
/// reparametrization, so the operator is equivariant under every group.
struct PointwiseParams {
    double scale = 1.0;
    double offset = 0.0;
    friend bool operator==(const PointwiseParams&, const PointwiseParams&) = default;
};

/// F(phi)(x) = combine_j phi(x + shifts[j]); combine is max or a weighted sum
/// with sum |weights| <= 1.
struct ShiftCombineParams {
    bool use_max = false;
    std::vector<double> shifts;
    std::vector<double> weights;  // empty when use_max
    friend bool operator==(const ShiftCombineParams&, const ShiftCombineParams&) = default;
};

/// F(phi)(x) = sup_r sum_i weights[i] * phi(x + r * centers[i]), with
/// sum |weights| <= 1 and centers > 0. The plain kind takes r over all of R,
/// the oriented kind over r >= 0.
struct AffineSupParams {
    std::vector<double> weights;
    std::vector<double> centers;
    friend bool operator==(const AffineSupParams&, const AffineSupParams&) = default;
};

/// F(phi)(x) = scale * (phi(x) + offset) * p(x) where p is sin(freq * x) when
/// sin_freq != 0, otherwise a sum of Gaussians exp(-((x-mu)/sigma)^2).
/// Non-expansiveness requires |scale * p| <= 1.
struct MultiplicativeParams {
    double scale = 1.0;
    double offset = 0.0;
    double sin_freq = 0.0;
    std::vector<double> gauss_mu;
    double gauss_sigma = 0.1;
    friend bool operator==(const MultiplicativeParams&, const MultiplicativeParams&) = default;
};

/// Convolution with a radially symmetric piecewise-constant kernel:
/// beta(t) = levels[j] for radii[j-1] < t <= radii[j], 0 beyond the last
/// radius. The rasterized weights are renormalized so their absolute sum is
/// at most 1, which keeps the discrete operator non-expansive.
struct RadialKernelParams {
    std::vector<double> radii;   // strictly increasing, > 0
    std::vector<double> levels;  // same length
    friend bool operator==(const RadialKernelParams&, const RadialKernelParams&) = default;
};

/// F(phi) = the constant function with value (a quadrature of) integral(phi).
struct ConstantIntegralParams {
    friend bool operator==(const ConstantIntegralParams&, const ConstantIntegralParams&) = default;
};

/// F(phi) = -inner(phi).
struct NegationParams {
    std::shared_ptr<const Operator> inner;
    friend bool operator==(const NegationParams& a, const NegationParams& b);
};

using OpParams = std::variant<PointwiseParams, ShiftCombineParams, AffineSupParams,
                              MultiplicativeParams, RadialKernelParams, ConstantIntegralParams,
                              NegationParams>;

/// Executable operator descriptor. `group` is the broadest invariance group
/// the operator is equivariant under; a G1 operator is reusable for every
/// subgroup of G1.
struct Operator {
    std::string name;
    Group group = Group::G1;
    OpKind kind = OpKind::Pointwise;
    OpParams params;

    friend bool operator==(const Operator& a, const Operator& b) {
        return a.name == b.name && a.group == b.group && a.kind == b.kind && a.params == b.params;
    }
};

inline bool operator==(const NegationParams& a, const NegationParams& b) {
    if (!a.inner || !b.inner) return a.inner == b.inner;
    return *a.inner == *b.inner;
}

// --- r grid for the affine-sup families --------------------------------------

/// Log lattice of candidate |r| values: powers of q = 2^(3/64), exponents
/// 3k/64 with k in [-256, 128], i.e. [2^-12, 64]. Reaching down to 2^-12
/// keeps the cost of truncating the supremum near r = 0 below
/// C * max(centers) * 2^-12. Because the lattice is
/// closed under multiplication by q^k, rescaling a function by q^k permutes
/// the candidate set, which keeps the discretized operators equivariant under
/// those scales.
inline const std::vector<double>& r_lattice_two_sided() {
    static const std::vector<double> grid = [] {
        std::vector<double> g;
        g.push_back(0.0);
        for (int k = -256; k <= 128; ++k) {
            double r = std::exp2(3.0 * k / 64.0);
            g.push_back(r);
            g.push_back(-r);
        }
        return g;
    }();
    return grid;
}

inline const std::vector<double>& r_lattice_oriented() {
    static const std::vector<double> grid = [] {
        std::vector<double> g;
        g.push_back(0.0);
        for (int k = -256; k <= 128; ++k) g.push_back(std::exp2(3.0 * k / 64.0));
        return g;
    }();
    return grid;
}

// --- application -------------------------------------------------------------

struct ApplyOptions {
    int resolution = 1024;
    const Grid1D* window = nullptr;       // override the padded window of the input
    std::span<const double> r_grid = {};  // override the builtin r lattice
};

namespace detail {

inline double profile_value(const MultiplicativeParams& p, double x) {
    if (p.sin_freq != 0.0) return std::sin(p.sin_freq * x);
    double s = 0.0;
    for (double mu : p.gauss_mu) {
        double t = (x - mu) / p.gauss_sigma;
        s += std::exp(-t * t);
    }
    return s;
}

inline void apply_affine_sup(const AffineSupParams& p, bool oriented, const PLFunction& f,
                             const Grid1D& grid, std::span<const double> r_grid,
                             std::vector<double>& out) {
    std::span<const double> rs =
        !r_grid.empty() ? r_grid
                        : std::span<const double>(oriented ? r_lattice_oriented() : r_lattice_two_sided());
    const std::size_t n = static_cast<std::size_t>(grid.n);
    out.assign(n, -std::numeric_limits<double>::infinity());
    std::vector<double> tmp(n);
    for (double r : rs) {
        if (oriented && r < 0.0) continue;
        std::fill(tmp.begin(), tmp.end(), 0.0);
        for (std::size_t i = 0; i < p.weights.size(); ++i)
            accumulate_samples(f, grid.x0 + r * p.centers[i], grid.dx, grid.n, p.weights[i],
                               tmp.data());
        for (std::size_t k = 0; k < n; ++k) out[k] = std::max(out[k], tmp[k]);
    }
}

}  // namespace detail

/// Applies a 1-d operator. The input is evaluated exactly (it is piecewise
/// linear); only the output is sampled, on the input's padded window unless
/// options.window overrides it.
inline Sampled1D apply_1d(const Operator& op, const PLFunction& f, const ApplyOptions& opts = {}) {
    Grid1D grid = opts.window ? *opts.window : padded_grid(f, opts.resolution);
    validate(grid);
    Sampled1D out{grid, {}};
    const std::size_t n = static_cast<std::size_t>(grid.n);

    switch (op.kind) {
        case OpKind::Pointwise: {
            const auto& p = std::get<PointwiseParams>(op.params);
            out.values = sample(f, grid);
            if (p.scale != 1.0 || p.offset != 0.0)
                for (double& v : out.values) v = p.scale * v + p.offset;
            return out;
        }
        case OpKind::ShiftCombine: {
            const auto& p = std::get<ShiftCombineParams>(op.params);
            if (p.use_max) {
                out.values.assign(n, -std::numeric_limits<double>::infinity());
                std::vector<double> tmp(n);
                for (double s : p.shifts) {
                    std::fill(tmp.begin(), tmp.end(), 0.0);
                    accumulate_samples(f, grid.x0 + s, grid.dx, grid.n, 1.0, tmp.data());
                    for (std::size_t k = 0; k < n; ++k) out.values[k] = std::max(out.values[k], tmp[k]);
                }
            } else {
                out.values.assign(n, 0.0);
                for (std::size_t j = 0; j < p.shifts.size(); ++j)
                    accumulate_samples(f, grid.x0 + p.shifts[j], grid.dx, grid.n, p.weights[j],
                                       out.values.data());
            }
            return out;
        }
        case OpKind::AffineSup:
        case OpKind::OrientedAffineSup: {
            const auto& p = std::get<AffineSupParams>(op.params);
            detail::apply_affine_sup(p, op.kind == OpKind::OrientedAffineSup, f, grid, opts.r_grid,
                                     out.values);
            return out;
        }
        case OpKind::MultiplicativeProfile: {
            const auto& p = std::get<MultiplicativeParams>(op.params);
            out.values.resize(n);
            for (std::size_t k = 0; k < n; ++k) {
                double x = grid.node(static_cast<int>(k));
                out.values[k] = p.scale * (f(x) + p.offset) * detail::profile_value(p, x);
            }
            return out;
        }
        case OpKind::NegationWrapper: {
            const auto& p = std::get<NegationParams>(op.params);
            out = apply_1d(*p.inner, f, opts);
            for (double& v : out.values) v = -v;
            return out;
        }
        default:
            throw std::invalid_argument("apply_1d: operator '" + op.name +
                                        "' does not act on 1-d functions");
    }
}

namespace detail {

/// Number of grid nodes per axis whose coordinate lies in [0, 1]; used to
/// normalize the integral quadrature so it is non-expansive on functions
/// supported in the unit square.
inline int nodes_in_unit_interval(int n, double x0, double cell) {
    int count = 0;
    for (int i = 0; i < n; ++i) {
        double x = x0 + i * cell;
        if (x >= -1e-12 && x <= 1.0 + 1e-12) ++count;
    }
    return count;
}

inline GridFunction2D apply_convolution(const RadialKernelParams& p, const GridFunction2D& g) {
    const int w = g.w, h = g.h;
    const double cell = g.cell;
    const std::size_t m = p.radii.size();

    // disk decomposition: beta = sum_j d_j * indicator(|y| <= radii[j])
    std::vector<double> disk_coeff(m);
    for (std::size_t j = 0; j < m; ++j)
        disk_coeff[j] = p.levels[j] - (j + 1 < m ? p.levels[j + 1] : 0.0);

    std::vector<double> q(m);  // squared pixel radii
    for (std::size_t j = 0; j < m; ++j) {
        double pr = p.radii[j] / cell;
        q[j] = pr * pr;
    }
    int bound = static_cast<int>(std::floor(std::sqrt(q[m - 1]))) + 1;

    // rasterized absolute mass, for the non-expansiveness renormalization
    double abs_mass = 0.0;
    for (int dy = -bound; dy <= bound; ++dy) {
        for (int dx = -bound; dx <= bound; ++dx) {
            double r2 = static_cast<double>(dx) * dx + static_cast<double>(dy) * dy;
            for (std::size_t j = 0; j < m; ++j) {
                if (r2 <= q[j]) {
                    abs_mass += std::abs(p.levels[j]);
                    break;
                }
            }
        }
    }
    abs_mass *= cell * cell;
    double scale = abs_mass > 1.0 ? 1.0 / abs_mass : 1.0;

    // per-row prefix sums: P[y][x+1] = sum of row y up to column x
    std::vector<double> prefix(static_cast<std::size_t>(h) * (w + 1), 0.0);
    for (int y = 0; y < h; ++y) {
        double acc = 0.0;
        std::size_t base = static_cast<std::size_t>(y) * (w + 1);
        for (int x = 0; x < w; ++x) {
            acc += g.at(x, y);
            prefix[base + x + 1] = acc;
        }
    }
    auto row_sum = [&](int y, int xlo, int xhi) {  // inclusive column range, clamped
        if (y < 0 || y >= h || xhi < 0 || xlo >= w) return 0.0;
        xlo = std::max(xlo, 0);
        xhi = std::min(xhi, w - 1);
        std::size_t base = static_cast<std::size_t>(y) * (w + 1);
        return prefix[base + xhi + 1] - prefix[base + xlo];
    };

    // half-widths per disk and |dy|
    std::vector<std::vector<int>> half(m);
    for (std::size_t j = 0; j < m; ++j) {
        int rj = static_cast<int>(std::floor(std::sqrt(q[j])));
        half[j].assign(static_cast<std::size_t>(rj) + 1, 0);
        for (int dy = 0; dy <= rj; ++dy) {
            double rem = q[j] - static_cast<double>(dy) * dy;
            int dx = rem >= 0.0 ? static_cast<int>(std::floor(std::sqrt(rem))) : -1;
            while (dx >= 0 && static_cast<double>(dx) * dx + static_cast<double>(dy) * dy > q[j]) --dx;
            while (static_cast<double>(dx + 1) * (dx + 1) + static_cast<double>(dy) * dy <= q[j]) ++dx;
            half[j][static_cast<std::size_t>(dy)] = dx;
        }
    }

    GridFunction2D out = make_grid2d(g.id, w, h, cell);
    const double unit = scale * cell * cell;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                int rj = static_cast<int>(half[j].size()) - 1;
                double disk = 0.0;
                for (int dy = -rj; dy <= rj; ++dy) {
                    int hw = half[j][static_cast<std::size_t>(std::abs(dy))];
                    if (hw >= 0) disk += row_sum(y + dy, x - hw, x + hw);
                }
                acc += disk_coeff[j] * disk;
            }
            out.at(x, y) = unit * acc;
        }
    }
    return out;
}

}  // namespace detail

/// Applies a 2-d operator; the output lives on the same grid as the input.
inline GridFunction2D apply_2d(const Operator& op, const GridFunction2D& g) {
    switch (op.kind) {
        case OpKind::Pointwise: {
            const auto& p = std::get<PointwiseParams>(op.params);
            GridFunction2D out = g;
            if (p.scale != 1.0 || p.offset != 0.0)
                for (double& v : out.values) v = p.scale * v + p.offset;
            return out;
        }
        case OpKind::ConstantIntegral: {
            int nx = detail::nodes_in_unit_interval(g.w, g.x0(), g.cell);
            int ny = detail::nodes_in_unit_interval(g.h, g.y0(), g.cell);
            double footprint = g.cell * g.cell * nx * ny;
            double scale = footprint > 1.0 ? 1.0 / footprint : 1.0;
            double v = scale * integral(g);
            GridFunction2D out = make_grid2d(g.id, g.w, g.h, g.cell);
            std::fill(out.values.begin(), out.values.end(), v);
            return out;
        }
        case OpKind::Convolution2D: {
            const auto& p = std::get<RadialKernelParams>(op.params);
            return detail::apply_convolution(p, g);
        }
        case OpKind::NegationWrapper: {
            const auto& p = std::get<NegationParams>(op.params);
            GridFunction2D out = apply_2d(*p.inner, g);
            for (double& v : out.values) v = -v;
            return out;
        }
        default:
            throw std::invalid_argument("apply_2d: operator '" + op.name +
                                        "' does not act on grid images");
    }
}

inline bool is_2d_kind(const Operator& op) {
    if (op.kind == OpKind::Convolution2D || op.kind == OpKind::ConstantIntegral) return true;
    if (op.kind == OpKind::NegationWrapper)
        return is_2d_kind(*std::get<NegationParams>(op.params).inner);
    return op.group == Group::ISO2;
}

// --- builtin sets ------------------------------------------------------------

namespace detail {

inline Operator make_affine_sup(std::string name, Group g, bool oriented, std::vector<double> w,
                                std::vector<double> c) {
    return Operator{std::move(name), g, oriented ? OpKind::OrientedAffineSup : OpKind::AffineSup,
                    AffineSupParams{std::move(w), std::move(c)}};
}

inline Operator make_shift_avg(std::string name, Group g, std::vector<double> shifts) {
    std::vector<double> w(shifts.size(), 1.0 / static_cast<double>(shifts.size()));
    return Operator{std::move(name), g, OpKind::ShiftCombine,
                    ShiftCombineParams{false, std::move(shifts), std::move(w)}};
}

inline Operator make_shift_max(std::string name, Group g, std::vector<double> shifts) {
    return Operator{std::move(name), g, OpKind::ShiftCombine,
                    ShiftCombineParams{true, std::move(shifts), {}}};
}

inline Operator negate_op(std::string name, const Operator& inner) {
    return Operator{std::move(name), inner.group, OpKind::NegationWrapper,
                    NegationParams{std::make_shared<Operator>(inner)}};
}

}  // namespace detail

/// The builtin operator families. Each operator is tagged with the broadest
/// group it is equivariant under; since the groups are nested
/// (G5 c G4 c G3 c G1 and G2 c G1), the set for a subgroup reuses every
/// operator of its supergroups and adds its own.
inline std::vector<Operator> builtin_set(Group g) {
    using detail::make_affine_sup;
    using detail::make_shift_avg;
    using detail::make_shift_max;

    auto g1 = [] {
        std::vector<Operator> ops;
        ops.push_back({"F1a", Group::G1, OpKind::Pointwise, PointwiseParams{1.0}});
        ops.push_back({"F1b", Group::G1, OpKind::Pointwise, PointwiseParams{-1.0}});
        ops.push_back(make_affine_sup("F1c", Group::G1, false, {0.3, 0.4, 0.3}, {0.3, 0.6, 0.9}));
        ops.push_back(make_affine_sup("F1d", Group::G1, false, {-0.3, 0.4, -0.3}, {0.3, 0.6, 0.9}));
        ops.push_back(make_affine_sup("F1e", Group::G1, false, {-0.2, 0.2, -0.2, 0.2, -0.2},
                                      {0.2, 0.4, 0.6, 0.8, 1.0}));
        return ops;
    };

    switch (g) {
        case Group::G1:
            return g1();
        case Group::G2: {
            std::vector<Operator> ops;
            auto base = g1();
            ops.push_back(base[0]);  // F1a
            ops.push_back(base[1]);  // F1b
            ops.push_back(make_affine_sup("F2a", Group::G2, true, {0.3, 0.4, 0.3}, {0.3, 0.6, 0.9}));
            ops.push_back(make_affine_sup("F2b", Group::G2, true, {-0.3, 0.4, -0.3}, {0.3, 0.6, 0.9}));
            ops.push_back(make_affine_sup("F2c", Group::G2, true, {-0.2, 0.2, -0.2, 0.2, -0.2},
                                          {0.2, 0.4, 0.6, 0.8, 1.0}));
            ops.push_back(make_affine_sup("F2d", Group::G2, true, {0.2, -0.2, 0.2, -0.2, 0.2},
                                          {0.2, 0.4, 0.6, 0.8, 1.0}));
            ops.push_back(make_affine_sup("F2e", Group::G2, true, {-0.1, 0.2, -0.4, 0.2, -0.1},
                                          {0.2, 0.4, 0.6, 0.8, 1.0}));
            return ops;
        }
        case Group::G3: {
            auto ops = g1();
            ops.push_back(make_shift_max("F3a", Group::G3, {-0.25, 0.0, 0.25}));
            ops.push_back(make_shift_avg("F3b", Group::G3, {-0.25, 0.0, 0.25}));
            ops.push_back(make_shift_avg("F3c", Group::G3, {-1.0 / 3.0, 0.0, 1.0 / 3.0}));
            ops.push_back(
                make_shift_avg("F3d", Group::G3, {-1.0 / 3.0, -0.25, 0.0, 0.25, 1.0 / 3.0}));
            ops.push_back(
                make_shift_max("F3e", Group::G3, {-1.0 / 3.0, -0.25, 0.0, 0.25, 1.0 / 3.0}));
            return ops;
        }
        case Group::G4: {
            auto ops = builtin_set(Group::G3);
            ops.push_back(make_shift_max("F4a", Group::G4, {0.0, 0.25}));
            ops.push_back(make_shift_avg("F4b", Group::G4, {-0.25, 0.0}));
            ops.push_back(make_shift_avg("F4c", Group::G4, {0.0, 0.25}));
            ops.push_back(make_shift_avg("F4d", Group::G4, {0.0, 0.2, 0.4}));
            ops.push_back(make_shift_max("F4e", Group::G4, {0.0, 0.2, 0.4}));
            return ops;
        }
        case Group::G5: {
            auto ops = builtin_set(Group::G4);
            const double pi = std::numbers::pi;
            ops.push_back({"F5a", Group::G5, OpKind::MultiplicativeProfile,
                           MultiplicativeParams{1.0, 0.0, 5.0 * pi, {}, 0.1}});
            ops.push_back({"F5b", Group::G5, OpKind::MultiplicativeProfile,
                           MultiplicativeParams{1.0, 0.0, 9.0 * pi, {}, 0.1}});
            ops.push_back({"F5c", Group::G5, OpKind::MultiplicativeProfile,
                           MultiplicativeParams{1.0, 2.0, 0.0, {0.25}, 0.1}});
            ops.push_back({"F5d", Group::G5, OpKind::MultiplicativeProfile,
                           MultiplicativeParams{1.0, 2.0, 0.0, {0.5}, 0.1}});
            ops.push_back({"F5e", Group::G5, OpKind::MultiplicativeProfile,
                           MultiplicativeParams{0.5, 2.0, 0.0, {0.375, 0.625}, 0.1}});
            return ops;
        }
        case Group::ISO2: {
            const double pi = std::numbers::pi;
            std::vector<Operator> ops;
            ops.push_back({"S2id", Group::ISO2, OpKind::Pointwise, PointwiseParams{1.0}});
            ops.push_back({"S2int", Group::ISO2, OpKind::ConstantIntegral, ConstantIntegralParams{}});
            ops.push_back({"S2c1", Group::ISO2, OpKind::Convolution2D,
                           RadialKernelParams{{0.25}, {16.0 / pi}}});
            ops.push_back({"S2c2", Group::ISO2, OpKind::Convolution2D,
                           RadialKernelParams{{0.125, 0.25}, {16.0 / pi, -16.0 / pi}}});
            ops.push_back({"S2c3", Group::ISO2, OpKind::Convolution2D,
                           RadialKernelParams{{0.0625, 0.125, 0.1875, 0.25},
                                              {16.0 / pi, -16.0 / pi, 16.0 / pi, -16.0 / pi}}});
            ops.push_back({"S2c4", Group::ISO2, OpKind::Convolution2D,
                           RadialKernelParams{{0.25, 0.5}, {4.0 / pi, -4.0 / pi}}});
            std::size_t base = ops.size();
            for (std::size_t i = 0; i < base; ++i)
                ops.push_back(detail::negate_op("n" + ops[i].name, ops[i]));
            return ops;
        }
    }
    throw std::invalid_argument("builtin_set: unknown group");
}

// --- property checks ----------------------------------------------------------

struct CheckOptions {
    int resolution = 1024;
};

namespace detail {

/// Padded window that covers a pair of functions (their joint support padded
/// by one joint width), so both operator outputs live on one grid.
inline Grid1D joint_window(const PLFunction& f1, const PLFunction& f2, int resolution) {
    double lo = std::min(f1.support_lo(), f2.support_lo());
    double hi = std::max(f1.support_hi(), f2.support_hi());
    double w = hi - lo;
    return Grid1D{lo - w, 3.0 * w / (resolution - 1), resolution};
}

}  // namespace detail

/// max over pairs of ||F(f) - F(g)||_grid - ||f - g||_grid on a shared window.
/// Non-positive (up to sampling error) for a non-expansive operator.
inline double check_nonexpansive(const Operator& op, const std::vector<PLFunction>& pool,
                                 const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                 const CheckOptions& opts = {}) {
    double worst = -std::numeric_limits<double>::infinity();
    for (auto [i, j] : pairs) {
        const PLFunction& f1 = pool.at(i);
        const PLFunction& f2 = pool.at(j);
        Grid1D win = detail::joint_window(f1, f2, opts.resolution);
        ApplyOptions ao{opts.resolution, &win, {}};
        Sampled1D a = apply_1d(op, f1, ao);
        Sampled1D b = apply_1d(op, f2, ao);
        double lhs = 0.0, rhs = 0.0;
        for (int k = 0; k < win.n; ++k) {
            lhs = std::max(lhs, std::abs(a.values[static_cast<std::size_t>(k)] -
                                         b.values[static_cast<std::size_t>(k)]));
            double x = win.node(k);
            rhs = std::max(rhs, std::abs(f1(x) - f2(x)));
        }
        worst = std::max(worst, lhs - rhs);
    }
    return worst;
}

inline double check_nonexpansive_2d(const Operator& op, const std::vector<GridFunction2D>& pool,
                                    const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    double worst = -std::numeric_limits<double>::infinity();
    std::vector<GridFunction2D> applied(pool.size());
    std::vector<char> done(pool.size(), 0);
    auto get = [&](std::size_t i) -> const GridFunction2D& {
        if (!done[i]) {
            applied[i] = apply_2d(op, pool[i]);
            done[i] = 1;
        }
        return applied[i];
    };
    for (auto [i, j] : pairs) {
        const GridFunction2D& a = get(i);
        const GridFunction2D& b = get(j);
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t k = 0; k < a.values.size(); ++k) {
            lhs = std::max(lhs, std::abs(a.values[k] - b.values[k]));
            rhs = std::max(rhs, std::abs(pool[i].values[k] - pool[j].values[k]));
        }
        worst = std::max(worst, lhs - rhs);
    }
    return worst;
}

/// max over (function, group element) of ||F(f o g) - F(f) o g|| sampled on
/// the overlap of the two padded windows.
inline double check_equivariance(const Operator& op, const std::vector<PLFunction>& fns,
                                 const std::vector<AffineMap>& elems, const CheckOptions& opts = {}) {
    double worst = 0.0;
    for (std::size_t t = 0; t < fns.size(); ++t) {
        const PLFunction& f = fns[t];
        const AffineMap& g = elems[t % elems.size()];
        PLFunction fg = compose_affine(f, g);
        ApplyOptions ao{opts.resolution, nullptr, {}};
        Sampled1D lhs = apply_1d(op, fg, ao);
        Sampled1D rhs = apply_1d(op, f, ao);
        double r_lo = rhs.grid.x0, r_hi = rhs.grid.hi();
        for (int k = 0; k < lhs.grid.n; ++k) {
            double x = lhs.grid.node(k);
            double y = g(x);
            if (y < r_lo || y > r_hi) continue;
            worst = std::max(worst,
                             std::abs(lhs.values[static_cast<std::size_t>(k)] - rhs.eval(y)));
        }
    }
    return worst;
}

/// 2-d variant; group elements are the exact square symmetries (d4 index).
inline double check_equivariance_2d(const Operator& op, const std::vector<GridFunction2D>& imgs,
                                    const std::vector<int>& d4_elems) {
    double worst = 0.0;
    for (std::size_t t = 0; t < imgs.size(); ++t) {
        int k = d4_elems[t % d4_elems.size()];
        GridFunction2D lhs = apply_2d(op, d4_transform(imgs[t], k));
        GridFunction2D rhs = d4_transform(apply_2d(op, imgs[t]), k);
        for (std::size_t i = 0; i < lhs.values.size(); ++i)
            worst = std::max(worst, std::abs(lhs.values[i] - rhs.values[i]));
    }
    return worst;
}

/// max over functions of ||F(f)|| - ||f|| - ||F(0)||; non-positive (up to
/// sampling) because a non-expansive F satisfies ||F(f)|| <= ||f|| + ||F(0)||.
inline double check_norm_bound(const Operator& op, const std::vector<PLFunction>& fns,
                               const CheckOptions& opts = {}) {
    double worst = -std::numeric_limits<double>::infinity();
    PLFunction zero = PLFunction::zero();
    for (const PLFunction& f : fns) {
        Grid1D win = padded_grid(f, opts.resolution);
        ApplyOptions ao{opts.resolution, &win, {}};
        double lhs = apply_1d(op, f, ao).max_abs();
        double norm_f = 0.0;
        for (int k = 0; k < win.n; ++k) norm_f = std::max(norm_f, std::abs(f(win.node(k))));
        double norm_f0 = apply_1d(op, zero, ao).max_abs();
        worst = std::max(worst, lhs - norm_f - norm_f0);
    }
    return worst;
}

inline double check_norm_bound_2d(const Operator& op, const std::vector<GridFunction2D>& imgs) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const GridFunction2D& img : imgs) {
        GridFunction2D zero = make_grid2d("", img.w, img.h, img.cell);
        double lhs = apply_2d(op, img).max_abs();
        double norm_f = img.max_abs();
        double norm_f0 = apply_2d(op, zero).max_abs();
        worst = std::max(worst, lhs - norm_f - norm_f0);
    }
    return worst;
}

/// Random elements of a 1-d group, for equivariance checks. Scales are drawn
/// from the same power-of-2^(3/64) lattice as the affine-sup r grid, so scale
/// equivariance of the discretized operators is exact up to interpolation.
inline std::vector<AffineMap> sample_group_elements(Group g, int count, Rng& rng) {
    std::vector<AffineMap> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        double a = 1.0;
        double b = 0.0;
        switch (g) {
            case Group::G1: {
                int k = rng.int_range(-22, 22);
                a = std::exp2(3.0 * k / 64.0);
                if (rng.next_double() < 0.5) a = -a;
                b = rng.uniform(-1.5, 1.5);
                break;
            }
            case Group::G2: {
                int k = rng.int_range(-22, 22);
                a = std::exp2(3.0 * k / 64.0);
                b = rng.uniform(-1.5, 1.5);
                break;
            }
            case Group::G3:
                a = rng.next_double() < 0.5 ? -1.0 : 1.0;
                b = rng.uniform(-1.5, 1.5);
                break;
            case Group::G4:
                b = rng.uniform(-1.5, 1.5);
                break;
            case Group::G5:
                break;
            case Group::ISO2:
                throw std::invalid_argument("sample_group_elements: use d4 indices for ISO2");
        }
        out.emplace_back(a, b);
    }
    return out;
}

// --- manifest serialization ----------------------------------------------------

inline nlohmann::json to_json(const Operator& op) {
    nlohmann::json params;
    switch (op.kind) {
        case OpKind::Pointwise: {
            const auto& p = std::get<PointwiseParams>(op.params);
            params = {{"scale", p.scale}};
            if (p.offset != 0.0) params["offset"] = p.offset;
            break;
        }
        case OpKind::ShiftCombine: {
            const auto& p = std::get<ShiftCombineParams>(op.params);
            params = {{"combine", p.use_max ? "max" : "avg"}, {"shifts", p.shifts}};
            if (!p.use_max) params["weights"] = p.weights;
            break;
        }
        case OpKind::AffineSup:
        case OpKind::OrientedAffineSup: {
            const auto& p = std::get<AffineSupParams>(op.params);
            params = {{"weights", p.weights}, {"centers", p.centers}};
            break;
        }
        case OpKind::MultiplicativeProfile: {
            const auto& p = std::get<MultiplicativeParams>(op.params);
            params = {{"scale", p.scale}, {"offset", p.offset}, {"sigma", p.gauss_sigma}};
            if (p.sin_freq != 0.0) params["sin_freq"] = p.sin_freq;
            if (!p.gauss_mu.empty()) params["gauss_mu"] = p.gauss_mu;
            break;
        }
        case OpKind::Convolution2D: {
            const auto& p = std::get<RadialKernelParams>(op.params);
            params = {{"radii", p.radii}, {"levels", p.levels}};
            break;
        }
        case OpKind::ConstantIntegral:
            params = nlohmann::json::object();
            break;
        case OpKind::NegationWrapper:
            params = {{"inner", to_json(*std::get<NegationParams>(op.params).inner)}};
            break;
    }
    return nlohmann::json{{"name", op.name},
                          {"group", group_name(op.group)},
                          {"kind", kind_name(op.kind)},
                          {"params", std::move(params)}};
}

inline Operator operator_from_json(const nlohmann::json& j) {
    for (const char* key : {"name", "group", "kind", "params"})
        if (!j.contains(key)) throw std::invalid_argument(std::string("operator record: missing ") + key);
    Operator op;
    op.name = j.at("name").get<std::string>();
    op.group = group_from_name(j.at("group").get<std::string>());
    op.kind = kind_from_name(j.at("kind").get<std::string>());
    const auto& p = j.at("params");
    switch (op.kind) {
        case OpKind::Pointwise:
            op.params = PointwiseParams{p.at("scale").get<double>(),
                                        p.contains("offset") ? p.at("offset").get<double>() : 0.0};
            break;
        case OpKind::ShiftCombine: {
            ShiftCombineParams sc;
            sc.use_max = p.at("combine").get<std::string>() == "max";
            sc.shifts = p.at("shifts").get<std::vector<double>>();
            if (!sc.use_max) sc.weights = p.at("weights").get<std::vector<double>>();
            op.params = std::move(sc);
            break;
        }
        case OpKind::AffineSup:
        case OpKind::OrientedAffineSup:
            op.params = AffineSupParams{p.at("weights").get<std::vector<double>>(),
                                        p.at("centers").get<std::vector<double>>()};
            break;
        case OpKind::MultiplicativeProfile: {
            MultiplicativeParams mp;
            mp.scale = p.at("scale").get<double>();
            mp.offset = p.at("offset").get<double>();
            mp.gauss_sigma = p.at("sigma").get<double>();
            if (p.contains("sin_freq")) mp.sin_freq = p.at("sin_freq").get<double>();
            if (p.contains("gauss_mu")) mp.gauss_mu = p.at("gauss_mu").get<std::vector<double>>();
            op.params = std::move(mp);
            break;
        }
        case OpKind::Convolution2D:
            op.params = RadialKernelParams{p.at("radii").get<std::vector<double>>(),
                                           p.at("levels").get<std::vector<double>>()};
            break;
        case OpKind::ConstantIntegral:
            op.params = ConstantIntegralParams{};
            break;
        case OpKind::NegationWrapper:
            op.params = NegationParams{
                std::make_shared<Operator>(operator_from_json(p.at("inner")))};
            break;
    }
    return op;
}

/// Manifest: one operator record per line (JSONL).
inline std::string manifest_dump(std::span<const Operator> ops) {
    std::string out;
    for (const auto& op : ops) out += to_json(op).dump() + "\n";
    return out;
}

inline std::vector<Operator> manifest_parse(const std::vector<std::string>& lines) {
    std::vector<Operator> ops;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        try {
            ops.push_back(operator_from_json(nlohmann::json::parse(lines[i])));
        } catch (const std::exception& e) {
            throw std::runtime_error("manifest line " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return ops;
}

}  // namespace giph
