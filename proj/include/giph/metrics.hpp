#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "giph/bottleneck.hpp"
#include "giph/operators.hpp"
#include "giph/persistence.hpp"
#include "giph/pl_function.hpp"

namespace giph {

// --- grid over the reparametrization group -----------------------------------

/// Search grid for the natural pseudo-distance d_G(f1, f2) =
/// inf_{g in G} ||f1 - f2 o g||_inf over affine g(x) = a x + b. Slopes are
/// enumerated from a fixed list; for each slope, the offset b is searched
/// coarse-to-fine over the range where the supports of f1 and g^{-1}(f2)
/// overlap (outside that range the distance is the constant
/// max(||f1||, ||f2||), which is evaluated once as the disjoint candidate).
struct GroupGrid {
    Group group = Group::G5;
    std::vector<double> a_values;  // candidate slopes, sign included
    double b_limit = 50.0;         // |b| cap (10 * Lipschitz cap)
    int b_coarse = 201;            // points across the admissible b range (level 0)
    int b_refine = 41;             // points per refinement level
    int b_levels = 3;              // 1 coarse level + (b_levels - 1) refinements, 10x shrink each
    bool include_disjoint = true;  // evaluate the supports-disjoint candidate
    bool flat = false;             // evaluate a flat a x b grid (no refinement)
    std::vector<double> b_values;  // used only when flat

    /// Default grid: slopes on the power lattice {+-2^(3k/64)} intersected
    /// with [1/50, 50] (241 per sign), restricted to the group.
    static GroupGrid defaults(Group g) {
        GroupGrid grid;
        grid.group = g;
        switch (g) {
            case Group::G1:
            case Group::G2:
                for (int k = -120; k <= 120; ++k) {
                    double a = std::exp2(3.0 * k / 64.0);
                    grid.a_values.push_back(a);
                    if (g == Group::G1) grid.a_values.push_back(-a);
                }
                break;
            case Group::G3:
                grid.a_values = {1.0, -1.0};
                break;
            case Group::G4:
                grid.a_values = {1.0};
                break;
            case Group::G5:
                break;  // identity only; handled exactly
            case Group::ISO2:
                throw std::invalid_argument("GroupGrid: ISO2 has no 1-d grid");
        }
        return grid;
    }

    /// Flat exhaustive grid: slopes +-[0.02, 50] and offsets [-50, 50], both
    /// in steps of 0.01, no coarse-to-fine refinement. Orders of magnitude
    /// slower than the default grid; intended for spot checks.
    static GroupGrid flat_grid(Group g) {
        GroupGrid grid;
        grid.group = g;
        grid.flat = true;
        switch (g) {
            case Group::G1:
            case Group::G2:
                for (int i = 2; i <= 5000; ++i) {
                    double a = i / 100.0;
                    grid.a_values.push_back(a);
                    if (g == Group::G1) grid.a_values.push_back(-a);
                }
                break;
            case Group::G3:
                grid.a_values = {1.0, -1.0};
                break;
            case Group::G4:
                grid.a_values = {1.0};
                break;
            case Group::G5:
                break;
            case Group::ISO2:
                throw std::invalid_argument("GroupGrid: ISO2 has no 1-d grid");
        }
        for (int i = -5000; i <= 5000; ++i) grid.b_values.push_back(i / 100.0);
        return grid;
    }
};

struct NpdResult {
    double value = 0.0;
    AffineMap best{1.0, 0.0};
};

/// Grid upper bound for the natural pseudo-distance. Every evaluated g gives
/// a valid upper bound for the infimum, so the result is always >= d_G and
/// <= ||f1 - f2||_inf (the identity is always evaluated).
inline NpdResult natural_pseudo_distance(const PLFunction& f1, const PLFunction& f2,
                                         const GroupGrid& grid) {
    NpdResult best;
    best.value = sup_distance(f1, f2);  // identity candidate, exact
    best.best = AffineMap{1.0, 0.0};
    if (grid.group == Group::G5) return best;

    auto consider = [&](double a, double b) {
        double d = sup_distance_composed(f1, f2, AffineMap{a, b});
        if (d < best.value) {
            best.value = d;
            best.best = AffineMap{a, b};
        }
    };

    if (grid.include_disjoint && !grid.flat) {
        // supports of f1 and f2 o g disjoint: distance is exactly
        // max(||f1||, ||f2||), realized e.g. by a unit shift past the supports
        double disjoint = std::max(sup_norm(f1), sup_norm(f2));
        if (disjoint < best.value) {
            best.value = disjoint;
            best.best = AffineMap{1.0, f2.support_hi() - f1.support_lo() + 1.0};
        }
    }

    for (double a : grid.a_values) {
        if (!group_contains(grid.group, AffineMap{a, 0.0})) continue;
        if (grid.flat) {
            for (double b : grid.b_values) consider(a, b);
            continue;
        }
        // admissible offsets: supports of f1 and (support(f2) - b)/a overlap,
        // clamped to the configured |b| cap
        double t1 = a * f1.support_lo(), t2 = a * f1.support_hi();
        double blo = std::max(f2.support_lo() - std::max(t1, t2), -grid.b_limit);
        double bhi = std::min(f2.support_hi() - std::min(t1, t2), grid.b_limit);
        double width = bhi - blo;
        if (!(width > 0.0)) continue;

        double center = 0.0, span = width;
        double incumbent_b = blo, incumbent_v = std::numeric_limits<double>::infinity();
        for (int level = 0; level < grid.b_levels; ++level) {
            int pts = level == 0 ? grid.b_coarse : grid.b_refine;
            double lo = level == 0 ? blo : std::max(blo, center - span / 2.0);
            double hi = level == 0 ? bhi : std::min(bhi, center + span / 2.0);
            double step = pts > 1 ? (hi - lo) / (pts - 1) : 0.0;
            for (int i = 0; i < pts; ++i) {
                double b = lo + i * step;
                double d = sup_distance_composed(f1, f2, AffineMap{a, b});
                if (d < incumbent_v) {
                    incumbent_v = d;
                    incumbent_b = b;
                }
            }
            center = incumbent_b;
            span = width / std::pow(10.0, level + 1);
        }
        if (incumbent_v < best.value) {
            best.value = incumbent_v;
            best.best = AffineMap{a, incumbent_b};
        }
    }
    return best;
}

/// Upper bound for the natural pseudo-distance of two images under planar
/// isometries: minimum over the 8 exact symmetries of the grid square of the
/// pointwise sup distance.
inline double natural_pseudo_distance_2d(const GridFunction2D& g1, const GridFunction2D& g2) {
    if (g1.w != g2.w || g1.h != g2.h)
        throw std::invalid_argument("natural_pseudo_distance_2d: grid shape mismatch");
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 8; ++k) {
        GridFunction2D t = d4_transform(g2, k);
        double worst = 0.0;
        for (std::size_t i = 0; i < t.values.size(); ++i)
            worst = std::max(worst, std::abs(g1.values[i] - t.values[i]));
        best = std::min(best, worst);
    }
    return best;
}

// --- diagram cache -------------------------------------------------------------

/// Cache of persistence diagrams keyed by (input id, operator name,
/// resolution). Entries are only reused when the input id is non-empty.
class DiagramCache {
  public:
    const PersistenceDiagram& get(const std::string& key,
                                  const std::function<PersistenceDiagram()>& compute) {
        {
            std::lock_guard<std::mutex> lk(mu_);
            auto it = map_.find(key);
            if (it != map_.end()) return it->second;
        }
        PersistenceDiagram d = compute();
        std::lock_guard<std::mutex> lk(mu_);
        auto [it, inserted] = map_.emplace(key, std::move(d));
        return it->second;
    }

    std::size_t size() const {
        std::lock_guard<std::mutex> lk(mu_);
        return map_.size();
    }

  private:
    mutable std::mutex mu_;
    std::unordered_map<std::string, PersistenceDiagram> map_;
};

inline std::string diagram_cache_key(const std::string& input_id, const std::string& op_name,
                                     int resolution) {
    return input_id + "\x1f" + op_name + "\x1f" + std::to_string(resolution);
}

// --- matching distance -----------------------------------------------------------

struct DmatchResult {
    double value = 0.0;
    std::string argmax_op;
    std::vector<std::pair<std::string, double>> per_op;  // (operator name, bottleneck)
};

inline PersistenceDiagram diagram_under_op(const Operator& op, const PLFunction& f,
                                           const ApplyOptions& opts, DiagramCache* cache) {
    auto compute = [&] {
        Sampled1D s = apply_1d(op, f, opts);
        return diagram_1d(s.values);
    };
    if (cache && !f.id().empty() && !opts.window)
        return cache->get(diagram_cache_key(f.id(), op.name, opts.resolution), compute);
    return compute();
}

/// D(f1, f2) = max over the family of bottleneck(dgm F(f1), dgm F(f2)).
/// A lower bound for the natural pseudo-distance when every operator in the
/// family is G-equivariant and non-expansive.
inline DmatchResult d_match_sup(const PLFunction& f1, const PLFunction& f2,
                                std::span<const Operator> ops, DiagramCache* cache = nullptr,
                                const ApplyOptions& opts = {}) {
    if (ops.empty()) throw std::invalid_argument("d_match_sup: empty operator family");
    DmatchResult res;
    res.value = -std::numeric_limits<double>::infinity();
    res.per_op.reserve(ops.size());
    for (const Operator& op : ops) {
        PersistenceDiagram d1 = diagram_under_op(op, f1, opts, cache);
        PersistenceDiagram d2 = diagram_under_op(op, f2, opts, cache);
        double d = bottleneck_distance(d1, d2);
        res.per_op.emplace_back(op.name, d);
        if (d > res.value) {
            res.value = d;
            res.argmax_op = op.name;
        }
    }
    return res;
}

/// 2-d variant over grid images.
inline DmatchResult d_match_sup_2d(const GridFunction2D& g1, const GridFunction2D& g2,
                                   std::span<const Operator> ops, DiagramCache* cache = nullptr) {
    if (ops.empty()) throw std::invalid_argument("d_match_sup_2d: empty operator family");
    DmatchResult res;
    res.value = -std::numeric_limits<double>::infinity();
    res.per_op.reserve(ops.size());
    auto dgm = [&](const GridFunction2D& g, const Operator& op) {
        auto compute = [&] { return diagram_2d(apply_2d(op, g)); };
        if (cache && !g.id.empty()) return cache->get(diagram_cache_key(g.id, op.name, 0), compute);
        return compute();
    };
    for (const Operator& op : ops) {
        double d = bottleneck_distance(dgm(g1, op), dgm(g2, op));
        res.per_op.emplace_back(op.name, d);
        if (d > res.value) {
            res.value = d;
            res.argmax_op = op.name;
        }
    }
    return res;
}

/// |D over ops_small - D over ops_large|. When every operator of the larger
/// family is within eps of one in the smaller family (in operator sup
/// distance), diagram stability bounds this gap by 2 eps.
inline double approximation_gap(const PLFunction& f1, const PLFunction& f2,
                                std::span<const Operator> ops_small,
                                std::span<const Operator> ops_large, int resolution = 1024,
                                DiagramCache* cache = nullptr) {
    ApplyOptions opts{resolution, nullptr, {}};
    double small = d_match_sup(f1, f2, ops_small, cache, opts).value;
    double large = d_match_sup(f1, f2, ops_large, cache, opts).value;
    return std::abs(small - large);
}

// --- strong invariance estimate ----------------------------------------------------

/// min over a finite set S of homeomorphisms of ||f1 - f2 o rho||_inf,
/// evaluated exactly on piecewise-linear inputs.
inline double mu_s(const PLFunction& f1, const PLFunction& f2, std::span<const AffineMap> maps) {
    double best = std::numeric_limits<double>::infinity();
    for (const AffineMap& m : maps) best = std::min(best, sup_distance_composed(f1, f2, m));
    return best;
}

/// Periodic variant on uniformly sampled values: rho ranges over the given
/// cyclic index shifts, (f2 o rho)[i] = v2[(i + shift) mod n].
inline double mu_s_periodic(std::span<const double> v1, std::span<const double> v2,
                            std::span<const long> shifts) {
    if (v1.size() != v2.size() || v1.empty())
        throw std::invalid_argument("mu_s_periodic: size mismatch");
    const long n = static_cast<long>(v1.size());
    double best = std::numeric_limits<double>::infinity();
    for (long s : shifts) {
        double worst = 0.0;
        for (long i = 0; i < n; ++i) {
            long j = (i + s) % n;
            if (j < 0) j += n;
            worst = std::max(worst, std::abs(v1[static_cast<std::size_t>(i)] -
                                             v2[static_cast<std::size_t>(j)]));
        }
        best = std::min(best, worst);
    }
    return best;
}

// --- distance-realizing family for the trivial group --------------------------------

/// The family {F_psi} with F_psi(phi) = the constant function d_G(phi, psi)
/// is non-expansive and strongly invariant; its matching distance equals the
/// natural pseudo-distance whenever the probe set contains phi1 or phi2. The
/// diagram of the constant output is a single essential class at that level.
/// `oracle` computes d_G(., psi); when absent the trivial group is assumed
/// and the exact sup distance is used.
struct FPsiOperator {
    PLFunction psi;
    std::function<double(const PLFunction&)> oracle;

    double level(const PLFunction& f) const {
        return oracle ? oracle(f) : sup_distance(f, psi);
    }

    Sampled1D apply(const PLFunction& f, const ApplyOptions& opts = {}) const {
        Grid1D grid = opts.window ? *opts.window : padded_grid(f, opts.resolution);
        Sampled1D out{grid, std::vector<double>(static_cast<std::size_t>(grid.n), level(f))};
        return out;
    }

    PersistenceDiagram diagram(const PLFunction& f, const ApplyOptions& opts = {}) const {
        return diagram_1d(apply(f, opts).values);
    }
};

inline FPsiOperator construct_F_psi(PLFunction psi,
                                    std::function<double(const PLFunction&)> dg_oracle = {}) {
    return FPsiOperator{std::move(psi), std::move(dg_oracle)};
}

/// Matching distance under the family {F_psi : psi in probes}, computed
/// through the full sample -> diagram -> bottleneck pipeline.
inline double d_match_fpsi(const PLFunction& f1, const PLFunction& f2,
                           std::span<const PLFunction> probes, const ApplyOptions& opts = {}) {
    double best = 0.0;
    for (const PLFunction& psi : probes) {
        FPsiOperator op = construct_F_psi(psi);
        best = std::max(best, bottleneck_distance(op.diagram(f1, opts), op.diagram(f2, opts)));
    }
    return best;
}

// --- separation estimate between operator families ------------------------------------

/// Lower bound for the distance between two operators (as maps on functions):
/// the largest ||A(phi) - B(phi)||_inf over the probe functions.
template <typename OpA, typename OpB>
double estimate_df(OpA&& a, OpB&& b, std::span<const PLFunction> probes) {
    double best = 0.0;
    for (const PLFunction& f : probes) {
        Sampled1D fa = a(f);
        Sampled1D fb = b(f);
        if (fa.values.size() != fb.values.size())
            throw std::invalid_argument("estimate_df: probe outputs live on different grids");
        for (std::size_t k = 0; k < fa.values.size(); ++k)
            best = std::max(best, std::abs(fa.values[k] - fb.values[k]));
    }
    return best;
}

/// phi -> constant function max(phi, 0)-maximum; exact on the plateau level.
inline auto constant_max_functor(int resolution = 1024) {
    return [resolution](const PLFunction& f) {
        Grid1D grid = padded_grid(f, resolution);
        return Sampled1D{grid,
                         std::vector<double>(static_cast<std::size_t>(grid.n), max_value(f))};
    };
}

/// phi -> constant function with the exact integral of phi.
inline auto constant_integral_functor(int resolution = 1024) {
    return [resolution](const PLFunction& f) {
        Grid1D grid = padded_grid(f, resolution);
        return Sampled1D{grid, std::vector<double>(static_cast<std::size_t>(grid.n), integral(f))};
    };
}

/// Tent probe of width 2/i and height 1 centered at c.
inline PLFunction tent_probe(int i, double center = 0.5) {
    double w = 1.0 / static_cast<double>(i);
    return PLFunction("tent-" + std::to_string(i),
                      {{center - w, 0.0}, {center, 1.0}, {center + w, 0.0}});
}

}  // namespace giph
