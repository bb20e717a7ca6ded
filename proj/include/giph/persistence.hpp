#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "giph/grid2d.hpp"
#include "giph/pl_function.hpp"

namespace giph {

struct DiagramPoint {
    double birth = 0.0;
    double death = 0.0;
    friend bool operator==(const DiagramPoint&, const DiagramPoint&) = default;
};

/// Degree-0 sublevel-set persistence diagram.
///
/// `finite` holds (birth, death) with death > birth; zero-persistence pairs
/// are dropped at construction. `essential` holds the birth values of classes
/// that never die (one per connected component of the domain; the global
/// minimum for the domains used here). The diagonal is implicit.
struct PersistenceDiagram {
    std::vector<DiagramPoint> finite;
    std::vector<double> essential;
    int degree = 0;

    std::size_t size() const { return finite.size() + essential.size(); }
    friend bool operator==(const PersistenceDiagram&, const PersistenceDiagram&) = default;
};

namespace detail {

/// Union-find sweep over nodes in increasing value order (ties by index).
/// When two components meet, the younger one dies (elder rule; ties on birth
/// value are broken toward the smaller birth index).
template <typename NeighborFn>
PersistenceDiagram sweep_persistence(std::span<const double> values, NeighborFn&& neighbors_of) {
    const std::size_t n = values.size();
    if (n == 0) throw std::invalid_argument("persistence: empty input");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (values[a] != values[b]) return values[a] < values[b];
        return a < b;
    });

    constexpr std::size_t kInactive = static_cast<std::size_t>(-1);
    std::vector<std::size_t> parent(n, kInactive);
    std::vector<double> birth_value(n);
    std::vector<std::size_t> birth_index(n);

    auto find = [&](std::size_t i) {
        std::size_t root = i;
        while (parent[root] != root) root = parent[root];
        while (parent[i] != root) {
            std::size_t next = parent[i];
            parent[i] = root;
            i = next;
        }
        return root;
    };

    PersistenceDiagram d;
    for (std::size_t idx : order) {
        parent[idx] = idx;
        birth_value[idx] = values[idx];
        birth_index[idx] = idx;
        neighbors_of(idx, [&](std::size_t nb) {
            if (parent[nb] == kInactive) return;
            std::size_t ra = find(idx);
            std::size_t rb = find(nb);
            if (ra == rb) return;
            // elder component survives
            std::size_t elder = ra, younger = rb;
            if (birth_value[rb] < birth_value[ra] ||
                (birth_value[rb] == birth_value[ra] && birth_index[rb] < birth_index[ra])) {
                elder = rb;
                younger = ra;
            }
            double death = values[idx];
            if (death > birth_value[younger]) d.finite.push_back({birth_value[younger], death});
            parent[younger] = elder;
        });
    }
    for (std::size_t i = 0; i < n; ++i)
        if (find(i) == i) d.essential.push_back(birth_value[i]);

    std::sort(d.finite.begin(), d.finite.end(), [](const DiagramPoint& a, const DiagramPoint& b) {
        if (a.birth != b.birth) return a.birth < b.birth;
        return a.death < b.death;
    });
    std::sort(d.essential.begin(), d.essential.end());
    return d;
}

}  // namespace detail

/// Diagram of a sampled function on a path (neighbors i-1, i+1).
inline PersistenceDiagram diagram_1d(std::span<const double> values) {
    const std::size_t n = values.size();
    return detail::sweep_persistence(values, [n](std::size_t i, auto&& visit) {
        if (i > 0) visit(i - 1);
        if (i + 1 < n) visit(i + 1);
    });
}

/// Diagram of a grid function with 4-connectivity, row-major indexing.
inline PersistenceDiagram diagram_2d(const GridFunction2D& g) {
    const std::size_t w = static_cast<std::size_t>(g.w);
    const std::size_t h = static_cast<std::size_t>(g.h);
    return detail::sweep_persistence(std::span<const double>(g.values),
                                     [w, h](std::size_t i, auto&& visit) {
                                         std::size_t x = i % w, y = i / w;
                                         if (x > 0) visit(i - 1);
                                         if (x + 1 < w) visit(i + 1);
                                         if (y > 0) visit(i - w);
                                         if (y + 1 < h) visit(i + w);
                                     });
}

/// Diagram of a PL function, sampled on its padded window.
inline PersistenceDiagram diagram_of_pl(const PLFunction& f, int resolution) {
    std::vector<double> v = sample(f, padded_grid(f, resolution));
    return diagram_1d(v);
}

// --- serialization ---------------------------------------------------------

inline nlohmann::json diagram_fields(const PersistenceDiagram& d) {
    nlohmann::json fin = nlohmann::json::array();
    for (const auto& p : d.finite) fin.push_back({p.birth, p.death});
    return nlohmann::json{{"finite", std::move(fin)}, {"essential", d.essential}};
}

inline PersistenceDiagram diagram_from_fields(const nlohmann::json& j) {
    PersistenceDiagram d;
    if (!j.contains("finite") || !j.contains("essential"))
        throw std::invalid_argument("diagram record: missing finite or essential");
    for (const auto& e : j.at("finite")) {
        if (!e.is_array() || e.size() != 2)
            throw std::invalid_argument("diagram record: finite entries must be [birth, death]");
        d.finite.push_back({e[0].get<double>(), e[1].get<double>()});
    }
    d.essential = j.at("essential").get<std::vector<double>>();
    return d;
}

}  // namespace giph
