#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

#include "giph/persistence.hpp"

namespace giph {

namespace detail {

inline double point_cost(const DiagramPoint& a, const DiagramPoint& b) {
    return std::max(std::abs(a.birth - b.birth), std::abs(a.death - b.death));
}

inline double diagonal_cost(const DiagramPoint& a) { return (a.death - a.birth) * 0.5; }

/// Optimal bottleneck pairing of essential births: both lists sorted and
/// paired in order (exchange argument; crossing pairs never help the max).
inline double essential_part(std::vector<double> e1, std::vector<double> e2) {
    std::sort(e1.begin(), e1.end());
    std::sort(e2.begin(), e2.end());
    double m = 0.0;
    for (std::size_t i = 0; i < e1.size(); ++i) m = std::max(m, std::abs(e1[i] - e2[i]));
    return m;
}

/// Hopcroft-Karp maximum matching on an explicit bipartite adjacency list.
class HopcroftKarp {
public:
    HopcroftKarp(std::size_t n_left, std::size_t n_right)
        : n_left_(n_left), adj_(n_left), match_l_(n_left, kFree), match_r_(n_right, kFree) {}

    void add_edge(std::size_t l, std::size_t r) { adj_[l].push_back(r); }

    std::size_t solve() {
        std::size_t matched = 0;
        while (bfs()) {
            for (std::size_t l = 0; l < n_left_; ++l)
                if (match_l_[l] == kFree && dfs(l)) ++matched;
        }
        return matched;
    }

private:
    static constexpr std::size_t kFree = static_cast<std::size_t>(-1);
    static constexpr std::size_t kInf = static_cast<std::size_t>(-2);

    bool bfs() {
        std::queue<std::size_t> q;
        dist_.assign(n_left_, kInf);
        for (std::size_t l = 0; l < n_left_; ++l) {
            if (match_l_[l] == kFree) {
                dist_[l] = 0;
                q.push(l);
            }
        }
        bool found = false;
        while (!q.empty()) {
            std::size_t l = q.front();
            q.pop();
            for (std::size_t r : adj_[l]) {
                std::size_t l2 = match_r_[r];
                if (l2 == kFree) {
                    found = true;
                } else if (dist_[l2] == kInf) {
                    dist_[l2] = dist_[l] + 1;
                    q.push(l2);
                }
            }
        }
        return found;
    }

    bool dfs(std::size_t l) {
        for (std::size_t r : adj_[l]) {
            std::size_t l2 = match_r_[r];
            if (l2 == kFree || (dist_[l2] == dist_[l] + 1 && dfs(l2))) {
                match_l_[l] = r;
                match_r_[r] = l;
                return true;
            }
        }
        dist_[l] = kInf;
        return false;
    }

    std::size_t n_left_;
    std::vector<std::vector<std::size_t>> adj_;
    std::vector<std::size_t> match_l_, match_r_;
    std::vector<std::size_t> dist_;
};

/// Can the finite parts be matched with every assignment cost <= lambda?
///
/// Points whose diagonal cost exceeds lambda ("hard") must be matched across;
/// the rest can retire to the diagonal, so only those adjacent to a hard
/// opposite point are kept. The kept sets are completed with diagonal twins
/// (Edelsbrunner-Harer construction) and tested for a perfect matching.
inline bool finite_feasible(const std::vector<DiagramPoint>& A, const std::vector<DiagramPoint>& B,
                            double lambda) {
    std::vector<std::size_t> a_keep, b_keep;
    std::vector<char> a_hard(A.size()), b_hard(B.size());
    for (std::size_t j = 0; j < B.size(); ++j) b_hard[j] = diagonal_cost(B[j]) > lambda;
    for (std::size_t i = 0; i < A.size(); ++i) a_hard[i] = diagonal_cost(A[i]) > lambda;

    for (std::size_t i = 0; i < A.size(); ++i) {
        if (a_hard[i]) {
            a_keep.push_back(i);
            continue;
        }
        for (std::size_t j = 0; j < B.size(); ++j) {
            if (b_hard[j] && point_cost(A[i], B[j]) <= lambda) {
                a_keep.push_back(i);
                break;
            }
        }
    }
    for (std::size_t j = 0; j < B.size(); ++j) {
        if (b_hard[j]) {
            b_keep.push_back(j);
            continue;
        }
        for (std::size_t i = 0; i < A.size(); ++i) {
            if (a_hard[i] && point_cost(A[i], B[j]) <= lambda) {
                b_keep.push_back(j);
                break;
            }
        }
    }

    const std::size_t na = a_keep.size(), nb = b_keep.size();
    // left: kept A points then twins of kept B; right: kept B then twins of kept A
    HopcroftKarp hk(na + nb, nb + na);
    for (std::size_t li = 0; li < na; ++li) {
        const DiagramPoint& a = A[a_keep[li]];
        for (std::size_t rj = 0; rj < nb; ++rj)
            if (point_cost(a, B[b_keep[rj]]) <= lambda) hk.add_edge(li, rj);
        if (!a_hard[a_keep[li]]) hk.add_edge(li, nb + li);  // own diagonal
    }
    for (std::size_t lj = 0; lj < nb; ++lj) {
        std::size_t l = na + lj;
        if (!b_hard[b_keep[lj]]) hk.add_edge(l, lj);  // own diagonal
        for (std::size_t ri = 0; ri < na; ++ri) hk.add_edge(l, nb + ri);  // twin-twin, free
    }
    return hk.solve() == na + nb;
}

}  // namespace detail

/// Exact bottleneck distance between two degree-0 diagrams.
///
/// Finite points match finite points or the diagonal (cost (death-birth)/2);
/// essential points match essential points only. Returns +infinity when the
/// essential counts differ. The finite part is the smallest feasible value
/// among the O(n^2) candidate costs, found by binary search with a bipartite
/// matching feasibility test.
inline double bottleneck_distance(const PersistenceDiagram& d1, const PersistenceDiagram& d2) {
    if (d1.degree != d2.degree)
        throw std::invalid_argument("bottleneck_distance: diagrams have different degree");
    if (d1.essential.size() != d2.essential.size())
        return std::numeric_limits<double>::infinity();

    double ess = detail::essential_part(d1.essential, d2.essential);

    const auto& A = d1.finite;
    const auto& B = d2.finite;
    if (A.empty() && B.empty()) return ess;

    std::vector<double> candidates;
    candidates.reserve(A.size() * B.size() + A.size() + B.size() + 1);
    candidates.push_back(0.0);
    for (const auto& a : A) candidates.push_back(detail::diagonal_cost(a));
    for (const auto& b : B) candidates.push_back(detail::diagonal_cost(b));
    for (const auto& a : A)
        for (const auto& b : B) candidates.push_back(detail::point_cost(a, b));
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    // smallest feasible candidate; feasibility is monotone in lambda
    std::size_t lo = 0, hi = candidates.size() - 1;
    while (lo < hi) {
        std::size_t mid = (lo + hi) / 2;
        if (detail::finite_feasible(A, B, candidates[mid]))
            hi = mid;
        else
            lo = mid + 1;
    }
    return std::max(ess, candidates[lo]);
}

/// Brute-force reference: enumerates every matching (diagonal included) and
/// every essential pairing. Intended for small diagrams; rejects inputs with
/// more than 8 points on either side.
inline double bottleneck_oracle(const PersistenceDiagram& d1, const PersistenceDiagram& d2) {
    if (d1.degree != d2.degree)
        throw std::invalid_argument("bottleneck_oracle: diagrams have different degree");
    if (d1.size() > 8 || d2.size() > 8)
        throw std::invalid_argument("bottleneck_oracle: diagram too large (cap is 8 points)");
    if (d1.essential.size() != d2.essential.size())
        return std::numeric_limits<double>::infinity();

    double best_ess = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> perm(d2.essential.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    if (perm.empty()) {
        best_ess = 0.0;
    } else {
        do {
            double m = 0.0;
            for (std::size_t i = 0; i < perm.size(); ++i)
                m = std::max(m, std::abs(d1.essential[i] - d2.essential[perm[i]]));
            best_ess = std::min(best_ess, m);
        } while (std::next_permutation(perm.begin(), perm.end()));
    }

    const auto& A = d1.finite;
    const auto& B = d2.finite;
    double best_fin = std::numeric_limits<double>::infinity();
    std::vector<char> used(B.size(), 0);

    auto rec = [&](auto&& self, std::size_t i, double cur) -> void {
        if (cur >= best_fin) return;
        if (i == A.size()) {
            double total = cur;
            for (std::size_t j = 0; j < B.size(); ++j)
                if (!used[j]) total = std::max(total, detail::diagonal_cost(B[j]));
            best_fin = std::min(best_fin, total);
            return;
        }
        for (std::size_t j = 0; j < B.size(); ++j) {
            if (used[j]) continue;
            used[j] = 1;
            self(self, i + 1, std::max(cur, detail::point_cost(A[i], B[j])));
            used[j] = 0;
        }
        self(self, i + 1, std::max(cur, detail::diagonal_cost(A[i])));
    };
    rec(rec, 0, 0.0);

    return std::max(best_ess, best_fin);
}

}  // namespace giph
