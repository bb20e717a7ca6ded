#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "giph/bottleneck.hpp"
#include "giph/dataset.hpp"
#include "giph/io.hpp"
#include "giph/metrics.hpp"
#include "giph/operators.hpp"
#include "giph/parallel.hpp"
#include "giph/persistence.hpp"

namespace giph {

// --- diagram index -------------------------------------------------------------

/// Precomputed persistence diagrams for a dataset under an operator family.
/// Serialized as JSONL: a meta line first, then one record per (input,
/// operator) pair. The meta line pins the operator manifest (by content hash)
/// so a stale index is detected at load time.
class DiagramIndex {
  public:
    std::vector<std::string> ids;       // dataset order
    std::vector<std::string> op_names;  // family order
    std::string kind;                   // "1d" or "2d"
    std::string group;
    int resolution = 0;  // 0 for 2-d indexes
    std::string manifest_hash;

    static std::string hash_of(std::span<const Operator> ops) {
        return fnv1a_hex(manifest_dump(ops));
    }

    static DiagramIndex build_1d(const std::vector<PLFunction>& fns, std::span<const Operator> ops,
                                 Group g, int resolution, int workers = 0) {
        DiagramIndex idx;
        idx.kind = "1d";
        idx.group = std::string(group_name(g));
        idx.resolution = resolution;
        idx.manifest_hash = hash_of(ops);
        for (const auto& f : fns) idx.ids.push_back(f.id());
        for (const auto& op : ops) idx.op_names.push_back(op.name);
        std::vector<PersistenceDiagram> dgms(fns.size() * ops.size());
        parallel_for(fns.size(), resolve_workers(workers), [&](std::size_t i) {
            ApplyOptions ao{resolution, nullptr, {}};
            for (std::size_t j = 0; j < ops.size(); ++j) {
                try {
                    dgms[i * ops.size() + j] = diagram_1d(apply_1d(ops[j], fns[i], ao).values);
                } catch (const std::exception& e) {
                    throw std::runtime_error("index build failed at id '" + fns[i].id() +
                                             "' operator '" + ops[j].name + "': " + e.what());
                }
            }
        });
        idx.adopt(std::move(dgms));
        return idx;
    }

    static DiagramIndex build_2d(const std::vector<GridFunction2D>& imgs,
                                 std::span<const Operator> ops, int workers = 0) {
        DiagramIndex idx;
        idx.kind = "2d";
        idx.group = std::string(group_name(Group::ISO2));
        idx.resolution = 0;
        idx.manifest_hash = hash_of(ops);
        for (const auto& g : imgs) idx.ids.push_back(g.id);
        for (const auto& op : ops) idx.op_names.push_back(op.name);
        std::vector<PersistenceDiagram> dgms(imgs.size() * ops.size());
        parallel_for(imgs.size(), resolve_workers(workers), [&](std::size_t i) {
            for (std::size_t j = 0; j < ops.size(); ++j) {
                try {
                    dgms[i * ops.size() + j] = diagram_2d(apply_2d(ops[j], imgs[i]));
                } catch (const std::exception& e) {
                    throw std::runtime_error("index build failed at id '" + imgs[i].id +
                                             "' operator '" + ops[j].name + "': " + e.what());
                }
            }
        });
        idx.adopt(std::move(dgms));
        return idx;
    }

    const PersistenceDiagram& at(const std::string& id, const std::string& op) const {
        auto it = map_.find(id + "\x1f" + op);
        if (it == map_.end())
            throw std::out_of_range("index: no diagram for id '" + id + "' operator '" + op + "'");
        return diagrams_[it->second];
    }

    /// True when every (id, operator) combination has a diagram.
    bool complete() const {
        for (const auto& id : ids)
            for (const auto& op : op_names)
                if (!map_.contains(id + "\x1f" + op)) return false;
        return true;
    }

    std::string dump() const {
        nlohmann::json meta{{"meta",
                             {{"kind", kind},
                              {"group", group},
                              {"resolution", resolution},
                              {"manifest_hash", manifest_hash},
                              {"ids", ids},
                              {"operators", op_names}}}};
        std::string out = meta.dump() + "\n";
        for (const auto& id : ids)
            for (const auto& op : op_names) {
                nlohmann::json rec = diagram_fields(at(id, op));
                rec["id"] = id;
                rec["operator"] = op;
                out += rec.dump() + "\n";
            }
        return out;
    }

    static DiagramIndex parse(const std::vector<std::string>& lines, const std::string& origin) {
        if (lines.empty() || lines[0].empty())
            throw std::runtime_error(origin + ": missing meta line");
        DiagramIndex idx;
        try {
            nlohmann::json meta = nlohmann::json::parse(lines[0]).at("meta");
            idx.kind = meta.at("kind").get<std::string>();
            idx.group = meta.at("group").get<std::string>();
            idx.resolution = meta.at("resolution").get<int>();
            idx.manifest_hash = meta.at("manifest_hash").get<std::string>();
            idx.ids = meta.at("ids").get<std::vector<std::string>>();
            idx.op_names = meta.at("operators").get<std::vector<std::string>>();
        } catch (const std::exception& e) {
            throw std::runtime_error(origin + " line 1: " + e.what());
        }
        std::vector<PersistenceDiagram> dgms;
        std::vector<std::pair<std::string, std::string>> keys;
        for (std::size_t i = 1; i < lines.size(); ++i) {
            if (lines[i].empty()) continue;
            try {
                nlohmann::json rec = nlohmann::json::parse(lines[i]);
                keys.emplace_back(rec.at("id").get<std::string>(),
                                  rec.at("operator").get<std::string>());
                dgms.push_back(diagram_from_fields(rec));
            } catch (const std::exception& e) {
                throw std::runtime_error(origin + " line " + std::to_string(i + 1) + ": " + e.what());
            }
        }
        idx.diagrams_ = std::move(dgms);
        for (std::size_t k = 0; k < keys.size(); ++k)
            idx.map_[keys[k].first + "\x1f" + keys[k].second] = k;
        if (!idx.complete()) throw std::runtime_error(origin + ": index is incomplete");
        return idx;
    }

    void save(const std::string& path) const { write_file_atomic(path, dump()); }

    static DiagramIndex load(const std::string& path) { return parse(read_lines(path), path); }

    /// Throws when the index was built from a different operator family.
    void require_manifest(std::span<const Operator> ops) const {
        if (manifest_hash != hash_of(ops))
            throw std::runtime_error("index was built with a different operator manifest");
        for (std::size_t j = 0; j < ops.size(); ++j)
            if (j >= op_names.size() || op_names[j] != ops[j].name)
                throw std::runtime_error("index operator list does not match the manifest");
    }

  private:
    void adopt(std::vector<PersistenceDiagram> dgms) {
        diagrams_ = std::move(dgms);
        for (std::size_t i = 0; i < ids.size(); ++i)
            for (std::size_t j = 0; j < op_names.size(); ++j)
                map_[ids[i] + "\x1f" + op_names[j]] = i * op_names.size() + j;
    }

    std::vector<PersistenceDiagram> diagrams_;
    std::unordered_map<std::string, std::size_t> map_;
};

// --- queries ---------------------------------------------------------------------

struct QueryHit {
    int rank = 0;
    std::string id;
    double dmatch = 0.0;
    std::string argmax_op;
};

namespace detail {

inline std::vector<QueryHit> rank_hits(const DiagramIndex& idx, const std::string& query_id,
                                       const std::vector<PersistenceDiagram>& query_dgms,
                                       int workers) {
    struct Row {
        std::string id;
        double d;
        std::string arg;
    };
    std::vector<Row> rows(idx.ids.size());
    parallel_for(idx.ids.size(), resolve_workers(workers), [&](std::size_t i) {
        const std::string& id = idx.ids[i];
        double worst = -std::numeric_limits<double>::infinity();
        std::string arg;
        for (std::size_t j = 0; j < idx.op_names.size(); ++j) {
            double d = bottleneck_distance(query_dgms[j], idx.at(id, idx.op_names[j]));
            if (d > worst) {
                worst = d;
                arg = idx.op_names[j];
            }
        }
        rows[i] = Row{id, worst, std::move(arg)};
    });
    std::erase_if(rows, [&](const Row& r) { return r.id == query_id; });
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return a.d != b.d ? a.d < b.d : a.id < b.id;
    });
    std::vector<QueryHit> hits;
    hits.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        hits.push_back({static_cast<int>(i) + 1, rows[i].id, rows[i].d, rows[i].arg});
    return hits;
}

}  // namespace detail

/// Ranks the indexed inputs by matching distance to the query, ascending,
/// ties broken by id; an indexed entry with the query's own id is skipped.
/// k = 0 returns the full ranking, otherwise the top k.
inline std::vector<QueryHit> query_1d(const DiagramIndex& idx, const PLFunction& query,
                                      std::span<const Operator> ops, std::size_t k = 0,
                                      int workers = 0) {
    idx.require_manifest(ops);
    ApplyOptions ao{idx.resolution, nullptr, {}};
    std::vector<PersistenceDiagram> qd;
    qd.reserve(ops.size());
    for (const Operator& op : ops) qd.push_back(diagram_1d(apply_1d(op, query, ao).values));
    auto hits = detail::rank_hits(idx, query.id(), qd, workers);
    if (k > 0 && hits.size() > k) hits.resize(k);
    return hits;
}

inline std::vector<QueryHit> query_2d(const DiagramIndex& idx, const GridFunction2D& query,
                                      std::span<const Operator> ops, std::size_t k = 0,
                                      int workers = 0) {
    idx.require_manifest(ops);
    std::vector<PersistenceDiagram> qd;
    qd.reserve(ops.size());
    for (const Operator& op : ops) qd.push_back(diagram_2d(apply_2d(op, query)));
    auto hits = detail::rank_hits(idx, query.id, qd, workers);
    if (k > 0 && hits.size() > k) hits.resize(k);
    return hits;
}

inline std::string query_csv(const std::vector<QueryHit>& hits) {
    std::string out = "rank,id,dmatch,argmax_op\n";
    for (const auto& h : hits)
        out += std::to_string(h.rank) + "," + h.id + "," + format_double(h.dmatch) + "," +
               h.argmax_op + "\n";
    return out;
}

// --- benchmark ---------------------------------------------------------------------

struct BenchPair {
    std::string id1, id2;
    double dmatch = 0.0;
    double dg_upper = 0.0;
    std::string argmax_op;
};

struct BenchOptions {
    int resolution = 1024;
    std::size_t max_pairs = 1000000;  // subsample cap over all unordered pairs
    std::uint64_t seed = 1;           // subsampling seed
    int workers = 0;
    // Slack before a pair counts as a bound violation. The matching distance
    // is computed from diagrams of grid-sampled operator outputs, so it can
    // exceed the exact lower bound by the diagram sampling error. Negative
    // (default) selects a per-pair tolerance derived from the measured output
    // slopes: slack_i + slack_j + 1e-9 with slack_i = max adjacent sample
    // difference over all operators applied to function i (>= cell * slope / 2,
    // the interpolation error that perturbs diagram points).
    double bound_tolerance = -1.0;
    std::size_t fp_top_k = 5;  // k for the per-query false-positive measure
};

struct BenchmarkReport {
    std::string group;
    int resolution = 0;
    std::size_t pair_count = 0;
    double mean_dg = 0.0;
    double mae = 0.0;  // mean |dmatch - dg_upper|
    double mre = 0.0;  // mean relative error over pairs with dg_upper > 0
    bool has_mre = false;
    std::size_t excluded_zero_dg = 0;
    std::size_t bound_violations = 0;  // pairs with dmatch > dg_upper + tolerance
    double fp_rate_topk = 0.0;  // per-query: top-k by dmatch whose dg_upper exceeds the k-th dmatch
    bool has_fp_rate = false;   // only measured when every pair was evaluated
    nlohmann::json grid_settings;  // oracle grid / refinement parameters used
    std::vector<BenchPair> pairs;

    nlohmann::json summary() const {
        nlohmann::json j{{"group", group},
                         {"resolution", resolution},
                         {"pair_count", pair_count},
                         {"mean_dg", mean_dg},
                         {"mae", mae},
                         {"mre", has_mre ? nlohmann::json(mre) : nlohmann::json(nullptr)},
                         {"excluded_zero_dg", excluded_zero_dg},
                         {"bound_violations", bound_violations}};
        j["fp_rate_topk"] = has_fp_rate ? nlohmann::json(fp_rate_topk) : nlohmann::json(nullptr);
        j["grid"] = grid_settings;
        return j;
    }

    std::string csv() const {
        std::string out = "id1,id2,dmatch,dg_upper\n";
        for (const auto& p : pairs)
            out += p.id1 + "," + p.id2 + "," + format_double(p.dmatch) + "," +
                   format_double(p.dg_upper) + "\n";
        return out;
    }
};

/// All-pairs comparison of the matching distance (lower bound) against the
/// grid upper bound for the natural pseudo-distance. When the number of
/// unordered pairs exceeds options.max_pairs a seeded subsample is used.
inline BenchmarkReport run_benchmark(const std::vector<PLFunction>& fns,
                                     std::span<const Operator> ops, const GroupGrid& grid,
                                     const BenchOptions& opts = {}) {
    const std::size_t n = fns.size();
    std::vector<std::pair<std::size_t, std::size_t>> pair_idx;
    pair_idx.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) pair_idx.emplace_back(i, j);
    const bool complete = pair_idx.size() <= opts.max_pairs;
    if (!complete) {
        Rng rng(opts.seed);
        for (std::size_t k = 0; k < opts.max_pairs; ++k) {
            std::size_t pick = k + static_cast<std::size_t>(rng.below(pair_idx.size() - k));
            std::swap(pair_idx[k], pair_idx[pick]);
        }
        pair_idx.resize(opts.max_pairs);
        std::sort(pair_idx.begin(), pair_idx.end());
    }

    // diagrams once per (function, operator); alongside, record the worst
    // adjacent sample difference per function as its diagram sampling slack
    std::vector<PersistenceDiagram> dgms(n * ops.size());
    std::vector<double> slack(n, 0.0);
    int workers = resolve_workers(opts.workers);
    parallel_for(n, workers, [&](std::size_t i) {
        ApplyOptions ao{opts.resolution, nullptr, {}};
        double worst = 0.0;
        for (std::size_t j = 0; j < ops.size(); ++j) {
            Sampled1D out = apply_1d(ops[j], fns[i], ao);
            for (std::size_t k = 1; k < out.values.size(); ++k)
                worst = std::max(worst, std::abs(out.values[k] - out.values[k - 1]));
            dgms[i * ops.size() + j] = diagram_1d(out.values);
        }
        slack[i] = worst;
    });

    BenchmarkReport rep;
    rep.group = std::string(group_name(grid.group));
    rep.resolution = opts.resolution;
    rep.grid_settings = nlohmann::json{{"a_count", grid.a_values.size()},
                                       {"b_limit", grid.b_limit},
                                       {"b_coarse", grid.b_coarse},
                                       {"b_refine", grid.b_refine},
                                       {"b_levels", grid.b_levels},
                                       {"flat", grid.flat},
                                       {"include_disjoint", grid.include_disjoint}};
    rep.pair_count = pair_idx.size();
    rep.pairs.resize(pair_idx.size());
    parallel_for(pair_idx.size(), workers, [&](std::size_t k) {
        auto [i, j] = pair_idx[k];
        double worst = -std::numeric_limits<double>::infinity();
        std::string arg;
        for (std::size_t o = 0; o < ops.size(); ++o) {
            double d = bottleneck_distance(dgms[i * ops.size() + o], dgms[j * ops.size() + o]);
            if (d > worst) {
                worst = d;
                arg = ops[o].name;
            }
        }
        double dg = natural_pseudo_distance(fns[i], fns[j], grid).value;
        rep.pairs[k] = BenchPair{fns[i].id(), fns[j].id(), worst, dg, std::move(arg)};
    });

    double sum_dg = 0.0, sum_ae = 0.0, sum_re = 0.0;
    std::size_t rel_n = 0;
    for (std::size_t k = 0; k < rep.pairs.size(); ++k) {
        const auto& p = rep.pairs[k];
        sum_dg += p.dg_upper;
        double ae = std::abs(p.dmatch - p.dg_upper);
        sum_ae += ae;
        if (p.dg_upper > 1e-12) {
            sum_re += ae / p.dg_upper;
            ++rel_n;
        } else {
            ++rep.excluded_zero_dg;
        }
        double tol = opts.bound_tolerance >= 0.0
                         ? opts.bound_tolerance
                         : slack[pair_idx[k].first] + slack[pair_idx[k].second] + 1e-9;
        if (p.dmatch > p.dg_upper + tol) ++rep.bound_violations;
    }
    if (!rep.pairs.empty()) {
        rep.mean_dg = sum_dg / static_cast<double>(rep.pairs.size());
        rep.mae = sum_ae / static_cast<double>(rep.pairs.size());
    }
    if (rel_n > 0) {
        rep.mre = sum_re / static_cast<double>(rel_n);
        rep.has_mre = true;
    }

    // retrieval-style false positives: for each function as a query, rank the
    // rest by dmatch; a top-k hit whose dg_upper exceeds the k-th dmatch is a
    // false positive (the lower bound admitted it, the upper bound rules it
    // out). Only meaningful when the pair matrix is complete.
    if (complete && n > opts.fp_top_k + 1 && opts.fp_top_k > 0) {
        double fp_tol = opts.bound_tolerance >= 0.0
                            ? opts.bound_tolerance
                            : 2.0 * *std::max_element(slack.begin(), slack.end()) + 1e-9;
        std::vector<std::vector<std::pair<double, double>>> per_query(
            n);  // (dmatch, dg_upper) rows
        for (std::size_t k = 0; k < pair_idx.size(); ++k) {
            auto [i, j] = pair_idx[k];
            per_query[i].emplace_back(rep.pairs[k].dmatch, rep.pairs[k].dg_upper);
            per_query[j].emplace_back(rep.pairs[k].dmatch, rep.pairs[k].dg_upper);
        }
        std::size_t fp = 0, total = 0;
        for (auto& rows : per_query) {
            std::sort(rows.begin(), rows.end());
            double threshold = rows[opts.fp_top_k - 1].first;
            for (std::size_t r = 0; r < opts.fp_top_k; ++r, ++total)
                if (rows[r].second > threshold + fp_tol) ++fp;
        }
        rep.fp_rate_topk = total ? static_cast<double>(fp) / static_cast<double>(total) : 0.0;
        rep.has_fp_rate = true;
    }
    return rep;
}

}  // namespace giph
