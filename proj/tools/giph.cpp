// giph: compare real-valued filtering functions up to an invariance group by
// applying families of non-expansive equivariant operators, taking degree-0
// sublevel persistence diagrams, and bounding the natural pseudo-distance
// between the matching-distance lower bound and a group-grid upper bound.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "giph/bottleneck.hpp"
#include "giph/dataset.hpp"
#include "giph/io.hpp"
#include "giph/metrics.hpp"
#include "giph/operators.hpp"
#include "giph/parallel.hpp"
#include "giph/persistence.hpp"
#include "giph/pl_function.hpp"
#include "giph/retrieval.hpp"
#include "giph/rng.hpp"

namespace {

using namespace giph;

std::vector<Operator> load_ops(const std::string& group, const std::string& manifest_path) {
    if (!manifest_path.empty()) return manifest_parse(read_lines(manifest_path));
    return builtin_set(group_from_name(group));
}

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty() || out_path == "-")
        std::fwrite(content.data(), 1, content.size(), stdout);
    else
        write_file_atomic(out_path, content);
}

const PLFunction& find_fn(const std::vector<PLFunction>& fns, const std::string& id) {
    for (const auto& f : fns)
        if (f.id() == id) return f;
    throw std::runtime_error("unknown function id: " + id);
}

const GridFunction2D& find_img(const std::vector<GridFunction2D>& imgs, const std::string& id) {
    for (const auto& g : imgs)
        if (g.id == id) return g;
    throw std::runtime_error("unknown image id: " + id);
}

// ---- check subcommand ------------------------------------------------------

struct CheckCounters {
    int failures = 0;
    void report(const std::string& name, double violation, double tolerance) {
        bool ok = violation <= tolerance;
        if (!ok) ++failures;
        std::printf("%s %-44s violation=%.3e tolerance=%.3e\n", ok ? "ok  " : "FAIL", name.c_str(),
                    violation, tolerance);
    }
    void report_bool(const std::string& name, bool ok, const std::string& detail) {
        if (!ok) ++failures;
        std::printf("%s %-44s %s\n", ok ? "ok  " : "FAIL", name.c_str(), detail.c_str());
    }
};

void check_group_1d(Group g, int count, std::uint64_t seed, int resolution, CheckCounters& cc) {
    GenSpec1D spec;
    spec.count = count;
    spec.seed = seed;
    std::vector<PLFunction> fns = generate_1d(spec);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < fns.size(); ++i) pairs.emplace_back(i, (i + 1) % fns.size());
    double cell = 3.0 / (resolution - 1);
    double tol = 1e-6 + cell * spec.lipschitz_cap;
    CheckOptions copts{resolution};
    Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
    for (const Operator& op : builtin_set(g)) {
        std::vector<AffineMap> elems = sample_group_elements(op.group, 8, rng);
        std::string tag = std::string(group_name(g)) + "/" + op.name;
        cc.report(tag + " non-expansive", check_nonexpansive(op, fns, pairs, copts), tol);
        cc.report(tag + " equivariant", check_equivariance(op, fns, elems, copts), tol);
        cc.report(tag + " norm-bounded", check_norm_bound(op, fns, copts), tol);
    }
}

void check_group_2d(int count, std::uint64_t seed, int interior, CheckCounters& cc) {
    GenSpec2D spec;
    spec.count = count;
    spec.seed = seed;
    spec.interior = interior;
    std::vector<GridFunction2D> imgs = generate_2d(spec);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < imgs.size(); ++i) pairs.emplace_back(i, (i + 1) % imgs.size());
    double tol = 1e-6;
    Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<int> d4(8);
    for (int k = 0; k < 8; ++k) d4[static_cast<std::size_t>(k)] = k;
    for (const Operator& op : builtin_set(Group::ISO2)) {
        std::string tag = "ISO2/" + op.name;
        cc.report(tag + " non-expansive", check_nonexpansive_2d(op, imgs, pairs), tol);
        cc.report(tag + " equivariant", check_equivariance_2d(op, imgs, d4), tol);
        cc.report(tag + " norm-bounded", check_norm_bound_2d(op, imgs), tol);
    }
}

void run_demos(int resolution, CheckCounters& cc) {
    // Two far-apart copies of the same bump: identical diagrams (matching
    // distance 0) while the sup distance is 1.
    {
        PLFunction b1("bump1", {{0.0, 0.0}, {0.5, 1.0}, {1.0, 0.0}});
        PLFunction b2("bump2", {{2.0, 0.0}, {2.5, 1.0}, {3.0, 0.0}});
        PersistenceDiagram d1 = diagram_of_pl(b1, resolution);
        PersistenceDiagram d2 = diagram_of_pl(b2, resolution);
        double b = bottleneck_distance(d1, d2);
        double s = sup_distance(b1, b2);
        cc.report_bool("disjoint-bumps: diagrams match, sup = 1", b == 0.0 && s == 1.0,
                       "bottleneck=" + format_double(b) + " sup=" + format_double(s));
    }
    // Minimum over a non-group set of shifts breaks the triangle inequality.
    {
        const long n = 4096;
        std::vector<double> vsin(n), vcos(n), vnsin(n);
        for (long i = 0; i < n; ++i) {
            double th = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
            vsin[static_cast<std::size_t>(i)] = std::sin(th);
            vcos[static_cast<std::size_t>(i)] = std::cos(th);
            vnsin[static_cast<std::size_t>(i)] = -std::sin(th);
        }
        std::vector<long> shifts{0, -n / 4};
        double a = mu_s_periodic(vsin, vnsin, shifts);
        double b = mu_s_periodic(vsin, vcos, shifts);
        double c = mu_s_periodic(vcos, vnsin, shifts);
        bool ok = std::abs(a - std::numbers::sqrt2) <= 0.01 && b <= 0.01 && c <= 0.01 && a > b + c;
        cc.report_bool("periodic-min: triangle inequality fails", ok,
                       "values=" + format_double(a) + "," + format_double(b) + "," +
                           format_double(c));
    }
    // Constant-max vs constant-integral family separation via narrow tents.
    {
        std::vector<PLFunction> probes;
        for (int i = 1; i <= 128; i *= 2) probes.push_back(tent_probe(i));
        double d = estimate_df(constant_max_functor(resolution), constant_integral_functor(resolution),
                               probes);
        cc.report_bool("family-separation >= 0.99", d >= 0.99, "estimate=" + format_double(d));
    }
    // Constant-level family realizes the sup distance exactly.
    {
        GenSpec1D spec;
        spec.count = 2;
        spec.seed = 77;
        auto fns = generate_1d(spec);
        std::vector<PLFunction> probes{fns[1]};
        double d = d_match_fpsi(fns[0], fns[1], probes, ApplyOptions{resolution, nullptr, {}});
        double s = sup_distance(fns[0], fns[1]);
        cc.report_bool("constant-level family realizes sup distance", std::abs(d - s) <= 1e-9,
                       "dmatch=" + format_double(d) + " sup=" + format_double(s));
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "compare functions up to an invariance group via persistence diagrams "
        "of non-expansive equivariant operators"};
    app.require_subcommand(1);

    std::uint64_t seed = 1;
    int workers = 0;
    app.add_option("--seed", seed, "global random seed")->envname("GIPH_SEED");
    app.add_option("--workers", workers, "worker thread count (0 = hardware)")
        ->envname("GIPH_WORKERS");

    std::function<int()> action;

    // gen1d
    {
        auto* cmd = app.add_subcommand("gen1d", "generate random piecewise-linear functions");
        auto spec = std::make_shared<GenSpec1D>();
        auto out = std::make_shared<std::string>();
        cmd->add_option("--count", spec->count, "number of functions")->required();
        cmd->add_option("--out", *out, "output JSONL path")->required();
        cmd->add_option("--interior-points", spec->interior_points, "interior breakpoints");
        cmd->add_option("--lipschitz", spec->lipschitz_cap, "Lipschitz cap");
        cmd->add_option("--prefix", spec->id_prefix, "id prefix");
        cmd->callback([&, spec, out] {
            action = [&, spec, out] {
                spec->seed = seed;
                save_pl_dataset(*out, generate_1d(*spec));
                return 0;
            };
        });
    }

    // gen2d
    {
        auto* cmd = app.add_subcommand("gen2d", "generate random bump images");
        auto spec = std::make_shared<GenSpec2D>();
        auto out = std::make_shared<std::string>();
        cmd->add_option("--count", spec->count, "number of images")->required();
        cmd->add_option("--out", *out, "output JSONL path")->required();
        cmd->add_option("--interior", spec->interior, "nodes per axis covering the unit square");
        cmd->add_option("--ring", spec->ring, "zero-padding nodes per side");
        cmd->add_option("--min-bumps", spec->min_bumps, "minimum bump count");
        cmd->add_option("--max-bumps", spec->max_bumps, "maximum bump count");
        cmd->add_option("--prefix", spec->id_prefix, "id prefix");
        cmd->callback([&, spec, out] {
            action = [&, spec, out] {
                spec->seed = seed;
                save_image_dataset(*out, generate_2d(*spec));
                return 0;
            };
        });
    }

    // index
    {
        auto* cmd = app.add_subcommand("index", "precompute per-operator diagrams for a dataset");
        auto dataset = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto group = std::make_shared<std::string>("G1");
        auto manifest = std::make_shared<std::string>();
        auto resolution = std::make_shared<int>(1024);
        cmd->add_option("--dataset", *dataset, "dataset JSONL path")->required();
        cmd->add_option("--out", *out, "output index path")->required();
        cmd->add_option("--group", *group, "builtin operator set (G1..G5, ISO2)");
        cmd->add_option("--manifest", *manifest, "operator manifest path (overrides --group)");
        cmd->add_option("--resolution", *resolution, "sampling resolution (1-d)");
        cmd->callback([&, dataset, out, group, manifest, resolution] {
            action = [&, dataset, out, group, manifest, resolution] {
                auto ops = load_ops(*group, *manifest);
                Group g = group_from_name(*group);
                DiagramIndex idx =
                    g == Group::ISO2
                        ? DiagramIndex::build_2d(load_image_dataset(*dataset), ops, workers)
                        : DiagramIndex::build_1d(load_pl_dataset(*dataset), ops, g, *resolution,
                                                 workers);
                idx.save(*out);
                return 0;
            };
        });
    }

    // query
    {
        auto* cmd = app.add_subcommand("query", "rank a dataset by matching distance to a query");
        auto index_path = std::make_shared<std::string>();
        auto dataset = std::make_shared<std::string>();
        auto id = std::make_shared<std::string>();
        auto group = std::make_shared<std::string>("G1");
        auto manifest = std::make_shared<std::string>();
        auto k = std::make_shared<std::size_t>(0);
        auto out = std::make_shared<std::string>();
        cmd->add_option("--index", *index_path, "index path")->required();
        cmd->add_option("--dataset", *dataset, "dataset JSONL path (query id lookup)")->required();
        cmd->add_option("--id", *id, "query id")->required();
        cmd->add_option("--group", *group, "builtin operator set");
        cmd->add_option("--manifest", *manifest, "operator manifest path");
        cmd->add_option("--k", *k, "top-k cutoff (0 = all)");
        cmd->add_option("--out", *out, "output CSV path (default stdout)");
        cmd->callback([&, index_path, dataset, id, group, manifest, k, out] {
            action = [&, index_path, dataset, id, group, manifest, k, out] {
                auto ops = load_ops(*group, *manifest);
                DiagramIndex idx = DiagramIndex::load(*index_path);
                std::vector<QueryHit> hits;
                if (group_from_name(*group) == Group::ISO2) {
                    auto imgs = load_image_dataset(*dataset);
                    hits = query_2d(idx, find_img(imgs, *id), ops, *k, workers);
                } else {
                    auto fns = load_pl_dataset(*dataset);
                    hits = query_1d(idx, find_fn(fns, *id), ops, *k, workers);
                }
                emit(*out, query_csv(hits));
                return 0;
            };
        });
    }

    // bench
    {
        auto* cmd = app.add_subcommand(
            "bench", "all-pairs matching distance vs. group-grid upper bound");
        auto group = std::make_shared<std::string>("G1");
        auto count = std::make_shared<int>(100);
        auto dataset = std::make_shared<std::string>();
        auto opts = std::make_shared<BenchOptions>();
        auto exact_grid = std::make_shared<bool>(false);
        auto out_csv = std::make_shared<std::string>();
        auto out_json = std::make_shared<std::string>();
        cmd->add_option("--group", *group, "invariance group (G1..G5)")->required();
        cmd->add_option("--count", *count, "dataset size when generating internally");
        cmd->add_option("--dataset", *dataset, "use an existing dataset instead of generating");
        cmd->add_option("--resolution", opts->resolution, "sampling resolution");
        cmd->add_option("--max-pairs", opts->max_pairs, "pair subsample cap");
        cmd->add_flag("--exact-grid", *exact_grid,
                      "flat 0.01-step group grid (orders of magnitude slower)");
        cmd->add_option("--out-csv", *out_csv, "per-pair CSV path");
        cmd->add_option("--out-json", *out_json, "summary JSON path");
        cmd->callback([&, group, count, dataset, opts, exact_grid, out_csv, out_json] {
            action = [&, group, count, dataset, opts, exact_grid, out_csv, out_json] {
                Group g = group_from_name(*group);
                std::vector<PLFunction> fns;
                if (!dataset->empty()) {
                    fns = load_pl_dataset(*dataset);
                } else {
                    GenSpec1D spec;
                    spec.count = *count;
                    spec.seed = seed;
                    fns = generate_1d(spec);
                }
                GroupGrid grid = *exact_grid ? GroupGrid::flat_grid(g) : GroupGrid::defaults(g);
                opts->seed = seed;
                opts->workers = workers;
                auto ops = builtin_set(g);
                BenchmarkReport rep = run_benchmark(fns, ops, grid, *opts);
                std::string json = rep.summary().dump(2) + "\n";
                std::fwrite(json.data(), 1, json.size(), stdout);
                if (!out_csv->empty()) write_file_atomic(*out_csv, rep.csv());
                if (!out_json->empty()) write_file_atomic(*out_json, json);
                return 0;
            };
        });
    }

    // check
    {
        auto* cmd = app.add_subcommand(
            "check", "operator property suites and the library's demonstration cases");
        auto group = std::make_shared<std::string>();
        auto count = std::make_shared<int>(40);
        auto resolution = std::make_shared<int>(1024);
        auto image_interior = std::make_shared<int>(64);
        cmd->add_option("--group", *group, "restrict to one group (default: all + demos)");
        cmd->add_option("--count", *count, "inputs per property suite");
        cmd->add_option("--resolution", *resolution, "sampling resolution");
        cmd->add_option("--image-interior", *image_interior, "image nodes per axis for ISO2");
        cmd->callback([&, group, count, resolution, image_interior] {
            action = [&, group, count, resolution, image_interior] {
                CheckCounters cc;
                auto run_one = [&](Group g) {
                    if (g == Group::ISO2)
                        check_group_2d(*count, seed, *image_interior, cc);
                    else
                        check_group_1d(g, *count, seed, *resolution, cc);
                };
                if (!group->empty()) {
                    run_one(group_from_name(*group));
                } else {
                    for (Group g : {Group::G1, Group::G2, Group::G3, Group::G4, Group::G5,
                                    Group::ISO2})
                        run_one(g);
                    run_demos(*resolution, cc);
                }
                if (cc.failures) std::printf("%d check(s) failed\n", cc.failures);
                return cc.failures ? 1 : 0;
            };
        });
    }

    // dist
    {
        auto* cmd = app.add_subcommand("dist", "matching distance and d_G upper bound for one pair");
        auto dataset = std::make_shared<std::string>();
        auto group = std::make_shared<std::string>("G1");
        auto manifest = std::make_shared<std::string>();
        auto id1 = std::make_shared<std::string>();
        auto id2 = std::make_shared<std::string>();
        auto resolution = std::make_shared<int>(1024);
        auto out = std::make_shared<std::string>();
        cmd->add_option("--dataset", *dataset, "dataset JSONL path")->required();
        cmd->add_option("--id1", *id1, "first id")->required();
        cmd->add_option("--id2", *id2, "second id")->required();
        cmd->add_option("--group", *group, "invariance group");
        cmd->add_option("--manifest", *manifest, "operator manifest path");
        cmd->add_option("--resolution", *resolution, "sampling resolution");
        cmd->add_option("--out", *out, "output CSV path (default stdout)");
        cmd->callback([&, dataset, group, manifest, id1, id2, resolution, out] {
            action = [&, dataset, group, manifest, id1, id2, resolution, out] {
                auto ops = load_ops(*group, *manifest);
                Group g = group_from_name(*group);
                std::string csv = "id1,id2,dmatch,argmax_op,dG_upper,resolution\n";
                if (g == Group::ISO2) {
                    auto imgs = load_image_dataset(*dataset);
                    const auto& a = find_img(imgs, *id1);
                    const auto& b = find_img(imgs, *id2);
                    DmatchResult r = d_match_sup_2d(a, b, ops);
                    double dg = natural_pseudo_distance_2d(a, b);
                    csv += *id1 + "," + *id2 + "," + format_double(r.value) + "," + r.argmax_op +
                           "," + format_double(dg) + ",0\n";
                } else {
                    auto fns = load_pl_dataset(*dataset);
                    const auto& a = find_fn(fns, *id1);
                    const auto& b = find_fn(fns, *id2);
                    ApplyOptions ao{*resolution, nullptr, {}};
                    DmatchResult r = d_match_sup(a, b, ops, nullptr, ao);
                    double dg = natural_pseudo_distance(a, b, GroupGrid::defaults(g)).value;
                    csv += *id1 + "," + *id2 + "," + format_double(r.value) + "," + r.argmax_op +
                           "," + format_double(dg) + "," + std::to_string(*resolution) + "\n";
                }
                emit(*out, csv);
                return 0;
            };
        });
    }

    CLI11_PARSE(app, argc, argv);
    try {
        return action();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
