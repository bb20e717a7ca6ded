#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "giph/dataset.hpp"
#include "giph/operators.hpp"
#include "giph/rng.hpp"

using namespace giph;

namespace {

const Operator& find_op(const std::vector<Operator>& ops, const std::string& name) {
    for (const auto& op : ops)
        if (op.name == name) return op;
    FAIL("operator not found: " << name);
    return ops.front();
}

std::set<std::string> names_of(const std::vector<Operator>& ops) {
    std::set<std::string> s;
    for (const auto& op : ops) s.insert(op.name);
    return s;
}

}  // namespace

TEST_CASE("builtin family sizes") {
    CHECK(builtin_set(Group::G1).size() == 5);
    CHECK(builtin_set(Group::G2).size() == 7);
    CHECK(builtin_set(Group::G3).size() == 10);
    CHECK(builtin_set(Group::G4).size() == 15);
    CHECK(builtin_set(Group::G5).size() == 20);
    CHECK(builtin_set(Group::ISO2).size() == 12);
}

TEST_CASE("families for nested groups reuse the broader group's operators") {
    auto g1 = names_of(builtin_set(Group::G1));
    auto g2 = names_of(builtin_set(Group::G2));
    auto g3 = names_of(builtin_set(Group::G3));
    auto g4 = names_of(builtin_set(Group::G4));
    auto g5 = names_of(builtin_set(Group::G5));
    CHECK(std::includes(g3.begin(), g3.end(), g1.begin(), g1.end()));
    CHECK(std::includes(g4.begin(), g4.end(), g3.begin(), g3.end()));
    CHECK(std::includes(g5.begin(), g5.end(), g4.begin(), g4.end()));
    // orientation-preserving reparametrizations keep only the pointwise pair
    std::set<std::string> common;
    std::set_intersection(g1.begin(), g1.end(), g2.begin(), g2.end(),
                          std::inserter(common, common.begin()));
    CHECK(common == std::set<std::string>{"F1a", "F1b"});
}

TEST_CASE("group membership") {
    CHECK(group_contains(Group::G1, AffineMap(-2.0, 3.0)));
    CHECK_FALSE(group_contains(Group::G2, AffineMap(-2.0, 3.0)));
    CHECK(group_contains(Group::G2, AffineMap(2.0, 3.0)));
    CHECK(group_contains(Group::G3, AffineMap(-1.0, 3.0)));
    CHECK_FALSE(group_contains(Group::G3, AffineMap(0.5, 0.0)));
    CHECK(group_contains(Group::G4, AffineMap(1.0, 3.0)));
    CHECK_FALSE(group_contains(Group::G4, AffineMap(-1.0, 0.0)));
    CHECK(group_contains(Group::G5, AffineMap(1.0, 0.0)));
    CHECK_FALSE(group_contains(Group::G5, AffineMap(1.0, 0.1)));
}

TEST_CASE("identity and negation act pointwise") {
    PLFunction f("", {{0.0, 0.0}, {0.5, 1.0}, {1.0, 0.0}});
    auto ops = builtin_set(Group::G1);
    Sampled1D id = apply_1d(find_op(ops, "F1a"), f, ApplyOptions{257, nullptr, {}});
    Sampled1D neg = apply_1d(find_op(ops, "F1b"), f, ApplyOptions{257, nullptr, {}});
    for (int k = 0; k < 257; ++k) {
        double x = id.grid.node(k);
        CHECK(id.values[static_cast<std::size_t>(k)] == f(x));
        CHECK(neg.values[static_cast<std::size_t>(k)] == -f(x));
    }
}

TEST_CASE("pointwise offset shifts the output by a constant") {
    PLFunction f("", {{0.0, 0.0}, {0.5, 1.0}, {1.0, 0.0}});
    Operator op{"off", Group::G1, OpKind::Pointwise, PointwiseParams{1.0, 0.25}};
    Sampled1D out = apply_1d(op, f, ApplyOptions{101, nullptr, {}});
    for (int k = 0; k < 101; ++k)
        CHECK(out.values[static_cast<std::size_t>(k)] ==
              Catch::Approx(f(out.grid.node(k)) + 0.25).margin(1e-15));
}

TEST_CASE("shift-max picks the largest shifted value") {
    PLFunction f("", {{0.0, 0.0}, {0.5, 1.0}, {1.0, 0.0}});
    auto ops = builtin_set(Group::G3);
    const Operator& f3a = find_op(ops, "F3a");
    Grid1D win{-1.0, 0.005, 601};
    Sampled1D out = apply_1d(f3a, f, ApplyOptions{601, &win, {}});
    for (int k = 0; k < win.n; ++k) {
        double x = win.node(k);
        double expect = std::max({f(x - 0.25), f(x), f(x + 0.25)});
        CHECK(out.values[static_cast<std::size_t>(k)] == Catch::Approx(expect).margin(1e-12));
    }
    // spot values: the peak spreads to x = 0.25 shifted positions
    CHECK(out.eval(0.25) == Catch::Approx(1.0).margin(1e-12));
    CHECK(out.eval(0.875) == Catch::Approx(0.75).margin(1e-12));  // max is f(0.875 - 0.25)
}

TEST_CASE("shift-avg averages the shifted values") {
    PLFunction f("", {{0.0, 0.0}, {0.5, 1.0}, {1.0, 0.0}});
    auto ops = builtin_set(Group::G3);
    const Operator& f3b = find_op(ops, "F3b");
    Grid1D win{-1.0, 0.005, 601};
    Sampled1D out = apply_1d(f3b, f, ApplyOptions{601, &win, {}});
    for (int k = 0; k < win.n; ++k) {
        double x = win.node(k);
        double expect = (f(x - 0.25) + f(x) + f(x + 0.25)) / 3.0;
        CHECK(out.values[static_cast<std::size_t>(k)] == Catch::Approx(expect).margin(1e-12));
    }
}

TEST_CASE("multiplicative profile operators evaluate as scale*(f+offset)*profile") {
    PLFunction f("", {{0.0, 0.0}, {0.5, 1.0}, {1.0, 0.0}});
    auto ops = builtin_set(Group::G5);
    const Operator& f5a = find_op(ops, "F5a");
    const Operator& f5c = find_op(ops, "F5c");
    Grid1D win{0.0, 0.01, 101};
    Sampled1D sa = apply_1d(f5a, f, ApplyOptions{101, &win, {}});
    Sampled1D sc = apply_1d(f5c, f, ApplyOptions{101, &win, {}});
    for (int k = 0; k < win.n; ++k) {
        double x = win.node(k);
        double ea = f(x) * std::sin(5.0 * std::numbers::pi * x);
        double t = (x - 0.25) / 0.1;
        double ec = (f(x) + 2.0) * std::exp(-t * t);
        CHECK(sa.values[static_cast<std::size_t>(k)] == Catch::Approx(ea).margin(1e-12));
        CHECK(sc.values[static_cast<std::size_t>(k)] == Catch::Approx(ec).margin(1e-12));
    }
}

TEST_CASE("builtin 1-d operators are non-expansive and equivariant on random inputs") {
    GenSpec1D spec;
    spec.count = 12;
    spec.seed = 5;
    auto fns = generate_1d(spec);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < fns.size(); ++i) pairs.emplace_back(i, (i + 1) % fns.size());
    CheckOptions copts{1024};
    double cell = 3.0 / 1023.0;
    double tol = 1e-6 + cell * spec.lipschitz_cap;
    Rng rng(99);
    for (Group g : {Group::G1, Group::G2, Group::G3, Group::G4, Group::G5}) {
        for (const Operator& op : builtin_set(g)) {
            INFO("group " << group_name(g) << " op " << op.name);
            auto elems = sample_group_elements(op.group, 6, rng);
            CHECK(check_nonexpansive(op, fns, pairs, copts) <= tol);
            CHECK(check_equivariance(op, fns, elems, copts) <= tol);
            CHECK(check_norm_bound(op, fns, copts) <= tol);
        }
    }
}

TEST_CASE("negative control: weights summing past 1 break non-expansiveness") {
    // M-shaped input vs the zero function; the averaged shifts add in phase.
    PLFunction m("", {{0.0, 0.0}, {0.25, 1.0}, {0.5, 0.0}, {0.75, 1.0}, {1.0, 0.0}});
    std::vector<PLFunction> pool{m, PLFunction::zero()};
    Operator bad{"bad", Group::G3, OpKind::ShiftCombine,
                 ShiftCombineParams{false, {-0.25, 0.25}, {0.75, 0.75}}};
    double v = check_nonexpansive(bad, pool, {{0, 1}}, CheckOptions{2048});
    CHECK(v >= 0.5 - 1e-2);
}

TEST_CASE("negative control: an oriented operator is not reflection-equivariant") {
    PLFunction f("", {{0.0, 0.0}, {0.2, 1.0}, {0.4, 0.0}});
    const Operator& f2a = find_op(builtin_set(Group::G2), "F2a");
    std::vector<AffineMap> reflect{AffineMap(-1.0, 1.0)};
    double v = check_equivariance(f2a, {f}, reflect, CheckOptions{2048});
    CHECK(v > 0.2);
}

TEST_CASE("extending the slope grid can only raise an affine-sup output") {
    PLFunction f("", {{0.0, 0.0}, {0.3, 0.8}, {0.6, -0.4}, {1.0, 0.0}});
    const Operator& f1c = find_op(builtin_set(Group::G1), "F1c");
    const auto& full = r_lattice_two_sided();
    std::vector<double> coarse;
    for (std::size_t i = 0; i < full.size(); i += 4) coarse.push_back(full[i]);
    Grid1D win = padded_grid(f, 512);
    Sampled1D dense = apply_1d(f1c, f, ApplyOptions{512, &win, full});
    Sampled1D sparse = apply_1d(f1c, f, ApplyOptions{512, &win, coarse});
    for (std::size_t k = 0; k < dense.values.size(); ++k)
        CHECK(dense.values[k] >= sparse.values[k] - 1e-15);
}

TEST_CASE("slope lattice is symmetric, includes 0 and 1, and spans [2^-12, 64]") {
    const auto& two = r_lattice_two_sided();
    const auto& ori = r_lattice_oriented();
    CHECK(std::count(two.begin(), two.end(), 0.0) == 1);
    CHECK(std::count(two.begin(), two.end(), 1.0) == 1);
    CHECK(std::count(two.begin(), two.end(), -1.0) == 1);
    CHECK(two.size() == 2 * 385 + 1);
    CHECK(ori.size() == 385 + 1);
    double mx = *std::max_element(two.begin(), two.end());
    CHECK(mx == 64.0);
    double smallest = 1e9;
    for (double r : two)
        if (r > 0) smallest = std::min(smallest, r);
    CHECK(smallest == Catch::Approx(std::exp2(-12.0)).margin(1e-18));
}

TEST_CASE("manifest round trip preserves every builtin operator") {
    for (Group g : {Group::G1, Group::G2, Group::G3, Group::G4, Group::G5, Group::ISO2}) {
        auto ops = builtin_set(g);
        auto back = manifest_parse([&] {
            std::vector<std::string> lines;
            std::string dump = manifest_dump(ops);
            std::size_t pos = 0;
            while (pos < dump.size()) {
                std::size_t nl = dump.find('\n', pos);
                lines.push_back(dump.substr(pos, nl - pos));
                pos = nl + 1;
            }
            return lines;
        }());
        REQUIRE(back.size() == ops.size());
        for (std::size_t i = 0; i < ops.size(); ++i) CHECK(back[i] == ops[i]);
    }
}

TEST_CASE("manifest parse reports the offending line") {
    std::vector<std::string> lines{R"({"name":"x","group":"G1","kind":"pointwise","params":{"scale":1.0}})",
                                   "{broken"};
    CHECK_THROWS_WITH(manifest_parse(lines), Catch::Matchers::ContainsSubstring("line 2"));
}

TEST_CASE("1-d kinds reject images and vice versa") {
    PLFunction f("", {{0.0, 0.0}, {0.5, 1.0}, {1.0, 0.0}});
    GridFunction2D img = make_grid2d("i", 8, 8, 0.1);
    auto iso = builtin_set(Group::ISO2);
    CHECK_THROWS(apply_1d(find_op(iso, "S2c1"), f));
    CHECK_THROWS(apply_2d(find_op(builtin_set(Group::G1), "F1c"), img));
    CHECK(is_2d_kind(find_op(iso, "S2c1")));
    CHECK(is_2d_kind(find_op(iso, "nS2c1")));
    CHECK(is_2d_kind(find_op(iso, "nS2id")));
    CHECK_FALSE(is_2d_kind(find_op(builtin_set(Group::G1), "F1a")));
}

TEST_CASE("constant-integral of the zero image is zero, and is renormalized otherwise") {
    auto iso = builtin_set(Group::ISO2);
    const Operator& s2int = find_op(iso, "S2int");
    GridFunction2D zero = make_grid2d("z", 20, 20, 0.05);
    GridFunction2D out = apply_2d(s2int, zero);
    for (double v : out.values) CHECK(v == 0.0);

    GenSpec2D spec;
    spec.count = 1;
    spec.seed = 9;
    spec.interior = 40;
    spec.ring = 4;
    GridFunction2D img = generate_2d(spec)[0];
    // nodes with coordinate in [0,1]: exactly the interior band
    double footprint = img.cell * img.cell * spec.interior * spec.interior;
    double expect = integral(img) * (footprint > 1.0 ? 1.0 / footprint : 1.0);
    GridFunction2D c = apply_2d(s2int, img);
    for (double v : c.values) CHECK(v == Catch::Approx(expect).margin(1e-12));
}

TEST_CASE("disk convolution matches a brute-force sum on a small random image") {
    GenSpec2D spec;
    spec.count = 1;
    spec.seed = 4;
    spec.interior = 32;
    spec.ring = 4;
    GridFunction2D img = generate_2d(spec)[0];
    auto iso = builtin_set(Group::ISO2);
    for (const char* name : {"S2c1", "S2c2", "S2c4"}) {
        const Operator& op = find_op(iso, name);
        const auto& p = std::get<RadialKernelParams>(op.params);
        GridFunction2D fast = apply_2d(op, img);

        // brute force with the same rasterization and renormalization rule
        double cell = img.cell;
        auto beta = [&](double r2) {
            for (std::size_t j = 0; j < p.radii.size(); ++j) {
                double pr = p.radii[j] / cell;
                if (r2 <= pr * pr) return p.levels[j];
            }
            return 0.0;
        };
        int bound = static_cast<int>(std::floor(p.radii.back() / cell)) + 1;
        double abs_mass = 0.0;
        for (int dy = -bound; dy <= bound; ++dy)
            for (int dx = -bound; dx <= bound; ++dx)
                abs_mass += std::abs(beta(static_cast<double>(dx) * dx + static_cast<double>(dy) * dy));
        abs_mass *= cell * cell;
        double scale = abs_mass > 1.0 ? 1.0 / abs_mass : 1.0;

        for (int y = 0; y < img.h; y += 7) {
            for (int x = 0; x < img.w; x += 5) {
                double acc = 0.0;
                for (int dy = -bound; dy <= bound; ++dy) {
                    for (int dx = -bound; dx <= bound; ++dx) {
                        int sx = x + dx, sy = y + dy;
                        if (sx < 0 || sx >= img.w || sy < 0 || sy >= img.h) continue;
                        acc += beta(static_cast<double>(dx) * dx + static_cast<double>(dy) * dy) *
                               img.at(sx, sy);
                    }
                }
                INFO(name << " at (" << x << "," << y << ")");
                CHECK(fast.at(x, y) == Catch::Approx(scale * cell * cell * acc).margin(1e-10));
            }
        }
    }
}

TEST_CASE("builtin image operators are non-expansive and symmetry-equivariant") {
    GenSpec2D spec;
    spec.count = 6;
    spec.seed = 6;
    spec.interior = 48;
    spec.ring = 5;
    auto imgs = generate_2d(spec);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < imgs.size(); ++i) pairs.emplace_back(i, (i + 1) % imgs.size());
    std::vector<int> d4{0, 1, 2, 3, 4, 5, 6, 7};
    for (const Operator& op : builtin_set(Group::ISO2)) {
        INFO("op " << op.name);
        CHECK(check_nonexpansive_2d(op, imgs, pairs) <= 1e-9);
        CHECK(check_equivariance_2d(op, imgs, d4) <= 1e-9);
        CHECK(check_norm_bound_2d(op, imgs) <= 1e-9);
    }
}

TEST_CASE("square symmetries are exact permutations") {
    GenSpec2D spec;
    spec.count = 1;
    spec.seed = 3;
    spec.interior = 24;
    spec.ring = 3;
    GridFunction2D img = generate_2d(spec)[0];
    GridFunction2D r = img;
    for (int t = 0; t < 4; ++t) r = d4_transform(r, 1);
    CHECK(r.values == img.values);  // four quarter turns are the identity
    GridFunction2D m = d4_transform(d4_transform(img, 4), 4);
    CHECK(m.values == img.values);  // mirroring twice is the identity
    std::set<std::vector<double>> distinct;
    for (int k = 0; k < 8; ++k) distinct.insert(d4_transform(img, k).values);
    CHECK(distinct.size() == 8);  // generic image: all symmetries differ
}

TEST_CASE("sample_group_elements respects the group constraints") {
    Rng rng(7);
    for (auto [g, sign_ok, b_ok] :
         {std::tuple{Group::G1, true, true}, std::tuple{Group::G2, false, true},
          std::tuple{Group::G3, false, true}, std::tuple{Group::G4, false, true},
          std::tuple{Group::G5, false, false}}) {
        auto elems = sample_group_elements(g, 64, rng);
        for (const AffineMap& m : elems) {
            CHECK(group_contains(g, m));
            if (!sign_ok && g != Group::G3) CHECK(m.a > 0.0);
            if (!b_ok) CHECK(m.b == 0.0);
        }
    }
    CHECK_THROWS(sample_group_elements(Group::ISO2, 4, rng));
}
