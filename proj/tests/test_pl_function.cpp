#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "giph/pl_function.hpp"
#include "giph/rng.hpp"

using namespace giph;

namespace {

PLFunction tent(double lo, double peak_x, double hi, double peak_y = 1.0) {
    return PLFunction({{lo, 0.0}, {peak_x, peak_y}, {hi, 0.0}});
}

PLFunction random_pl(Rng& rng, int interior = 6) {
    std::vector<double> xs(static_cast<std::size_t>(interior));
    for (double& x : xs) x = rng.uniform(0.05, 0.95);
    std::sort(xs.begin(), xs.end());
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (xs[i] - xs[i - 1] < 1e-6) xs[i] = xs[i - 1] + 1e-6;
    std::vector<Breakpoint> bp{{0.0, 0.0}};
    for (double x : xs) bp.push_back({x, rng.uniform(-1.0, 1.0)});
    bp.push_back({1.0, 0.0});
    return PLFunction(std::move(bp));
}

}  // namespace

TEST_CASE("evaluation interpolates and vanishes outside the support") {
    PLFunction f = tent(0.0, 0.5, 1.0);
    CHECK(f(0.5) == 1.0);
    CHECK(f(0.25) == 0.5);
    CHECK(f(0.75) == 0.5);
    CHECK(f(-3.0) == 0.0);
    CHECK(f(0.0) == 0.0);
    CHECK(f(1.0) == 0.0);
    CHECK(f(42.0) == 0.0);
}

TEST_CASE("constructor rejects malformed breakpoint lists") {
    CHECK_THROWS(PLFunction({{0.0, 0.0}}));
    CHECK_THROWS(PLFunction({{0.0, 0.0}, {0.0, 0.0}}));          // not strictly increasing
    CHECK_THROWS(PLFunction({{0.0, 0.5}, {1.0, 0.0}}));          // nonzero left endpoint
    CHECK_THROWS(PLFunction({{0.0, 0.0}, {1.0, 0.5}}));          // nonzero right endpoint
    CHECK_THROWS(PLFunction({{1.0, 0.0}, {0.0, 0.0}}));          // decreasing x
}

TEST_CASE("affine map composition and inverse") {
    AffineMap g(2.0, 1.0);
    AffineMap h(-0.5, 3.0);
    AffineMap gh = g.after(h);
    for (double x : {-2.0, 0.0, 0.7, 5.0}) CHECK(gh(x) == g(h(x)));
    AffineMap gi = g.inverse();
    CHECK(gi(g(0.3)) == Catch::Approx(0.3).margin(1e-15));
    CHECK_THROWS(AffineMap(0.0, 1.0));
}

TEST_CASE("compose_affine is exact: evaluation equals f(a x + b)") {
    Rng rng(11);
    for (int t = 0; t < 1000; ++t) {
        PLFunction f = random_pl(rng);
        double a = rng.uniform(-3.0, 3.0);
        if (std::abs(a) < 0.05) a = 0.5;
        double b = rng.uniform(-2.0, 2.0);
        AffineMap g(a, b);
        PLFunction fg = compose_affine(f, g);
        double x = rng.uniform(-1.0, 2.0);
        CHECK(fg(x) == Catch::Approx(f(g(x))).margin(1e-12));
    }
}

TEST_CASE("compose_affine with the identity returns the same breakpoints") {
    PLFunction f = tent(0.0, 0.5, 1.0);
    PLFunction g = compose_affine(f, AffineMap(1.0, 0.0));
    CHECK(f == g);
}

TEST_CASE("compose_affine with a shift moves the support") {
    PLFunction f = tent(0.0, 0.5, 1.0);
    PLFunction g = compose_affine(f, AffineMap(1.0, -2.0));  // (f o g)(x) = f(x - 2)
    CHECK(g.support_lo() == 2.0);
    CHECK(g.support_hi() == 3.0);
    CHECK(g(2.5) == 1.0);
}

TEST_CASE("compose_affine with a reflection fixes a symmetric tent") {
    PLFunction f = tent(-1.0, 0.0, 1.0);
    PLFunction g = compose_affine(f, AffineMap(-1.0, 0.0));
    CHECK(sup_distance(f, g) == 0.0);
}

TEST_CASE("composition is associative: (f o g) o h == f o (g.after(h))") {
    Rng rng(12);
    for (int t = 0; t < 200; ++t) {
        PLFunction f = random_pl(rng);
        AffineMap g(rng.uniform(0.2, 3.0), rng.uniform(-1.0, 1.0));
        AffineMap h(rng.uniform(-3.0, -0.2), rng.uniform(-1.0, 1.0));
        PLFunction lhs = compose_affine(compose_affine(f, g), h);
        PLFunction rhs = compose_affine(f, g.after(h));
        // identical up to roundoff in the chained coefficient arithmetic
        CHECK(sup_distance(lhs, rhs) <= 1e-9);
    }
}

TEST_CASE("sup_distance basics") {
    PLFunction f = tent(0.0, 0.5, 1.0);
    CHECK(sup_distance(f, f) == 0.0);
    CHECK(sup_distance(f, PLFunction::zero()) == 1.0);
    PLFunction far_copy = tent(2.0, 2.5, 3.0);
    CHECK(sup_distance(f, far_copy) == 1.0);  // disjoint supports
    PLFunction taller = tent(0.0, 0.5, 1.0, 1.75);
    CHECK(sup_distance(f, taller) == 0.75);
}

TEST_CASE("sup_distance is a metric on sampled checks") {
    Rng rng(13);
    for (int t = 0; t < 200; ++t) {
        PLFunction a = random_pl(rng), b = random_pl(rng), c = random_pl(rng);
        double dab = sup_distance(a, b);
        double dba = sup_distance(b, a);
        CHECK(dab == dba);
        CHECK(dab >= 0.0);
        CHECK(sup_distance(a, c) <= dab + sup_distance(b, c) + 1e-12);
    }
}

TEST_CASE("sup_distance_composed matches the explicit composition") {
    Rng rng(14);
    for (int t = 0; t < 300; ++t) {
        PLFunction f1 = random_pl(rng), f2 = random_pl(rng);
        double a = rng.next_double() < 0.5 ? rng.uniform(0.2, 4.0) : rng.uniform(-4.0, -0.2);
        AffineMap g(a, rng.uniform(-2.0, 2.0));
        double fast = sup_distance_composed(f1, f2, g);
        double slow = sup_distance(f1, compose_affine(f2, g));
        CHECK(fast == Catch::Approx(slow).margin(1e-12));
    }
}

TEST_CASE("sup norm is invariant under |a| = 1 reparametrization") {
    Rng rng(15);
    for (int t = 0; t < 100; ++t) {
        PLFunction f = random_pl(rng);
        AffineMap g(rng.next_double() < 0.5 ? 1.0 : -1.0, rng.uniform(-3.0, 3.0));
        CHECK(sup_norm(f) == sup_norm(compose_affine(f, g)));
    }
}

TEST_CASE("lipschitz_constant of a unit tent is 2 and matches a slope scan") {
    PLFunction f = tent(0.0, 0.5, 1.0);
    CHECK(lipschitz_constant(f) == 2.0);
    Rng rng(16);
    for (int t = 0; t < 100; ++t) {
        PLFunction g = random_pl(rng);
        const auto& bp = g.breakpoints();
        double expect = 0.0;
        for (std::size_t i = 1; i < bp.size(); ++i)
            expect = std::max(expect,
                              std::abs((bp[i].y - bp[i - 1].y) / (bp[i].x - bp[i - 1].x)));
        CHECK(lipschitz_constant(g) == expect);
    }
}

TEST_CASE("integral and max_value of simple shapes") {
    PLFunction f = tent(0.0, 0.5, 1.0);
    CHECK(integral(f) == 0.5);
    CHECK(max_value(f) == 1.0);
    PLFunction dip({{0.0, 0.0}, {0.5, -1.0}, {1.0, 0.0}});
    CHECK(integral(dip) == -0.5);
    CHECK(max_value(dip) == 0.0);  // the zero extension dominates
}

TEST_CASE("padded window extends one support width each side") {
    PLFunction f = tent(1.0, 1.5, 2.0);
    Grid1D g = padded_grid(f, 101);
    CHECK(g.x0 == 0.0);
    CHECK(g.hi() == Catch::Approx(3.0).margin(1e-12));
    CHECK(g.n == 101);
    CHECK(g.dx == Catch::Approx(0.03).margin(1e-15));
}

TEST_CASE("sample evaluates exactly at the nodes") {
    PLFunction f = tent(0.0, 0.5, 1.0);
    Grid1D g{0.0, 0.25, 5};
    std::vector<double> v = sample(f, g);
    CHECK(v == std::vector<double>{0.0, 0.5, 1.0, 0.5, 0.0});
}

TEST_CASE("accumulate_samples agrees with direct evaluation") {
    Rng rng(17);
    for (int t = 0; t < 100; ++t) {
        PLFunction f = random_pl(rng);
        Grid1D g{rng.uniform(-2.0, 0.0), rng.uniform(0.001, 0.01), 512};
        double w = rng.uniform(-1.0, 1.0);
        std::vector<double> acc(512, 0.5);
        accumulate_samples(f, g.x0, g.dx, g.n, w, acc.data());
        for (int k = 0; k < g.n; ++k) {
            double expect = 0.5 + w * f(g.node(k));
            CHECK(acc[static_cast<std::size_t>(k)] == Catch::Approx(expect).margin(1e-12));
        }
    }
}

TEST_CASE("Sampled1D eval interpolates and clamps") {
    Sampled1D s{Grid1D{0.0, 0.5, 3}, {1.0, 2.0, 5.0}};
    CHECK(s.eval(0.25) == 1.5);
    CHECK(s.eval(-10.0) == 1.0);
    CHECK(s.eval(10.0) == 5.0);
    CHECK(s.max_abs() == 5.0);
}

TEST_CASE("JSON round trip preserves the function exactly") {
    Rng rng(18);
    for (int t = 0; t < 50; ++t) {
        PLFunction f = random_pl(rng);
        f.set_id("probe-" + std::to_string(t));
        PLFunction g = pl_from_json(to_json(f));
        CHECK(f == g);
        CHECK(g.id() == f.id());
    }
    CHECK_THROWS(pl_from_json(nlohmann::json{{"id", "x"}}));
}
