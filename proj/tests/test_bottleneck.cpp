#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "giph/bottleneck.hpp"
#include "giph/rng.hpp"

using namespace giph;

namespace {

PersistenceDiagram random_diagram(Rng& rng, std::size_t max_finite, std::size_t essential) {
    PersistenceDiagram d;
    std::size_t nf = rng.below(max_finite + 1);
    for (std::size_t i = 0; i < nf; ++i) {
        double b = rng.uniform(-1.0, 1.0);
        double p = rng.uniform(0.0, 1.0);
        d.finite.push_back({b, b + p});
    }
    for (std::size_t i = 0; i < essential; ++i) d.essential.push_back(rng.uniform(-1.0, 1.0));
    std::sort(d.finite.begin(), d.finite.end(), [](const DiagramPoint& a, const DiagramPoint& b) {
        return a.birth != b.birth ? a.birth < b.birth : a.death < b.death;
    });
    std::sort(d.essential.begin(), d.essential.end());
    return d;
}

}  // namespace

TEST_CASE("identical diagrams are at distance zero") {
    Rng rng(31);
    for (int t = 0; t < 50; ++t) {
        PersistenceDiagram d = random_diagram(rng, 4, 1);
        CHECK(bottleneck_distance(d, d) == 0.0);
    }
}

TEST_CASE("essential-only diagrams pair in sorted order") {
    PersistenceDiagram a, b;
    a.essential = {0.0, 1.0};
    b.essential = {0.3, 1.1};
    CHECK(bottleneck_distance(a, b) == 0.3);
}

TEST_CASE("mismatched essential counts give infinity") {
    PersistenceDiagram a, b;
    a.essential = {0.0};
    b.essential = {0.0, 1.0};
    CHECK(bottleneck_distance(a, b) == std::numeric_limits<double>::infinity());
    CHECK(bottleneck_oracle(a, b) == std::numeric_limits<double>::infinity());
}

TEST_CASE("a finite point either matches across or dies to the diagonal") {
    PersistenceDiagram a, b;
    a.essential = {-1.0};
    b.essential = {-1.0};
    a.finite = {{-0.5, 0.2}};
    // across: |(-0.5) - (-0.5)| vs diagonal (0.2 + 0.5)/2 = 0.35
    CHECK(bottleneck_distance(a, b) == 0.35);
    b.finite = {{-0.5, 0.2}};
    CHECK(bottleneck_distance(a, b) == 0.0);
}

TEST_CASE("a lone off-diagonal point costs half its persistence") {
    PersistenceDiagram a, b;
    a.finite = {{0.0, 1.0}};
    CHECK(bottleneck_distance(a, b) == 0.5);
    CHECK(bottleneck_distance(b, a) == 0.5);
}

TEST_CASE("matches the exhaustive oracle on 1000 random pairs") {
    Rng rng(32);
    for (int t = 0; t < 1000; ++t) {
        std::size_t ne = rng.below(3);
        PersistenceDiagram a = random_diagram(rng, 5, ne);
        PersistenceDiagram b = random_diagram(rng, 5, ne);
        double fast = bottleneck_distance(a, b);
        double slow = bottleneck_oracle(a, b);
        CHECK(fast == Catch::Approx(slow).margin(1e-9));
    }
}

TEST_CASE("symmetric in its arguments") {
    Rng rng(33);
    for (int t = 0; t < 200; ++t) {
        PersistenceDiagram a = random_diagram(rng, 6, 1);
        PersistenceDiagram b = random_diagram(rng, 6, 1);
        CHECK(bottleneck_distance(a, b) == bottleneck_distance(b, a));
    }
}

TEST_CASE("triangle inequality holds on random triples") {
    Rng rng(34);
    for (int t = 0; t < 300; ++t) {
        PersistenceDiagram a = random_diagram(rng, 4, 1);
        PersistenceDiagram b = random_diagram(rng, 4, 1);
        PersistenceDiagram c = random_diagram(rng, 4, 1);
        double ab = bottleneck_distance(a, b);
        double bc = bottleneck_distance(b, c);
        double ac = bottleneck_distance(a, c);
        CHECK(ac <= ab + bc + 1e-9);
    }
}

TEST_CASE("perturbing every coordinate by at most eps moves the distance by at most eps") {
    Rng rng(35);
    for (int t = 0; t < 200; ++t) {
        PersistenceDiagram a = random_diagram(rng, 5, 1);
        double eps = rng.uniform(0.0, 0.1);
        PersistenceDiagram b = a;
        for (auto& p : b.finite) {
            double db = rng.uniform(-eps, eps);
            double dd = rng.uniform(-eps, eps);
            p.birth += db;
            p.death += dd;
            if (p.death <= p.birth) p.death = p.birth + 1e-12;
        }
        for (double& e : b.essential) e += rng.uniform(-eps, eps);
        CHECK(bottleneck_distance(a, b) <= eps + 1e-12);
    }
}

TEST_CASE("degree mismatch is rejected") {
    PersistenceDiagram a, b;
    b.degree = 1;
    CHECK_THROWS(bottleneck_distance(a, b));
}

TEST_CASE("oracle rejects diagrams above its size cap") {
    Rng rng(36);
    PersistenceDiagram big = random_diagram(rng, 0, 9);
    PersistenceDiagram small = random_diagram(rng, 0, 9);
    CHECK_THROWS(bottleneck_oracle(big, small));
}
