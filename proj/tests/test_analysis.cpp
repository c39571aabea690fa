#include "firesale/analysis.hpp"
#include "firesale/errors.hpp"
#include "firesale/registry.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <sstream>

using namespace firesale;
using namespace firesale::testing;
using doctest::Approx;

TEST_SUITE("equilibrium reports") {
    TEST_CASE("maximal equilibria") {
        const auto e2 = maximalEquilibrium(bundledGame("ex_cycle_convex"));
        CHECK(e2.profile == StrategyProfile::ones(3));
        CHECK(e2.isExact);
        CHECK(e2.maximal);
        for (std::size_t n : {10u, 100u}) {
            const auto bad = maximalEquilibrium(badEquilibriumGame(n));
            CHECK(bad.profile == StrategyProfile::ones(n));
            CHECK(bad.welfare.value() == Approx(n / 2.0));
        }
        const auto f1 = maximalEquilibrium(bundledGame("fig1"));
        CHECK(f1.profile.maxDistance(StrategyProfile::zeros(3)) <= 1e-9);
        CHECK_THROWS_AS(maximalEquilibrium(bundledGame("prop8")), UnsupportedRegime);
    }

    TEST_CASE("verification") {
        for (std::size_t n : {10u, 100u}) {
            const auto r = verifyEquilibrium(badEquilibriumGame(n), StrategyProfile::zeros(n));
            CHECK(r.isExact);
            CHECK(r.welfare.value() == 0.0);
        }
        const auto t6 = verifyEquilibrium(bundledGame("thm6"), StrategyProfile({0.25, 1.0}));
        CHECK_FALSE(t6.isExact);
        CHECK(t6.bestResponses[0] == 0.0);
        CHECK(verifyEquilibrium(bundledGame("ex_cycle_sync"), StrategyProfile({1.0, 1.0})).isExact);
    }

    TEST_CASE("JSON report encodes -inf") {
        const auto r = verifyEquilibrium(bundledGame("ex_cycle_sync"), StrategyProfile({1.0, 0.0}));
        const auto j = toJson(r);
        CHECK(j["welfare"] == "-inf");
        CHECK(j["is_exact"] == false);
    }
}

TEST_SUITE("lattice") {
    TEST_CASE("equilibria of the convex three-agent game") {
        const auto d = latticeCheck(bundledGame("ex_cycle_convex"));
        CHECK(d.violations.empty());
        CHECK(d.equilibria.size() >= 2);
        for (const auto& e : d.equilibria) {
            CHECK(e.pointwiseLessEqual(StrategyProfile::ones(3), 1e-9));
        }
    }

    TEST_CASE("single equilibrium") {
        const auto d = latticeCheck(bundledGame("fig1"));
        CHECK(d.equilibria.size() == 1);
        CHECK(d.violations.empty());
    }

    TEST_CASE("random linear games") {
        auto rng = SplitMix64::stream(41, 0);
        LatticeOptions opts;
        opts.samples = 20;
        for (int k = 0; k < 30; ++k) {
            const Game g = randomGame(rng, 2 + k % 3, 1 + k % 2, ImpactFamily::Linear);
            opts.seed = static_cast<std::uint64_t>(k);
            CHECK(latticeCheck(g, opts).violations.empty());
        }
    }
}

TEST_SUITE("coalitions and welfare") {
    TEST_CASE("maximal equilibrium of an alpha = 1 game is strong") {
        const Game g = bundledGame("ex_cycle_convex");
        CHECK_FALSE(coalitionScan(g, StrategyProfile::ones(3)).best);
    }

    TEST_CASE("unique equilibrium that is not strong") {
        const Game g = bundledGame("thm6");
        const auto eq = maximalEquilibrium(g);
        CHECK(eq.profile[1] == Approx(0.93).epsilon(0.01 / 0.93));
        const auto scan = coalitionScan(g, eq.profile);
        REQUIRE(scan.best);
        CHECK(scan.best->members == std::vector<std::size_t>{0, 1});
        CHECK(scan.best->minGain > 0.0);
        std::ostringstream csv;
        writeCoalitionCsv(csv, g, scan);
        CHECK(csv.str().rfind("coalition_mask,", 0) == 0);
    }

    TEST_CASE("a unilateral fix is a singleton coalition") {
        const Game g = bundledGame("ex_cycle_sync");
        const auto scan = coalitionScan(g, StrategyProfile({1.0, 0.0}));
        REQUIRE(scan.best);
        CHECK(scan.best->members.size() == 1);
    }

    TEST_CASE("social optimum") {
        const auto opt = socialOptimumScan(bundledGame("thm6"));
        CHECK(opt.welfare.value() == Approx(3.55).epsilon(0.02 / 3.55));
        CHECK(opt.profile[0] == Approx(0.25).epsilon(0.04));
        CHECK(opt.profile[1] == Approx(1.0).epsilon(0.01));
    }

    TEST_CASE("strong equilibrium and welfare ordering on random games") {
        auto rng = SplitMix64::stream(42, 0);
        LatticeOptions lat;
        lat.samples = 12;
        CoalitionScanOptions co;
        co.gridPoints = 21;
        for (int k = 0; k < 25; ++k) {
            const Game g = randomGame(rng, 2 + k % 2, 1 + k % 2, ImpactFamily::Linear);
            const auto top = maximalEquilibrium(g);
            CHECK_FALSE(coalitionScan(g, top.profile, co).best);
            lat.seed = static_cast<std::uint64_t>(k);
            for (const auto& e : latticeCheck(g, lat).equilibria) {
                const auto w = socialWelfare(g, e);
                CHECK(w.value() <= top.welfare.value() + 1e-6);
                if (e.maxDistance(top.profile) > 1e-3) {
                    CoalitionScanOptions withTop = co;
                    withTop.extraCandidates = {top.profile};
                    CHECK(coalitionScan(g, e, withTop).best);
                }
            }
        }
    }
}

TEST_SUITE("bailout") {
    TEST_CASE("transfer raises the donor's equity") {
        const auto r = bailoutWhatIf(bundledGame("bailout"), 0, 1, 0, 0.1);
        CHECK(r.before.profile == StrategyProfile({1.0, 0.0}));
        CHECK(r.equityBefore[0] == Approx(1000.64));
        CHECK(r.after.profile == StrategyProfile({1.0, 1.0}));
        CHECK(r.equityAfter[0] == Approx(1000.7));
    }

    TEST_CASE("zero transfer changes nothing") {
        const Game g = bundledGame("bailout");
        const auto r = bailoutWhatIf(g, 0, 1, 0, 0.0);
        CHECK(toJson(r.before) == toJson(r.after));
    }

    TEST_CASE("full transfer at a fixed profile") {
        const Game g = bundledGame("ex_cycle_sync");
        const Game h = transferHoldings(g, 0, 1, 0, 0.5);
        const auto ones = StrategyProfile::ones(2);
        CHECK(equity(h, ones, 0) <= equity(g, ones, 0));
        CHECK(*valuation(h, ones, 1).leverage <= *valuation(g, ones, 1).leverage);
    }

    TEST_CASE("invalid transfers") {
        const Game g = bundledGame("bailout");
        CHECK_THROWS(transferHoldings(g, 0, 1, 0, 0.9));
        CHECK_THROWS(transferHoldings(g, 0, 0, 0, 0.1));
        CHECK_THROWS(transferHoldings(g, 0, 1, 3, 0.1));
        CHECK_THROWS(transferHoldings(g, 0, 1, 0, -0.1));
    }
}

TEST_SUITE("grid scan") {
    TEST_CASE("finds both equilibria of the oscillation game") {
        const auto r = equilibriumGridScan(bundledGame("ex_cycle_sync"), 0.05, 1e-9);
        CHECK(r.points == 21 * 21);
        CHECK(std::count(r.equilibria.begin(), r.equilibria.end(), StrategyProfile({1.0, 1.0})) == 1);
        CHECK(std::count(r.equilibria.begin(), r.equilibria.end(), StrategyProfile({0.0, 0.0})) == 1);
    }
}
