// Acceptance driver: one pass/fail line per criterion, with timings.

#include "firesale/analysis.hpp"
#include "firesale/dynamics.hpp"
#include "firesale/experiments.hpp"
#include "firesale/noneven.hpp"
#include "firesale/registry.hpp"
#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace firesale;
using namespace firesale::testing;

namespace {

// Collects failed expectations of one criterion.
class Check {
public:
    void expect(bool ok, const std::string& what) {
        if (!ok) {
            failures_.push_back(what);
        }
    }

    void near(double actual, double expected, double tol, const std::string& what) {
        std::ostringstream s;
        s << what << ": " << actual << " vs " << expected << " +- " << tol;
        expect(std::abs(actual - expected) <= tol, s.str());
    }

    void note(const std::string& line) { notes_.push_back(line); }

    const std::vector<std::string>& failures() const { return failures_; }
    const std::vector<std::string>& notes() const { return notes_; }

private:
    std::vector<std::string> failures_;
    std::vector<std::string> notes_;
};

struct Criterion {
    int id;
    std::string title;
    double budgetSeconds;
    std::function<void(Check&)> body;
};

bool contains(const std::vector<StrategyProfile>& states, const StrategyProfile& y) {
    return std::any_of(states.begin(), states.end(), [&](const auto& s) { return s.maxDistance(y) <= 1e-9; });
}

BestResponseOptions fine() {
    BestResponseOptions o;
    o.scanPoints = 65536;
    return o;
}

std::vector<double> distinct(const std::vector<StrategyProfile>& states, std::size_t i) {
    std::vector<double> v;
    for (const auto& s : states) {
        v.push_back(s[i]);
    }
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end(), [](double a, double b) { return std::abs(a - b) <= 1e-6; }), v.end());
    return v;
}

bool sameValues(const std::vector<double>& v, std::initializer_list<double> expected, double tol) {
    if (v.size() != expected.size()) {
        return false;
    }
    std::size_t k = 0;
    for (double e : expected) {
        if (std::abs(v[k++] - e) > tol) {
            return false;
        }
    }
    return true;
}

void exampleOne(Check& c) {
    const Game g = bundledGame("ex_cycle_sync");
    DynamicsConfig sync;
    sync.start = StrategyProfile({1.0, 0.0});
    const auto t = runDynamics(g, sync);
    c.expect(t.verdict == Verdict::CycleDetected && t.period == 2, "synchronous run is a 2-cycle");
    c.expect(contains(t.cycleStates, StrategyProfile({0.0, 1.0})) && contains(t.cycleStates, StrategyProfile({1.0, 0.0})),
             "cycle states are (0,1) and (1,0)");
    DynamicsConfig seq = sync;
    seq.kind = DynamicsKind::SequentialExact;
    const auto s = runDynamics(g, seq);
    c.expect(s.verdict == Verdict::Converged && s.moves <= 2, "sequential run converges within 2 moves");
    const auto ones = StrategyProfile::ones(2);
    c.expect(verifyEquilibrium(g, ones).isExact, "(1,1) is an exact equilibrium");
    for (std::size_t i = 0; i < 2; ++i) {
        const auto v = valuation(g, ones, i);
        c.expect(v.leverage.has_value(), "leverage defined at (1,1)");
        c.near(v.leverage.value_or(0.0), 6.0, 1e-9, "leverage of agent " + std::to_string(i + 1));
    }
    c.note("sync period " + std::to_string(t.period) + ", sequential moves " + std::to_string(s.moves));
}

void exampleTwo(Check& c) {
    const Game g = bundledGame("ex_cycle_convex");
    DynamicsConfig seq;
    seq.kind = DynamicsKind::SequentialExact;
    seq.order = {0, 2, 1};
    seq.start = StrategyProfile({1.0, 1.0, 0.0});
    const auto t = runDynamics(g, seq);
    c.expect(t.verdict == Verdict::CycleDetected && t.period == 6, "sequential run is a 6-cycle");
    const double ninf = -1.0; // marker for -inf
    const std::vector<std::vector<double>> table = {{ninf, 18.08, 11.6}, {11.28, ninf, 10.32}, {11.6, ninf, 18.08},
                                                    {10.32, 11.28, ninf}, {18.08, 11.6, ninf}, {ninf, 10.32, 11.28},
                                                    {ninf, 18.08, 11.6}};
    c.expect(t.profiles.size() >= table.size(), "trace covers the full cycle");
    for (std::size_t k = 0; k < std::min(table.size(), t.profiles.size()); ++k) {
        for (std::size_t i = 0; i < 3; ++i) {
            const Utility u = utility(g, t.profiles[k], i);
            const std::string what = "state " + std::to_string(k) + " agent " + std::to_string(i + 1);
            if (table[k][i] == ninf) {
                c.expect(u.isNegInf(), what + " is -inf");
            } else {
                c.expect(u.isFinite(), what + " is finite");
                c.near(u.isFinite() ? u.value() : 0.0, table[k][i], 0.01, what);
            }
        }
    }
    c.expect(maximalEquilibrium(g).profile == StrategyProfile::ones(3), "maximal equilibrium is (1,1,1)");
}

void propEight(Check& c) {
    const Game g = bundledGame("prop8");
    const auto a = bestResponse(g, StrategyProfile({0.0, 0.8}), 0, fine());
    const auto b = bestResponse(g, StrategyProfile({0.0, 0.6}), 0, fine());
    c.near(a.keep, 0.2, 1e-6, "best response at aggregate 0.4");
    c.near(b.keep, 0.4, 1e-6, "best response at aggregate 0.3");
    c.near(a.utility.isFinite() ? a.utility.value() : 0.0, 1.543, 0.002, "utility at aggregate 0.4");
    c.near(b.utility.isFinite() ? b.utility.value() : 0.0, 1.539, 0.002, "utility at aggregate 0.3");
    c.expect(a.keep < b.keep, "more kept by the other agent, less kept by agent 1");
}

void propNine(Check& c) {
    const Game g = bundledGame("prop9");
    DynamicsConfig seq;
    seq.kind = DynamicsKind::SequentialExact;
    seq.responseOptions = fine();
    auto rng = SplitMix64::stream(9, 0);
    std::size_t cycles = 0;
    std::size_t matching = 0;
    for (int k = 0; k < 100; ++k) {
        seq.start = k == 0 ? StrategyProfile::ones(2) : randomProfile(rng, 2);
        const auto t = runDynamics(g, seq);
        if (t.verdict != Verdict::CycleDetected) {
            continue;
        }
        ++cycles;
        const auto v1 = distinct(t.cycleStates, 0);
        const auto v2 = distinct(t.cycleStates, 1);
        // One agent alternates {0, 1}, the other {0, 0.375}.
        const bool roles = (sameValues(v1, {0.0, 1.0}, 1e-9) && sameValues(v2, {0.0, 0.375}, 1e-3)) ||
                           (sameValues(v2, {0.0, 1.0}, 1e-9) && sameValues(v1, {0.0, 0.375}, 1e-3));
        matching += roles;
    }
    c.expect(cycles == 100, "all 100 sequential runs cycle (" + std::to_string(cycles) + ")");
    c.expect(matching == cycles, "every cycle visits {0,1} x {0,0.375} (" + std::to_string(matching) + ")");
    const auto grid = equilibriumGridScan(g, 1e-3, 1e-3, fine());
    c.expect(grid.points == 1001u * 1001u, "grid has 1001 x 1001 points");
    c.expect(grid.equilibria.empty(), "no grid point is a 1e-3 equilibrium");
    c.note("grid points " + std::to_string(grid.points) + ", equilibria " + std::to_string(grid.equilibria.size()));
}

void theoremSix(Check& c) {
    const Game g = bundledGame("thm6");
    const auto opt = socialOptimumScan(g);
    c.near(opt.welfare.isFinite() ? opt.welfare.value() : 0.0, 3.55, 0.02, "social optimum welfare");
    c.near(opt.profile[0], 0.25, 0.01, "optimum y_1");
    c.near(opt.profile[1], 1.0, 0.01, "optimum y_2");
    const auto lattice = latticeCheck(g);
    c.expect(lattice.equilibria.size() == 1, "equilibrium is unique among sampled starts");
    const auto eq = maximalEquilibrium(g);
    c.near(eq.profile[1], 0.93, 0.01, "equilibrium y_2");
    c.near(eq.utilities[0].isFinite() ? eq.utilities[0].value() : 0.0, 1.5, 0.01, "equilibrium utility 1");
    c.near(eq.utilities[1].isFinite() ? eq.utilities[1].value() : 0.0, 1.92, 0.01, "equilibrium utility 2");
    const auto scan = coalitionScan(g, eq.profile);
    c.expect(scan.best && scan.best->members == std::vector<std::size_t>{0, 1}, "improving coalition is {1,2}");
    std::ostringstream s;
    s << "optimum (" << opt.profile[0] << ", " << opt.profile[1] << ") sw " << opt.welfare.value() << "; equilibrium ("
      << eq.profile[0] << ", " << eq.profile[1] << ")";
    c.note(s.str());
}

void badEquilibria(Check& c) {
    for (std::size_t n : {10u, 100u}) {
        const Game g = badEquilibriumGame(n);
        const auto ones = socialWelfare(g, StrategyProfile::ones(n));
        const double half = static_cast<double>(n) / 2.0;
        c.near(ones.isFinite() ? ones.value() : 0.0, half, 1e-9 * half, "all-ones welfare, n=" + std::to_string(n));
        const auto zeros = verifyEquilibrium(g, StrategyProfile::zeros(n));
        c.expect(zeros.isExact, "all-zeros is an equilibrium, n=" + std::to_string(n));
        c.expect(zeros.welfare.isFinite() && zeros.welfare.value() == 0.0, "all-zeros welfare is 0, n=" + std::to_string(n));
    }
}

void nonEven(Check& c) {
    const Game br = bundledGame("noneven_br");
    const auto a = bestResponseNonEven(br, VectorProfile({{1.0, 1.0}, {1.0, 1.0}}), 0);
    const auto b = bestResponseNonEven(br, VectorProfile({{1.0, 1.0}, {1.0, 0.8}}), 0);
    c.near(a.keep[0], 0.925998, 1e-4, "best response (1,1) asset 1");
    c.near(a.keep[1], 0.925997, 1e-4, "best response (1,1) asset 2");
    c.near(b.keep[0], 0.829974, 1e-4, "best response (1,0.8) asset 1");
    c.near(b.keep[1], 0.929974, 1e-4, "best response (1,0.8) asset 2");

    const Game p10 = bundledGame("prop10");
    const VectorProfile opt({{77.0 / 90.0, 0.9}, {17.0 / 18.0, 1.0}});
    const auto u1 = utilityNonEven(p10, opt, 0);
    const auto u2 = utilityNonEven(p10, opt, 1);
    c.near(u1.isFinite() ? u1.value() : 0.0, 133.5, 0.1, "optimum utility 1");
    c.near(u2.isFinite() ? u2.value() : 0.0, 77.5, 0.1, "optimum utility 2");
    const auto dev = bestResponseNonEven(p10, opt, 0);
    c.near(dev.utility.isFinite() ? dev.utility.value() : 0.0, 138.0, 0.5, "deviation utility of agent 1");

    const Game cyc = bundledGame("noneven_cycle");
    const std::vector<double> ya{0.73541, 0.749823};
    const std::vector<double> yb{0.517823, 0.933928};
    const auto t = improvingResponseRun(cyc, VectorProfile({ya, {0.579619, 1.0}}),
                                        {{1, {0.802502, 1.0}}, {0, yb}, {1, {0.579619, 1.0}}, {0, ya}});
    const double ninf = -1.0;
    const std::vector<std::vector<double>> table = {
        {112.42, 71.4379}, {115.206, 74.2239}, {130.897, ninf}, {ninf, 68.718}, {112.42, 71.4379}};
    c.expect(t.utilities.size() == table.size(), "cycle has four moves");
    for (std::size_t k = 0; k < std::min(table.size(), t.utilities.size()); ++k) {
        for (std::size_t i = 0; i < 2; ++i) {
            const auto& u = t.utilities[k][i];
            const std::string what = "cycle state " + std::to_string(k) + " agent " + std::to_string(i + 1);
            if (table[k][i] == ninf) {
                c.expect(u.isNegInf(), what + " is -inf");
            } else {
                c.near(u.isFinite() ? u.value() : 0.0, table[k][i], 0.01, what);
            }
        }
    }
    c.expect(std::all_of(t.improving.begin(), t.improving.end(), [](bool v) { return v; }), "every move improves");
    c.expect(t.profiles.back() == t.profiles.front(), "cycle returns to its start");
}

void bailoutCase(Check& c) {
    const auto r = bailoutWhatIf(bundledGame("bailout"), 0, 1, 0, 0.1);
    c.near(r.equityBefore[0], 1000.64, 0.01, "donor equity before");
    c.near(r.equityAfter[0], 1000.7, 0.01, "donor equity after");
    c.expect(r.after.profile == StrategyProfile({1.0, 1.0}), "post-transfer maximal equilibrium is (1,1)");
}

struct PropertyTally {
    std::size_t games = 0;
    std::size_t broken = 0;
};

// Invariants that hold on every lattice-regime game; returns false on the first broken one.
bool latticeProperties(const Game& g, SplitMix64& rng, bool linear, std::uint64_t seed, Check& c,
                       const std::string& tag) {
    bool ok = true;
    auto fail = [&](const std::string& what) {
        c.expect(false, tag + ": " + what);
        ok = false;
    };
    const std::size_t n = g.numAgents();

    const auto lo = randomProfile(rng, n);
    std::vector<double> hi(lo.values());
    for (auto& v : hi) {
        v += (1.0 - v) * rng.uniform();
    }
    const StrategyProfile up(hi);
    if (!bestResponseProfile(g, lo, ResponseKind::Exact)
             .pointwiseLessEqual(bestResponseProfile(g, up, ResponseKind::Exact), 1e-9)) {
        fail("exact response not monotone");
    }
    if (linear && !bestResponseProfile(g, lo, ResponseKind::Simplified)
                       .pointwiseLessEqual(bestResponseProfile(g, up, ResponseKind::Simplified), 1e-9)) {
        fail("simplified response not monotone");
    }

    DynamicsConfig cfg;
    cfg.delta = 1e-10;
    cfg.maxSteps = 1000000;
    const auto exact = runDynamics(g, cfg);
    if (exact.verdict != Verdict::Converged || !exact.monotone) {
        fail("exact trace from all-ones not monotone or not converged");
    }
    if (linear) {
        cfg.kind = DynamicsKind::SynchronousSimplified;
        const auto simple = runDynamics(g, cfg);
        if (!simple.monotone || exact.finalProfile().maxDistance(simple.finalProfile()) > 1e-4) {
            fail("simplified limit differs from the exact limit");
        }
    }

    LatticeOptions lat;
    lat.samples = 8;
    lat.seed = seed;
    const auto d = latticeCheck(g, lat);
    if (!d.violations.empty()) {
        fail("join or meet of sampled equilibria is not an equilibrium");
    }
    const auto top = maximalEquilibrium(g);
    for (const auto& e : d.equilibria) {
        const auto w = socialWelfare(g, e);
        if (!e.pointwiseLessEqual(top.profile, 1e-6)) {
            fail("sampled equilibrium above the maximal one");
        }
        if (w.isFinite() && (!top.welfare.isFinite() || w.value() > top.welfare.value() + 1e-6)) {
            fail("sampled equilibrium has more welfare than the maximal one");
        }
    }
    return ok;
}

void propertySuite(Check& c) {
    PropertyTally linear;
    PropertyTally power;
    auto rng = SplitMix64::stream(90, 0);
    for (std::size_t k = 0; k < 500; ++k) {
        const std::size_t n = 2 + k % 7; // 2..8
        const Game g = randomGame(rng, n, 1 + k % 3, ImpactFamily::Linear);
        ++linear.games;
        linear.broken += !latticeProperties(g, rng, true, k, c, "linear game " + std::to_string(k));
    }
    for (std::size_t k = 0; k < 200; ++k) {
        const std::size_t n = 2 + k % 5; // 2..6
        const Game g = randomGame(rng, n, 1 + k % 3, ImpactFamily::PowerConvex);
        ++power.games;
        power.broken += !latticeProperties(g, rng, false, k, c, "power game " + std::to_string(k));
    }
    std::size_t twoAgentRuns = 0;
    std::size_t twoAgentCycles = 0;
    for (std::size_t k = 0; k < 300; ++k) {
        const auto family = k % 3 == 0 ? ImpactFamily::PowerConvex : ImpactFamily::Linear;
        const Game g = randomGame(rng, 2, 1 + k % 3, family);
        DynamicsConfig cfg;
        cfg.kind = DynamicsKind::SequentialExact;
        cfg.start = randomProfile(rng, 2);
        cfg.order = k % 2 ? std::vector<std::size_t>{1, 0} : std::vector<std::size_t>{};
        ++twoAgentRuns;
        twoAgentCycles += runDynamics(g, cfg).verdict == Verdict::CycleDetected;
    }
    c.expect(twoAgentCycles == 0, "two-agent sequential runs cycled " + std::to_string(twoAgentCycles) + " times");
    c.note(std::to_string(linear.games) + " linear games (" + std::to_string(linear.broken) + " broken), " +
           std::to_string(power.games) + " power games (" + std::to_string(power.broken) + " broken), " +
           std::to_string(twoAgentRuns) + " two-agent sequential runs (" + std::to_string(twoAgentCycles) +
           " cycles)");
}

void experimentShape(Check& c) {
    ExperimentConfig cfg;
    cfg.n = 10;
    cfg.runs = 10000;
    cfg.parameters = ParameterSet::Fig2_3Left;
    cfg.workers = std::max(1u, std::thread::hardware_concurrency());
    const auto r = runExperiment(cfg, true);

    std::vector<double> exact;
    std::vector<double> simplified;
    std::size_t unconverged = 0;
    std::size_t exactFailures = 0;
    std::size_t simplifiedFailures = 0;
    for (std::size_t t = 0; t < cfg.taus.size(); ++t) {
        const auto& e = r.at(t, DynamicsKind::SynchronousExact);
        const auto& s = r.at(t, DynamicsKind::SynchronousSimplified);
        exact.push_back(e.meanSteps);
        simplified.push_back(s.meanSteps);
        unconverged += e.unconverged + s.unconverged;
        exactFailures += e.approxFailures;
        simplifiedFailures += s.approxFailures;
        std::ostringstream line;
        line << "tau " << cfg.taus[t] << ": exact " << e.meanSteps << " [" << e.ciLow << ", " << e.ciHigh
             << "], simplified " << s.meanSteps << " [" << s.ciLow << ", " << s.ciHigh << "]";
        c.note(line.str());
        c.expect(s.meanSteps >= e.meanSteps, "simplified slower than exact at tau " + std::to_string(cfg.taus[t]));
    }
    c.expect(hasInteriorMaximum(exact) || hasInteriorMaximum(simplified),
             "a convergence-time curve has an interior maximum over tau");

    for (auto kind : {DynamicsKind::SynchronousExact, DynamicsKind::SynchronousSimplified}) {
        std::size_t eligible = 0;
        std::size_t rejected = 0;
        for (std::size_t t = 0; t < cfg.taus.size(); ++t) {
            const auto test = tailRatioTest(r.at(t, kind));
            if (test.points >= 6) {
                ++eligible;
                rejected += test.rejectsExponential;
            }
        }
        c.expect(eligible > 0 && 5 * rejected >= 4 * eligible,
                 toString(kind) + " decay curves reject an exponential fit");
        c.note(toString(kind) + ": " + std::to_string(rejected) + "/" + std::to_string(eligible) +
               " decay curves reject an exponential fit");
    }
    c.expect(unconverged == 0, "every run converges");
    c.expect(exactFailures == 0, "every exact endpoint is a 1e-3-approximate equilibrium");
    c.note("interior maximum: exact " + std::string(hasInteriorMaximum(exact) ? "yes" : "no") + ", simplified " +
           (hasInteriorMaximum(simplified) ? "yes" : "no") + "; endpoint check failures: exact " +
           std::to_string(exactFailures) + ", simplified " + std::to_string(simplifiedFailures));
}

} // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "two-agent oscillation game", 1.0, exampleOne},
        {2, "three-agent best-response cycle", 1.0, exampleTwo},
        {3, "non-monotone best response", 60.0, propEight},
        {4, "game without equilibrium", 30.0, propNine},
        {5, "unique equilibrium that is not strong", 60.0, theoremSix},
        {6, "bad equilibrium family", 60.0, badEquilibria},
        {7, "non-even sales", 60.0, nonEven},
        {8, "bailout what-if", 60.0, bailoutCase},
        {9, "property suite on random games", 300.0, propertySuite},
        {10, "experiment shape at desk scale", 900.0, experimentShape},
    };
    int failed = 0;
    for (const auto& cr : criteria) {
        Check check;
        const auto start = std::chrono::steady_clock::now();
        try {
            cr.body(check);
        } catch (const std::exception& e) {
            check.expect(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        char budget[96];
        std::snprintf(budget, sizeof budget, "%.2fs (limit %.0fs)", secs, cr.budgetSeconds);
        check.expect(secs < cr.budgetSeconds, std::string("runtime ") + budget);
        const bool ok = check.failures().empty();
        failed += !ok;
        std::printf("[%s] criterion %d: %s, %s\n", ok ? "PASS" : "FAIL", cr.id, cr.title.c_str(), budget);
        for (const auto& n : check.notes()) {
            std::printf("    %s\n", n.c_str());
        }
        std::size_t shown = 0;
        for (const auto& f : check.failures()) {
            if (++shown > 20) {
                std::printf("    ... %zu more\n", check.failures().size() - 20);
                break;
            }
            std::printf("    failed: %s\n", f.c_str());
        }
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
