#include "firesale/analysis.hpp"
#include "firesale/dynamics.hpp"
#include "firesale/errors.hpp"
#include "firesale/experiments.hpp"
#include "firesale/game_io.hpp"
#include "firesale/registry.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

using namespace firesale;
using nlohmann::json;

namespace {

constexpr int kExitError = 1;
constexpr int kExitMismatch = 4;

int exitCodeFor(Verdict v) {
    switch (v) {
    case Verdict::Converged:
        return 0;
    case Verdict::CycleDetected:
        return 2;
    case Verdict::BudgetExhausted:
        return 3;
    }
    return kExitError;
}

void writeJson(const json& j, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    out << j.dump(2) << '\n';
}

std::vector<std::size_t> zeroBased(const std::vector<std::size_t>& agents, std::size_t n) {
    std::vector<std::size_t> out;
    for (std::size_t a : agents) {
        if (a < 1 || a > n) {
            throw std::invalid_argument("agent " + std::to_string(a) + " out of range 1.." + std::to_string(n));
        }
        out.push_back(a - 1);
    }
    return out;
}

struct RunArgs {
    std::string game;
    std::string dynamics = "synchronous";
    std::vector<std::size_t> order;
    std::vector<double> start;
    double delta = 1e-5;
    std::size_t maxSteps = 100000;
    std::string trace;
    std::string verdict;
};

int cmdRun(const RunArgs& a) {
    const Game game = loadGame(a.game);
    DynamicsConfig cfg;
    cfg.kind = dynamicsKindFromString(a.dynamics);
    cfg.order = zeroBased(a.order, game.numAgents());
    if (!a.start.empty()) {
        cfg.start = StrategyProfile(a.start);
    }
    cfg.delta = a.delta;
    cfg.maxSteps = a.maxSteps;
    const auto trace = runDynamics(game, cfg);
    if (!a.trace.empty()) {
        std::ofstream out(a.trace);
        if (!out) {
            throw std::runtime_error("cannot write " + a.trace);
        }
        writeTraceCsv(out, trace);
    }
    writeJson(verdictJson(trace), a.verdict);
    return exitCodeFor(trace.verdict);
}

struct ReproduceArgs {
    std::vector<std::string> ids;
    bool all = false;
    std::string dataDir;
    bool list = false;
};

int cmdReproduce(const ReproduceArgs& a) {
    if (a.list) {
        for (const auto& id : exampleIds()) {
            std::cout << id << '\n';
        }
        return 0;
    }
    const std::filesystem::path dir = a.dataDir.empty() ? defaultDataDir() : std::filesystem::path(a.dataDir);
    const auto ids = a.all ? exampleIds() : a.ids;
    if (ids.empty()) {
        throw CLI::ValidationError("reproduce", "give example ids or --all");
    }
    bool ok = true;
    for (const auto& id : ids) {
        const auto values = runScenario(id, dir);
        const auto cmp = compareFixture(loadFixture(id, dir), values);
        std::cout << (cmp.pass ? "PASS " : "FAIL ") << id << " (" << cmp.checked << " values)\n";
        for (const auto& m : cmp.mismatches) {
            std::cout << "  " << m.key << ": expected " << m.expected.dump() << " (tol " << m.tolerance << "), got "
                      << m.actual.dump() << '\n';
        }
        ok = ok && cmp.pass;
    }
    return ok ? 0 : kExitMismatch;
}

struct ExperimentArgs {
    std::string config;
    std::string out = "experiment_out";
    std::size_t workers = 0;
};

int cmdExperiment(const ExperimentArgs& a) {
    std::ifstream in(a.config);
    if (!in) {
        throw std::runtime_error("cannot open " + a.config);
    }
    ExperimentConfig cfg = experimentConfigFromJson(json::parse(in));
    if (a.workers > 0) {
        cfg.workers = a.workers;
    } else if (std::getenv("FIRESALE_WORKERS")) {
        cfg.workers = workersFromEnvironment();
    }
    const auto result = runExperiment(cfg);
    writeExperimentOutputs(result, a.out);
    std::vector<double> exact;
    std::vector<double> simplified;
    for (std::size_t t = 0; t < cfg.taus.size(); ++t) {
        exact.push_back(result.at(t, DynamicsKind::SynchronousExact).meanSteps);
        simplified.push_back(result.at(t, DynamicsKind::SynchronousSimplified).meanSteps);
    }
    json summary{{"output", a.out},
                 {"interior_maximum_exact", hasInteriorMaximum(exact)},
                 {"interior_maximum_simplified", hasInteriorMaximum(simplified)},
                 {"mean_steps_exact", exact},
                 {"mean_steps_simplified", simplified}};
    std::cout << summary.dump(2) << '\n';
    return 0;
}

struct AnalyzeArgs {
    std::string game;
    std::vector<double> profile;
    std::size_t grid = 51;
    std::string csv;
    std::size_t donor = 1;
    std::size_t recipient = 2;
    std::size_t asset = 1;
    double share = 0.1;
    std::string out;
};

int cmdMaximal(const AnalyzeArgs& a) {
    writeJson(toJson(maximalEquilibrium(loadGame(a.game))), a.out);
    return 0;
}

int cmdCoalition(const AnalyzeArgs& a) {
    const Game game = loadGame(a.game);
    const StrategyProfile y = a.profile.empty() ? maximalEquilibrium(game).profile : StrategyProfile(a.profile);
    CoalitionScanOptions opts;
    opts.gridPoints = a.grid;
    const auto result = coalitionScan(game, y, opts);
    if (!a.csv.empty()) {
        std::ofstream out(a.csv);
        writeCoalitionCsv(out, game, result);
    }
    json j = toJson(result);
    j["profile"] = y.values();
    writeJson(j, a.out);
    return 0;
}

int cmdBailout(const AnalyzeArgs& a) {
    const Game game = loadGame(a.game);
    const auto r = bailoutWhatIf(game, zeroBased({a.donor}, game.numAgents())[0],
                                 zeroBased({a.recipient}, game.numAgents())[0],
                                 zeroBased({a.asset}, game.numAssets())[0], a.share);
    writeJson(toJson(r), a.out);
    return 0;
}

int cmdValidate(const std::vector<std::string>& files) {
    int code = 0;
    for (const auto& f : files) {
        try {
            const Game g = loadGame(f);
            std::cout << f << ": ok (" << g.numAgents() << " agents, " << g.numAssets() << " assets)\n";
        } catch (const GameLoadError& e) {
            std::cerr << e.diagnostic().format() << '\n';
            code = kExitError;
        }
    }
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fire-sale games: best responses, dynamics, equilibria and experiments"};
    app.require_subcommand(1);
    int code = 0;

    RunArgs run;
    auto* runCmd = app.add_subcommand("run", "Run best-response dynamics (exit 0 converged, 2 cycle, 3 budget)");
    runCmd->add_option("game", run.game, "Game file (JSON)")->required();
    runCmd->add_option("-d,--dynamics", run.dynamics, "synchronous | sequential | simplified")
        ->capture_default_str();
    runCmd->add_option("--order", run.order, "Sequential move order, 1-based agents (default 1..n)")
        ->delimiter(',');
    runCmd->add_option("--start", run.start, "Start profile (default all ones)")->delimiter(',');
    runCmd->add_option("--delta", run.delta, "Stop when no strategy moves more than this")->capture_default_str();
    runCmd->add_option("--max-steps", run.maxSteps, "Step budget (passes for sequential)")->capture_default_str();
    runCmd->add_option("--trace", run.trace, "Write the trace CSV here");
    runCmd->add_option("--verdict", run.verdict, "Write the verdict JSON here (default stdout)");
    runCmd->callback([&] { code = cmdRun(run); });

    ReproduceArgs rep;
    auto* repCmd = app.add_subcommand("reproduce", "Run named examples and compare with bundled fixtures");
    repCmd->add_option("ids", rep.ids, "Example ids (badNE_<n> for any n >= 2)");
    repCmd->add_flag("--all", rep.all, "Every bundled example");
    repCmd->add_flag("--list", rep.list, "List example ids");
    repCmd->add_option("--data-dir", rep.dataDir, "Games and fixtures (default: FIRESALE_DATA_DIR or built-in)");
    repCmd->callback([&] { code = cmdReproduce(rep); });

    ExperimentArgs exp;
    auto* expCmd = app.add_subcommand("experiment", "Monte-Carlo diversification experiment");
    expCmd->add_option("config", exp.config, "Experiment config (JSON)")->required();
    expCmd->add_option("-o,--out", exp.out, "Output directory")->capture_default_str();
    expCmd->add_option("-w,--workers", exp.workers, "Worker threads (default: FIRESALE_WORKERS or config)");
    expCmd->callback([&] { code = cmdExperiment(exp); });

    AnalyzeArgs an;
    auto* anCmd = app.add_subcommand("analyze", "Equilibrium analysis");
    anCmd->require_subcommand(1);
    auto addCommon = [&](CLI::App* sub) {
        sub->add_option("game", an.game, "Game file (JSON)")->required();
        sub->add_option("-o,--out", an.out, "Write the JSON report here (default stdout)");
    };
    auto* maxCmd = anCmd->add_subcommand("maximal", "Maximal equilibrium via dynamics from all ones");
    addCommon(maxCmd);
    maxCmd->callback([&] { code = cmdMaximal(an); });
    auto* coCmd = anCmd->add_subcommand("coalition", "Search for improving coalition deviations (n <= 4)");
    addCommon(coCmd);
    coCmd->add_option("--profile", an.profile, "Profile to test (default: maximal equilibrium)")->delimiter(',');
    coCmd->add_option("--grid", an.grid, "Grid points per member")->capture_default_str();
    coCmd->add_option("--csv", an.csv, "Write per-coalition results as CSV");
    coCmd->callback([&] { code = cmdCoalition(an); });
    auto* baCmd = anCmd->add_subcommand("bailout", "Transfer a holding share and compare maximal equilibria");
    addCommon(baCmd);
    baCmd->add_option("--donor", an.donor, "Donor agent (1-based)")->capture_default_str();
    baCmd->add_option("--recipient", an.recipient, "Recipient agent (1-based)")->capture_default_str();
    baCmd->add_option("--asset", an.asset, "Asset (1-based)")->capture_default_str();
    baCmd->add_option("--share", an.share, "Share of the asset transferred")->capture_default_str();
    baCmd->callback([&] { code = cmdBailout(an); });

    std::vector<std::string> validateFiles;
    auto* valCmd = app.add_subcommand("validate", "Check game files against the schema");
    valCmd->add_option("games", validateFiles, "Game files")->required();
    valCmd->callback([&] { code = cmdValidate(validateFiles); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const GameLoadError& e) {
        std::cerr << e.diagnostic().format() << '\n';
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return code;
}
