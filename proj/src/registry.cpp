#include "firesale/registry.hpp"

#include "firesale/analysis.hpp"
#include "firesale/dynamics.hpp"
#include "firesale/game_io.hpp"
#include "firesale/noneven.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>

#ifndef FIRESALE_DATA_DIR
#define FIRESALE_DATA_DIR "data"
#endif

namespace firesale {

namespace {

using nlohmann::json;
using Scenario = std::function<json(const Game&)>;

// Fine scan for games whose payoffs hinge on narrow kinks.
BestResponseOptions fineOptions() {
    BestResponseOptions o;
    o.scanPoints = 65536;
    return o;
}

json utilities(const Game& game, const StrategyProfile& y) {
    json u = json::array();
    for (std::size_t i = 0; i < game.numAgents(); ++i) {
        u.push_back(toJson(utility(game, y, i)));
    }
    return u;
}

json leverages(const Game& game, const StrategyProfile& y) {
    json out = json::array();
    for (std::size_t i = 0; i < game.numAgents(); ++i) {
        const auto v = valuation(game, y, i);
        out.push_back(v.leverage ? json(*v.leverage) : json(nullptr));
    }
    return out;
}

// Sorted distinct values taken by agent i over a set of profiles.
json visited(const std::vector<StrategyProfile>& states, std::size_t i) {
    std::vector<double> v;
    for (const auto& s : states) {
        v.push_back(s[i]);
    }
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end(), [](double a, double b) { return std::abs(a - b) <= 1e-6; }), v.end());
    return v;
}

json oneBased(const std::vector<std::size_t>& agents) {
    json out = json::array();
    for (std::size_t a : agents) {
        out.push_back(a + 1);
    }
    return out;
}

json fig1(const Game& game) {
    json out;
    const auto ones = StrategyProfile::ones(game.numAgents());
    out["leverage_all_ones"] = leverages(game, ones);
    std::vector<std::size_t> violators;
    for (std::size_t i = 0; i < game.numAgents(); ++i) {
        const auto v = valuation(game, ones, i);
        if (!v.leverage || *v.leverage > game.lambda()) {
            violators.push_back(i);
        }
    }
    out["violators_all_ones"] = oneBased(violators);

    DynamicsConfig seq;
    seq.kind = DynamicsKind::SequentialExact;
    seq.order = {2, 1, 0};
    const auto t = runDynamics(game, seq);
    out["sequential_verdict"] = toString(t.verdict);
    out["sequential_first_mover"] = t.movers.empty() || !t.movers.front() ? json(nullptr) : json(*t.movers.front() + 1);
    out["sequential_moves"] = t.moves;
    out["sequential_final"] = t.finalProfile().values();

    const auto s = runDynamics(game, DynamicsConfig{});
    out["synchronous_verdict"] = toString(s.verdict);
    out["synchronous_final"] = s.finalProfile().values();
    return out;
}

json exCycleSync(const Game& game) {
    json out;
    DynamicsConfig sync;
    sync.start = StrategyProfile({1.0, 0.0});
    const auto t = runDynamics(game, sync);
    out["synchronous_verdict"] = toString(t.verdict);
    out["synchronous_period"] = t.period;
    json states = json::array();
    for (const auto& s : t.cycleStates) {
        states.push_back(s.values());
    }
    out["synchronous_cycle"] = states;

    DynamicsConfig seq = sync;
    seq.kind = DynamicsKind::SequentialExact;
    const auto q = runDynamics(game, seq);
    out["sequential_verdict"] = toString(q.verdict);
    out["sequential_moves"] = q.moves;
    out["sequential_final"] = q.finalProfile().values();

    const auto ones = StrategyProfile::ones(game.numAgents());
    out["all_ones_equilibrium"] = verifyEquilibrium(game, ones).isExact;
    out["leverage_all_ones"] = leverages(game, ones);
    return out;
}

json exCycleConvex(const Game& game) {
    json out;
    DynamicsConfig seq;
    seq.kind = DynamicsKind::SequentialExact;
    seq.order = {0, 2, 1};
    seq.start = StrategyProfile({1.0, 1.0, 0.0});
    const auto t = runDynamics(game, seq);
    out["sequential_verdict"] = toString(t.verdict);
    out["sequential_period"] = t.period;
    json states = json::array();
    json utils = json::array();
    for (std::size_t k = 0; k < t.profiles.size() && k <= 6; ++k) {
        states.push_back(t.profiles[k].values());
        utils.push_back(utilities(game, t.profiles[k]));
    }
    out["replay_profiles"] = states;
    out["replay_utilities"] = utils;
    out["synchronous_response_110"] =
        bestResponseProfile(game, StrategyProfile({1.0, 1.0, 0.0}), ResponseKind::Exact).values();
    out["maximal_equilibrium"] = maximalEquilibrium(game).profile.values();
    return out;
}

json prop8(const Game& game) {
    json out;
    const auto opts = fineOptions();
    // Agent 2 holds half of the asset, so y_2 = 0.8 / 0.6 puts 0.4 / 0.3 on the market.
    for (const auto& [key, y2] : {std::pair{"aggregate_0.4", 0.8}, std::pair{"aggregate_0.3", 0.6}}) {
        const auto r = bestResponse(game, StrategyProfile({0.0, y2}), 0, opts);
        out[std::string("best_response_") + key] = r.keep;
        out[std::string("utility_") + key] = toJson(r.utility);
    }
    return out;
}

json prop9(const Game& game) {
    json out;
    const auto opts = fineOptions();
    DynamicsConfig seq;
    seq.kind = DynamicsKind::SequentialExact;
    seq.responseOptions = opts;
    const auto t = runDynamics(game, seq);
    out["sequential_verdict"] = toString(t.verdict);
    out["sequential_period"] = t.period;
    out["cycle_values_agent1"] = visited(t.cycleStates, 0);
    out["cycle_values_agent2"] = visited(t.cycleStates, 1);
    out["utility1_y1_0_y2_1"] = toJson(utility(game, StrategyProfile({0.0, 1.0}), 0));
    out["utility1_y1_0.375_y2_0"] = toJson(utility(game, StrategyProfile({0.375, 0.0}), 0));
    out["best_response1_y2_0"] = bestResponse(game, StrategyProfile({0.0, 0.0}), 0, opts).keep;
    const auto grid = equilibriumGridScan(game, 1e-3, 1e-3, opts);
    out["grid_points"] = grid.points;
    out["grid_equilibria"] = grid.equilibria.size();
    return out;
}

json thm6(const Game& game) {
    json out;
    const auto opt = socialOptimumScan(game);
    out["optimum_profile"] = opt.profile.values();
    out["optimum_welfare"] = toJson(opt.welfare);
    const auto eq = maximalEquilibrium(game);
    out["equilibrium"] = eq.profile.values();
    json u = json::array();
    for (const auto& v : eq.utilities) {
        u.push_back(toJson(v));
    }
    out["equilibrium_utilities"] = u;
    out["equilibria_found"] = latticeCheck(game).equilibria.size();
    const auto scan = coalitionScan(game, eq.profile);
    out["improving_coalition"] = scan.best ? oneBased(scan.best->members) : json(nullptr);
    return out;
}

json badEquilibrium(const Game& game) {
    json out;
    const std::size_t n = game.numAgents();
    out["welfare_all_ones"] = toJson(socialWelfare(game, StrategyProfile::ones(n)));
    const auto zeros = StrategyProfile::zeros(n);
    out["all_zeros_equilibrium"] = verifyEquilibrium(game, zeros).isExact;
    out["welfare_all_zeros"] = toJson(socialWelfare(game, zeros));
    out["maximal_equilibrium_welfare"] = toJson(maximalEquilibrium(game).welfare);
    return out;
}

json bailout(const Game& game) {
    json out;
    const auto r = bailoutWhatIf(game, 0, 1, 0, 0.1);
    out["equilibrium_before"] = r.before.profile.values();
    out["equity_before"] = r.equityBefore;
    out["equilibrium_after"] = r.after.profile.values();
    out["equity_after"] = r.equityAfter;
    return out;
}

json nonevenBr(const Game& game) {
    json out;
    for (const auto& [key, y22] : {std::pair{"y22_1", 1.0}, std::pair{"y22_0.8", 0.8}}) {
        const auto r = bestResponseNonEven(game, VectorProfile({{1.0, 1.0}, {1.0, y22}}), 0);
        out[std::string("best_response1_") + key] = r.keep;
        out[std::string("utility1_") + key] = toJson(r.utility);
    }
    return out;
}

json nonEvenUtilities(const Game& game, const VectorProfile& y) {
    json u = json::array();
    for (std::size_t i = 0; i < game.numAgents(); ++i) {
        u.push_back(toJson(utilityNonEven(game, y, i)));
    }
    return u;
}

json prop10(const Game& game) {
    json out;
    const VectorProfile opt({{77.0 / 90.0, 0.9}, {17.0 / 18.0, 1.0}});
    out["optimum_utilities"] = nonEvenUtilities(game, opt);
    out["optimum_welfare"] = toJson(socialWelfareNonEven(game, opt));
    const auto br = bestResponseNonEven(game, opt, 0);
    out["deviation1"] = br.keep;
    out["deviation_utilities"] = nonEvenUtilities(game, opt.withRow(0, br.keep));
    return out;
}

json nonevenCycle(const Game& game) {
    const std::vector<double> a{0.73541, 0.749823};
    const std::vector<double> b{0.517823, 0.933928};
    const VectorProfile start({a, {0.579619, 1.0}});
    const auto t = improvingResponseRun(game, start,
                                        {{1, {0.802502, 1.0}}, {0, b}, {1, {0.579619, 1.0}}, {0, a}});
    json out;
    json utils = json::array();
    for (const auto& u : t.utilities) {
        json row = json::array();
        for (const auto& v : u) {
            row.push_back(toJson(v));
        }
        utils.push_back(row);
    }
    out["cycle_utilities"] = utils;
    out["every_move_improving"] = std::all_of(t.improving.begin(), t.improving.end(), [](bool b) { return b; });
    out["returns_to_start"] = t.profiles.back() == t.profiles.front();
    return out;
}

const std::map<std::string, Scenario>& scenarios() {
    static const std::map<std::string, Scenario> table = {
        {"fig1", fig1},           {"ex_cycle_sync", exCycleSync}, {"ex_cycle_convex", exCycleConvex},
        {"prop8", prop8},         {"prop9", prop9},               {"thm6", thm6},
        {"bailout", bailout},     {"noneven_br", nonevenBr},      {"prop10", prop10},
        {"noneven_cycle", nonevenCycle},
    };
    return table;
}

std::optional<std::size_t> badEquilibriumSize(const std::string& id) {
    const std::string prefix = "badNE_";
    if (id.rfind(prefix, 0) != 0 || id.size() == prefix.size()) {
        return std::nullopt;
    }
    const std::string digits = id.substr(prefix.size());
    if (!std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }) ||
        digits.size() > 6) {
        return std::nullopt;
    }
    const std::size_t n = std::stoul(digits);
    return n >= 2 ? std::optional(n) : std::nullopt;
}

void requireKnown(const std::string& id) {
    if (!isKnownExample(id)) {
        throw std::invalid_argument("unknown example '" + id + "'");
    }
}

bool numbersMatch(const json& expected, const json& actual, double tol) {
    if (expected.is_number() && actual.is_number()) {
        return std::abs(expected.get<double>() - actual.get<double>()) <= tol;
    }
    if (expected.is_array() && actual.is_array()) {
        if (expected.size() != actual.size()) {
            return false;
        }
        for (std::size_t k = 0; k < expected.size(); ++k) {
            if (!numbersMatch(expected[k], actual[k], tol)) {
                return false;
            }
        }
        return true;
    }
    return expected == actual;
}

} // namespace

std::vector<std::string> exampleIds() {
    std::vector<std::string> ids;
    for (const auto& [id, fn] : scenarios()) {
        ids.push_back(id);
    }
    ids.push_back("badNE_10");
    ids.push_back("badNE_100");
    std::sort(ids.begin(), ids.end());
    return ids;
}

bool isKnownExample(const std::string& id) {
    return scenarios().count(id) > 0 || badEquilibriumSize(id).has_value();
}

std::filesystem::path defaultDataDir() {
    if (const char* env = std::getenv("FIRESALE_DATA_DIR"); env && *env) {
        return env;
    }
    return FIRESALE_DATA_DIR;
}

Game badEquilibriumGame(std::size_t n) {
    if (n < 2) {
        throw std::invalid_argument("bad-equilibrium game needs n >= 2");
    }
    const double share = 1.0 / static_cast<double>(n);
    std::vector<AgentSpec> agents(n, AgentSpec{1.0, 1.0, {share}});
    std::vector<AssetSpec> assets{AssetSpec{PriceImpact::linear(static_cast<double>(n) / 2.0)}};
    return Game(std::move(agents), std::move(assets), 1.0, 3.0);
}

Game exampleGame(const std::string& id, const std::filesystem::path& dataDir) {
    requireKnown(id);
    if (const auto n = badEquilibriumSize(id)) {
        const auto file = dataDir / "games" / (id + ".json");
        return std::filesystem::exists(file) ? loadGame(file) : badEquilibriumGame(*n);
    }
    return loadGame(dataDir / "games" / (id + ".json"));
}

json runScenario(const std::string& id, const std::filesystem::path& dataDir) {
    const Game game = exampleGame(id, dataDir);
    json out = badEquilibriumSize(id) ? badEquilibrium(game) : scenarios().at(id)(game);
    out["id"] = id;
    return out;
}

FixtureComparison compareFixture(const json& fixture, const json& values) {
    FixtureComparison cmp;
    if (!fixture.contains("values") || !fixture["values"].is_object()) {
        throw std::invalid_argument("fixture has no 'values' object");
    }
    for (const auto& [key, spec] : fixture["values"].items()) {
        const json expected = spec.is_object() && spec.contains("expected") ? spec["expected"] : spec;
        const double tol = spec.is_object() ? spec.value("tol", 0.0) : 0.0;
        ++cmp.checked;
        const json actual = values.contains(key) ? values[key] : json(nullptr);
        if (!numbersMatch(expected, actual, tol)) {
            cmp.pass = false;
            cmp.mismatches.push_back({key, expected, actual, tol});
        }
    }
    return cmp;
}

json loadFixture(const std::string& id, const std::filesystem::path& dataDir) {
    requireKnown(id);
    const auto path = dataDir / "fixtures" / (id + ".json");
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open fixture " + path.string());
    }
    return json::parse(in);
}

} // namespace firesale
