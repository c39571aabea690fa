#include "firesale/model.hpp"

#include "firesale/best_response.hpp"
#include "firesale/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace firesale {

namespace {

std::string agentField(std::size_t i, const char* name) {
    return "agents/" + std::to_string(i) + "/" + name;
}

} // namespace

Game::Game(std::vector<AgentSpec> agents, std::vector<AssetSpec> assets, double alpha, double lambda)
    : alpha_(alpha), lambda_(lambda) {
    if (agents.empty()) {
        throw GameError("agents", "game needs at least one agent");
    }
    if (assets.empty()) {
        throw GameError("assets", "game needs at least one asset");
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw GameError("alpha", "alpha must lie in [0, 1]");
    }
    if (!(lambda > 1.0) || !std::isfinite(lambda)) {
        throw GameError("lambda", "leverage cap must be > 1");
    }
    const std::size_t m = assets.size();
    illiquid_.reserve(agents.size());
    liabilities_.reserve(agents.size());
    holdings_.reserve(agents.size() * m);
    std::vector<double> columnSums(m, 0.0);
    for (std::size_t i = 0; i < agents.size(); ++i) {
        const auto& a = agents[i];
        if (!(a.illiquidAssets > 0.0) || !std::isfinite(a.illiquidAssets)) {
            throw GameError(agentField(i, "illiquid_assets"), "illiquid assets must be > 0");
        }
        if (!(a.liabilities >= 0.0) || !std::isfinite(a.liabilities)) {
            throw GameError(agentField(i, "liabilities"), "liabilities must be >= 0");
        }
        if (a.holdings.size() != m) {
            throw GameError(agentField(i, "holdings"),
                            "expected " + std::to_string(m) + " holdings, got " +
                                std::to_string(a.holdings.size()));
        }
        for (std::size_t j = 0; j < m; ++j) {
            const double x = a.holdings[j];
            if (!(x >= 0.0 && x <= 1.0)) {
                throw GameError(agentField(i, "holdings") + "/" + std::to_string(j),
                                "holding must lie in [0, 1]");
            }
            columnSums[j] += x;
            holdings_.push_back(x);
        }
        illiquid_.push_back(a.illiquidAssets);
        liabilities_.push_back(a.liabilities);
    }
    for (std::size_t j = 0; j < m; ++j) {
        if (columnSums[j] > 1.0 + kConstraintTol) {
            std::ostringstream msg;
            msg << "holdings of asset " << j << " sum to " << columnSums[j] << " > 1";
            throw GameError("assets/" + std::to_string(j), msg.str());
        }
        impacts_.push_back(assets[j].impact);
    }
}

bool Game::allLinear() const {
    return std::all_of(impacts_.begin(), impacts_.end(), [](const auto& p) { return p.isLinear(); });
}

bool Game::allConvex() const {
    return std::all_of(impacts_.begin(), impacts_.end(), [](const auto& p) { return p.isConvex(); });
}

std::vector<AgentSpec> Game::agentSpecs() const {
    std::vector<AgentSpec> out;
    for (std::size_t i = 0; i < numAgents(); ++i) {
        auto row = holdingsRow(i);
        out.push_back({illiquid_[i], liabilities_[i], {row.begin(), row.end()}});
    }
    return out;
}

std::vector<AssetSpec> Game::assetSpecs() const {
    std::vector<AssetSpec> out;
    for (const auto& p : impacts_) {
        out.push_back({p});
    }
    return out;
}

StrategyProfile::StrategyProfile(std::vector<double> keep) : keep_(std::move(keep)) {
    for (std::size_t i = 0; i < keep_.size(); ++i) {
        if (!(keep_[i] >= 0.0 && keep_[i] <= 1.0)) {
            throw std::invalid_argument("strategy of agent " + std::to_string(i) +
                                        " outside [0, 1]");
        }
    }
}

StrategyProfile StrategyProfile::constant(std::size_t n, double value) {
    return StrategyProfile(std::vector<double>(n, value));
}

StrategyProfile StrategyProfile::with(std::size_t i, double value) const {
    StrategyProfile copy = *this;
    copy.set(i, value);
    return copy;
}

void StrategyProfile::set(std::size_t i, double value) {
    if (!(value >= 0.0 && value <= 1.0)) {
        throw std::invalid_argument("strategy outside [0, 1]");
    }
    keep_[i] = value;
}

double StrategyProfile::maxDistance(const StrategyProfile& other) const {
    double d = 0.0;
    for (std::size_t i = 0; i < keep_.size(); ++i) {
        d = std::max(d, std::abs(keep_[i] - other.keep_[i]));
    }
    return d;
}

bool StrategyProfile::pointwiseLessEqual(const StrategyProfile& other, double tol) const {
    for (std::size_t i = 0; i < keep_.size(); ++i) {
        if (keep_[i] > other.keep_[i] + tol) {
            return false;
        }
    }
    return true;
}

double Utility::value() const {
    if (!value_) {
        throw std::logic_error("utility is negative infinity");
    }
    return *value_;
}

std::partial_ordering Utility::operator<=>(const Utility& other) const {
    if (isNegInf() && other.isNegInf()) {
        return std::partial_ordering::equivalent;
    }
    if (isNegInf()) {
        return std::partial_ordering::less;
    }
    if (other.isNegInf()) {
        return std::partial_ordering::greater;
    }
    return *value_ <=> *other.value_;
}

std::string Utility::toString() const {
    if (isNegInf()) {
        return "-inf";
    }
    std::ostringstream os;
    os.precision(17);
    os << *value_;
    return os.str();
}

std::string toString(AgentStatus status) {
    switch (status) {
    case AgentStatus::Liquid:
        return "liquid";
    case AgentStatus::Insolvent:
        return "insolvent";
    case AgentStatus::Illiquid:
        return "illiquid";
    }
    return "unknown";
}

double keptAmount(const Game& game, const StrategyProfile& y, std::size_t j) {
    double total = 0.0;
    for (std::size_t i = 0; i < game.numAgents(); ++i) {
        total += y[i] * game.holding(i, j);
    }
    return total;
}

double price(const Game& game, const StrategyProfile& y, std::size_t j) {
    return game.impact(j)(keptAmount(game, y, j));
}

Utility utilityFrom(double keep, double assets, double equity, double lambda) {
    if (keep == 0.0) {
        return Utility::of(equity);
    }
    if (equity <= 0.0 || assets > (lambda + kConstraintTol) * equity) {
        return Utility::negInf();
    }
    return Utility::of(equity);
}

namespace detail {

AgentSlice::AgentSlice(const Game& game, const StrategyProfile& y, std::size_t i)
    : game_(&game), agent_(i), othersKept_(game.numAssets(), 0.0) {
    for (std::size_t k = 0; k < game.numAgents(); ++k) {
        if (k == i) {
            continue;
        }
        const auto row = game.holdingsRow(k);
        for (std::size_t j = 0; j < row.size(); ++j) {
            othersKept_[j] += y[k] * row[j];
        }
    }
}

AgentSlice::Point AgentSlice::evaluate(double keep) const {
    const Game& g = *game_;
    const auto row = g.holdingsRow(agent_);
    const double alpha = g.alpha();
    double held = 0.0;
    double sold = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
        const double x = row[j];
        if (x == 0.0) {
            continue;
        }
        const double p = g.impact(j)(othersKept_[j] + keep * x);
        held += x * p;
        sold += x * ((1.0 - alpha) * g.initialPrice(j) + alpha * p);
    }
    Point pt;
    pt.keep = keep;
    pt.assets = g.illiquidAssets(agent_) + keep * held;
    pt.revenue = (1.0 - keep) * sold;
    pt.equity = pt.assets + pt.revenue - g.liabilities(agent_);
    return pt;
}

Utility AgentSlice::utilityAt(double keep) const {
    const auto pt = evaluate(keep);
    return utilityFrom(keep, pt.assets, pt.equity, game_->lambda());
}

bool AgentSlice::feasible(double keep) const {
    const auto pt = evaluate(keep);
    return pt.equity > 0.0 && pt.assets <= (game_->lambda() + kConstraintTol) * pt.equity;
}

} // namespace detail

AgentValuation valuation(const Game& game, const StrategyProfile& y, std::size_t i) {
    const detail::AgentSlice slice(game, y, i);
    const auto pt = slice.evaluate(y[i]);
    AgentValuation v;
    v.assets = pt.assets;
    v.revenue = pt.revenue;
    v.equity = pt.equity;
    if (pt.equity > 0.0) {
        v.leverage = pt.assets / pt.equity;
    }
    v.utility = utilityFrom(y[i], pt.assets, pt.equity, game.lambda());
    v.status = liquidityStatus(game, y, i);
    return v;
}

Utility utility(const Game& game, const StrategyProfile& y, std::size_t i) {
    return detail::AgentSlice(game, y, i).utilityAt(y[i]);
}

double equity(const Game& game, const StrategyProfile& y, std::size_t i) {
    return detail::AgentSlice(game, y, i).evaluate(y[i]).equity;
}

Utility socialWelfare(const Game& game, const StrategyProfile& y) {
    double total = 0.0;
    for (std::size_t i = 0; i < game.numAgents(); ++i) {
        const Utility u = utility(game, y, i);
        if (u.isNegInf()) {
            return Utility::negInf();
        }
        total += u.value();
    }
    return Utility::of(total);
}

} // namespace firesale
