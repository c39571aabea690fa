#pragma once

#include "firesale/price_impact.hpp"

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace firesale {

/// Absolute tolerance used for every constraint check (leverage cap,
/// holdings column sums, tie-breaking slack).
inline constexpr double kConstraintTol = 1e-9;

struct AgentSpec {
    double illiquidAssets = 0.0;
    double liabilities = 0.0;
    std::vector<double> holdings; // one entry per asset, in [0, 1]
};

struct AssetSpec {
    PriceImpact impact = PriceImpact::linear(1.0);
};

/// Immutable fire-sale game: agents with illiquid assets, liabilities and
/// liquid holdings in overlapping assets; per-asset price impact; the
/// implementation shortfall alpha and the leverage cap lambda.
///
/// Invariants (checked on construction, GameError otherwise):
///   illiquid assets > 0, liabilities >= 0, holdings in [0, 1],
///   every column sum <= 1 + 1e-9, alpha in [0, 1], lambda > 1.
class Game {
public:
    Game(std::vector<AgentSpec> agents, std::vector<AssetSpec> assets, double alpha, double lambda);

    std::size_t numAgents() const { return illiquid_.size(); }
    std::size_t numAssets() const { return impacts_.size(); }

    double illiquidAssets(std::size_t i) const { return illiquid_[i]; }
    double liabilities(std::size_t i) const { return liabilities_[i]; }
    double holding(std::size_t i, std::size_t j) const { return holdings_[i * numAssets() + j]; }
    std::span<const double> holdingsRow(std::size_t i) const {
        return {holdings_.data() + i * numAssets(), numAssets()};
    }
    const PriceImpact& impact(std::size_t j) const { return impacts_[j]; }
    double initialPrice(std::size_t j) const { return impacts_[j].initialPrice(); }
    double alpha() const { return alpha_; }
    double lambda() const { return lambda_; }

    bool allLinear() const;
    bool allConvex() const;
    /// alpha == 1 and linear impact: closed forms apply.
    bool isPostSaleLinear() const { return alpha_ == 1.0 && allLinear(); }
    /// alpha == 1 or convex impact: best responses are monotone and the
    /// equilibria form a lattice.
    bool hasLatticeStructure() const { return alpha_ == 1.0 || allConvex(); }

    std::vector<AgentSpec> agentSpecs() const;
    std::vector<AssetSpec> assetSpecs() const;

private:
    std::vector<double> illiquid_;
    std::vector<double> liabilities_;
    std::vector<double> holdings_;
    std::vector<PriceImpact> impacts_;
    double alpha_;
    double lambda_;
};

/// Even-sales strategy profile: y_i is the share of agent i's whole
/// portfolio that agent i keeps.
class StrategyProfile {
public:
    StrategyProfile() = default;
    explicit StrategyProfile(std::vector<double> keep);

    static StrategyProfile constant(std::size_t n, double value);
    static StrategyProfile ones(std::size_t n) { return constant(n, 1.0); }
    static StrategyProfile zeros(std::size_t n) { return constant(n, 0.0); }

    std::size_t size() const { return keep_.size(); }
    double operator[](std::size_t i) const { return keep_[i]; }
    const std::vector<double>& values() const { return keep_; }

    /// Copy with agent i's strategy replaced.
    StrategyProfile with(std::size_t i, double value) const;
    void set(std::size_t i, double value);

    double maxDistance(const StrategyProfile& other) const;
    bool pointwiseLessEqual(const StrategyProfile& other, double tol = 0.0) const;

    bool operator==(const StrategyProfile&) const = default;

private:
    std::vector<double> keep_;
};

/// Utility of an agent: either finite equity or the distinguished value
/// negative infinity (forced-liquidation violation). Arithmetic on the
/// infinite value is not offered; callers branch on isNegInf().
class Utility {
public:
    static Utility negInf() { return Utility(); }
    static Utility of(double equity) { return Utility(equity); }

    bool isNegInf() const { return !value_.has_value(); }
    bool isFinite() const { return value_.has_value(); }
    double value() const; // throws std::logic_error on negInf

    std::partial_ordering operator<=>(const Utility& other) const;
    bool operator==(const Utility& other) const = default;

    std::string toString() const;

private:
    Utility() = default;
    explicit Utility(double v) : value_(v) {}
    std::optional<double> value_;
};

enum class AgentStatus { Liquid, Insolvent, Illiquid };

std::string toString(AgentStatus status);

struct AgentValuation {
    double assets = 0.0;
    double revenue = 0.0;
    double equity = 0.0;
    std::optional<double> leverage; // present iff equity > 0
    AgentStatus status = AgentStatus::Liquid;
    Utility utility = Utility::negInf();
};

double keptAmount(const Game& game, const StrategyProfile& y, std::size_t j);
double price(const Game& game, const StrategyProfile& y, std::size_t j);

/// Full valuation including the liquidity status of agent i at y_{-i}.
AgentValuation valuation(const Game& game, const StrategyProfile& y, std::size_t i);

/// Utility alone, without the status probe.
Utility utility(const Game& game, const StrategyProfile& y, std::size_t i);

double equity(const Game& game, const StrategyProfile& y, std::size_t i);

/// Sum of utilities; negative infinity as soon as one agent is.
Utility socialWelfare(const Game& game, const StrategyProfile& y);

/// Shared utility rule: y_i may always be 0; any positive keep needs
/// positive equity and leverage within lambda (+ tolerance).
Utility utilityFrom(double keep, double assets, double equity, double lambda);

namespace detail {

/// Agent i's view of the market with everyone else's strategy frozen.
/// Evaluates assets/revenue/equity as a function of agent i's own keep.
class AgentSlice {
public:
    AgentSlice(const Game& game, const StrategyProfile& y, std::size_t i);

    struct Point {
        double keep;
        double assets;
        double revenue;
        double equity;
    };

    Point evaluate(double keep) const;
    Utility utilityAt(double keep) const;
    bool feasible(double keep) const; // equity > 0 and leverage <= lambda + tol

    std::size_t agent() const { return agent_; }
    const Game& game() const { return *game_; }
    /// Kept amount of asset j held by everyone except agent i.
    double othersKept(std::size_t j) const { return othersKept_[j]; }

private:
    const Game* game_;
    std::size_t agent_;
    std::vector<double> othersKept_;
};

} // namespace detail

} // namespace firesale
