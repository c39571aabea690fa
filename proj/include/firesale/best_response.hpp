#pragma once

#include "firesale/model.hpp"

#include <cstddef>
#include <optional>
#include <string>

namespace firesale {

/// Numerical knobs for the best-response solvers. Defaults match the
/// documented behaviour; the tipping-point games pin finer scan grids.
struct BestResponseOptions {
    std::size_t scanPoints = 4096;       // utility grid for the generic scan
    double refineTol = 1e-10;            // golden-section bracket width
    double tieSlack = kConstraintTol;    // utility slack for the largest-keep tie-break
    std::size_t feasibilityCells = 1024; // downward scan for the maximal feasible keep
    double bisectionWidth = 1e-12;       // refinement of the feasibility boundary
};

enum class BestResponseMethod { ClosedFormQuadratic, ConvexDichotomy, NumericScan, Simplified };

std::string toString(BestResponseMethod method);

struct BestResponseResult {
    double keep = 0.0;
    Utility utility = Utility::negInf();
    bool feasible = false; // some y_i with positive equity and leverage <= lambda exists
    BestResponseMethod method = BestResponseMethod::NumericScan;
};

/// V_i(y) and g_i(y) of the simplified response, which prices the agent's
/// holdings at the current profile and ignores its own price impact.
struct SimplifiedQuantities {
    double holdingsValue = 0.0;         // V_i
    std::optional<double> target;       // g_i, defined when V_i > 0
};

/// Largest keep y_i (others fixed at y) with positive equity and leverage
/// within the cap, or nullopt when none exists. Entry y[i] is ignored.
std::optional<double> maxFeasibleKeep(const Game& game, const StrategyProfile& y, std::size_t i,
                                      const BestResponseOptions& opts = {});

/// Exact best response of agent i to y_{-i}; ties go to the largest keep.
BestResponseResult bestResponse(const Game& game, const StrategyProfile& y, std::size_t i,
                                const BestResponseOptions& opts = {});

SimplifiedQuantities simplifiedQuantities(const Game& game, const StrategyProfile& y, std::size_t i);

/// Simplified best response. Requires alpha == 1 and linear impact.
double simplifiedBestResponse(const Game& game, const StrategyProfile& y, std::size_t i);

enum class ResponseKind { Exact, Simplified };

/// All agents respond simultaneously to y.
StrategyProfile bestResponseProfile(const Game& game, const StrategyProfile& y, ResponseKind kind,
                                    const BestResponseOptions& opts = {});

/// Liquid if some keep is feasible; otherwise insolvent when no keep gives
/// positive equity, illiquid when one does but the cap is always violated.
AgentStatus liquidityStatus(const Game& game, const StrategyProfile& y, std::size_t i,
                            const BestResponseOptions& opts = {});

namespace detail {

/// Root of the post-sale linear leverage constraint
///   B t^2 + (C - lambda B) t + a - lambda (a - l + C) <= 0
/// with B = sum_j x_ij^2 p0_j and C = sum_j x_ij p0_j K_j (K_j: others'
/// kept amount). Returns the largest feasible t in [0, 1].
std::optional<double> postSaleLinearMaxKeep(double illiquid, double liabilities, double lambda,
                                            double quadCoeff, double crossValue);

} // namespace detail

} // namespace firesale
