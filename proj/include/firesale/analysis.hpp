#pragma once

#include "firesale/best_response.hpp"
#include "firesale/dynamics.hpp"
#include "firesale/model.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

namespace firesale {

inline constexpr double kEquilibriumTol = 1e-8;

struct EquilibriumReport {
    StrategyProfile profile;
    bool isExact = false;            // every |y_i - BR_i(y)| <= tolerance
    double maxDeviation = 0.0;       // max_i |y_i - BR_i(y)|
    std::vector<double> bestResponses;
    std::vector<Utility> utilities;
    Utility welfare = Utility::negInf();
    bool maximal = false;            // reached by dynamics from all-ones
    std::size_t steps = 0;           // dynamics steps, when maximal
};

/// Best-response dynamics from all-ones to delta = 1e-10. Requires alpha = 1
/// or convex impact (throws UnsupportedRegime otherwise).
EquilibriumReport maximalEquilibrium(const Game& game, const BestResponseOptions& opts = {});

EquilibriumReport verifyEquilibrium(const Game& game, const StrategyProfile& y, double tol = kEquilibriumTol,
                                    const BestResponseOptions& opts = {});

struct LatticeOptions {
    std::size_t samples = 100;       // random starts
    std::uint64_t seed = 1;
    double delta = 1e-12;            // sequential dynamics stop threshold
    std::size_t maxPasses = 200000;
    double distinctTol = 1e-6;       // equilibria closer than this are merged
    double verifyTol = 1e-6;         // tolerance for joins and meets
    BestResponseOptions responseOptions;
};

struct LatticeViolation {
    std::size_t first = 0;  // indices into equilibria
    std::size_t second = 0;
    bool join = true;       // point-wise max (true) or min (false)
    StrategyProfile profile;
    double deviation = 0.0;
};

struct LatticeDiagnostics {
    std::vector<StrategyProfile> equilibria; // distinct equilibria found
    std::size_t runs = 0;
    std::size_t unconverged = 0;             // runs that cycled or ran out of budget
    std::size_t pairsChecked = 0;
    std::vector<LatticeViolation> violations;
};

/// Samples equilibria by sequential dynamics from random starts and checks
/// that point-wise max and min of every pair are equilibria.
LatticeDiagnostics latticeCheck(const Game& game, const LatticeOptions& opts = {});

struct CoalitionDeviation {
    std::uint32_t mask = 0; // bit i set: agent i deviates
    std::vector<std::size_t> members;
    StrategyProfile deviation;        // full profile after the deviation
    std::vector<double> gains;        // per member; +inf when leaving -inf
    double minGain = 0.0;
};

struct CoalitionScanOptions {
    std::size_t gridPoints = 51;     // per member
    bool refine = true;              // one local pass at a tenth of the grid step
    double gainTol = kConstraintTol; // a member gains when its gain exceeds this
    std::vector<StrategyProfile> extraCandidates; // also tried for every coalition they fit
};

struct CoalitionScanResult {
    std::optional<CoalitionDeviation> best; // strictly improving for every member
    std::vector<CoalitionDeviation> perCoalition; // best candidate of each coalition
};

/// Exhaustive coalition search for n <= 4 agents.
CoalitionScanResult coalitionScan(const Game& game, const StrategyProfile& y,
                                  const CoalitionScanOptions& opts = {});

/// Columns: coalition_mask, members, y_1..y_n, gain_1..gain_n, min_gain, improving.
void writeCoalitionCsv(std::ostream& out, const Game& game, const CoalitionScanResult& result,
                       double gainTol = kConstraintTol);

struct WelfareOptimum {
    StrategyProfile profile;
    Utility welfare = Utility::negInf();
};

/// Grid search for the welfare maximum over [0,1]^n (n <= 3), refined
/// locally around the best grid point.
WelfareOptimum socialOptimumScan(const Game& game, std::size_t gridPoints = 201);

struct BailoutReport {
    EquilibriumReport before;
    EquilibriumReport after;
    std::vector<double> equityBefore; // per agent, at the respective maximal equilibria
    std::vector<double> equityAfter;
};

/// Moves `share` of asset j from donor to recipient and compares the
/// maximal equilibria of both games.
Game transferHoldings(const Game& game, std::size_t donor, std::size_t recipient, std::size_t asset,
                      double share);
BailoutReport bailoutWhatIf(const Game& game, std::size_t donor, std::size_t recipient, std::size_t asset,
                            double share, const BestResponseOptions& opts = {});

struct GridScanResult {
    std::size_t points = 0;
    std::vector<StrategyProfile> equilibria; // grid profiles within tolerance of their best responses
};

/// Exhaustive search over the grid {0, step, ..., 1}^n (n <= 3) for profiles
/// whose every coordinate is within tol of the agent's best response.
GridScanResult equilibriumGridScan(const Game& game, double step, double tol,
                                   const BestResponseOptions& opts = {});

/// Finite utilities as numbers, -inf as the string "-inf".
nlohmann::json toJson(const Utility& u);
nlohmann::json toJson(const EquilibriumReport& report);
nlohmann::json toJson(const BailoutReport& report);
nlohmann::json toJson(const CoalitionScanResult& result);
nlohmann::json toJson(const LatticeDiagnostics& diag);

} // namespace firesale
