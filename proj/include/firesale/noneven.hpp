#pragma once

#include "firesale/model.hpp"

#include <cstddef>
#include <istream>
#include <ostream>
#include <vector>

namespace firesale {

/// Non-even sales: y_ij is the share of asset j that agent i keeps.
class VectorProfile {
public:
    VectorProfile() = default;
    VectorProfile(std::size_t agents, std::size_t assets, double value = 1.0);
    explicit VectorProfile(std::vector<std::vector<double>> rows);

    /// Every row constant: the even-sales profile y.
    static VectorProfile fromEven(const StrategyProfile& y, std::size_t assets);

    std::size_t numAgents() const { return rows_.size(); }
    std::size_t numAssets() const { return rows_.empty() ? 0 : rows_.front().size(); }

    double operator()(std::size_t i, std::size_t j) const { return rows_[i][j]; }
    const std::vector<double>& row(std::size_t i) const { return rows_[i]; }
    void setRow(std::size_t i, std::vector<double> row);
    VectorProfile withRow(std::size_t i, std::vector<double> row) const;

    bool operator==(const VectorProfile&) const = default;

private:
    std::vector<std::vector<double>> rows_;
};

double keptAmount(const Game& game, const VectorProfile& y, std::size_t j);

/// Valuation under non-even sales. The liquidity status probes the agent's
/// feasible set with the exact solver when alpha = 1 and impact is linear;
/// otherwise it reflects the current strategy only (insolvent when equity
/// <= 0, illiquid when leverage exceeds the cap).
AgentValuation valuationNonEven(const Game& game, const VectorProfile& y, std::size_t i);
Utility utilityNonEven(const Game& game, const VectorProfile& y, std::size_t i);
Utility socialWelfareNonEven(const Game& game, const VectorProfile& y);

struct NonEvenResponse {
    std::vector<double> keep;
    Utility utility = Utility::negInf();
    bool feasible = false;
};

/// Equity-maximizing keep vector of agent i (row i of y is ignored) under
/// the leverage cap. Requires alpha = 1 and linear impact.
NonEvenResponse bestResponseNonEven(const Game& game, const VectorProfile& y, std::size_t i);

struct ScheduledMove {
    std::size_t agent = 0;
    std::vector<double> keep;
};

struct NonEvenTrace {
    std::vector<VectorProfile> profiles;           // start, then one per move
    std::vector<std::vector<Utility>> utilities;   // per profile, per agent
    std::vector<bool> improving;                   // per move: the mover strictly gained
};

NonEvenTrace improvingResponseRun(const Game& game, const VectorProfile& start,
                                  const std::vector<ScheduledMove>& schedule);

/// Agents as rows, assets as columns, no header.
void writeVectorProfileCsv(std::ostream& out, const VectorProfile& y);
VectorProfile readVectorProfileCsv(std::istream& in);

} // namespace firesale
