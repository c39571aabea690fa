#include "firesale/noneven.hpp"

#include "firesale/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace firesale {

namespace {

void checkRow(const std::vector<double>& row, std::size_t i) {
    for (double v : row) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument("strategy of agent " + std::to_string(i) + " outside [0, 1]");
        }
    }
}

} // namespace

VectorProfile::VectorProfile(std::size_t agents, std::size_t assets, double value)
    : rows_(agents, std::vector<double>(assets, value)) {
    for (std::size_t i = 0; i < agents; ++i) {
        checkRow(rows_[i], i);
    }
}

VectorProfile::VectorProfile(std::vector<std::vector<double>> rows) : rows_(std::move(rows)) {
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        if (rows_[i].size() != rows_.front().size()) {
            throw std::invalid_argument("vector profile rows differ in length");
        }
        checkRow(rows_[i], i);
    }
}

VectorProfile VectorProfile::fromEven(const StrategyProfile& y, std::size_t assets) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < y.size(); ++i) {
        rows.emplace_back(assets, y[i]);
    }
    return VectorProfile(std::move(rows));
}

void VectorProfile::setRow(std::size_t i, std::vector<double> row) {
    if (row.size() != numAssets()) {
        throw std::invalid_argument("row has wrong length");
    }
    checkRow(row, i);
    rows_[i] = std::move(row);
}

VectorProfile VectorProfile::withRow(std::size_t i, std::vector<double> row) const {
    VectorProfile copy = *this;
    copy.setRow(i, std::move(row));
    return copy;
}

double keptAmount(const Game& game, const VectorProfile& y, std::size_t j) {
    double total = 0.0;
    for (std::size_t i = 0; i < game.numAgents(); ++i) {
        total += y(i, j) * game.holding(i, j);
    }
    return total;
}

namespace {

struct Snapshot {
    double assets = 0.0;
    double revenue = 0.0;
    double equity = 0.0;
};

Snapshot evaluate(const Game& game, const VectorProfile& y, std::size_t i) {
    const auto row = game.holdingsRow(i);
    const double alpha = game.alpha();
    Snapshot s;
    s.assets = game.illiquidAssets(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
        const double x = row[j];
        if (x == 0.0) {
            continue;
        }
        const double p = game.impact(j)(keptAmount(game, y, j));
        s.assets += y(i, j) * x * p;
        s.revenue += (1.0 - y(i, j)) * x * ((1.0 - alpha) * game.initialPrice(j) + alpha * p);
    }
    s.equity = s.assets + s.revenue - game.liabilities(i);
    return s;
}

bool keepsSomething(const VectorProfile& y, std::size_t i) {
    const auto& r = y.row(i);
    return std::any_of(r.begin(), r.end(), [](double v) { return v != 0.0; });
}

Utility utilityOf(const Snapshot& s, bool keeps, double lambda) {
    return utilityFrom(keeps ? 1.0 : 0.0, s.assets, s.equity, lambda);
}

} // namespace

Utility utilityNonEven(const Game& game, const VectorProfile& y, std::size_t i) {
    return utilityOf(evaluate(game, y, i), keepsSomething(y, i), game.lambda());
}

AgentValuation valuationNonEven(const Game& game, const VectorProfile& y, std::size_t i) {
    const Snapshot s = evaluate(game, y, i);
    AgentValuation v;
    v.assets = s.assets;
    v.revenue = s.revenue;
    v.equity = s.equity;
    if (s.equity > 0.0) {
        v.leverage = s.assets / s.equity;
    }
    v.utility = utilityOf(s, keepsSomething(y, i), game.lambda());
    if (game.isPostSaleLinear()) {
        if (bestResponseNonEven(game, y, i).feasible) {
            v.status = AgentStatus::Liquid;
        } else {
            // Equity is nondecreasing in every own entry: all-ones bounds it.
            const auto ones = y.withRow(i, std::vector<double>(game.numAssets(), 1.0));
            v.status = evaluate(game, ones, i).equity > 0.0 ? AgentStatus::Illiquid : AgentStatus::Insolvent;
        }
    } else if (s.equity <= 0.0) {
        v.status = AgentStatus::Insolvent;
    } else if (s.assets > (game.lambda() + kConstraintTol) * s.equity) {
        v.status = AgentStatus::Illiquid;
    }
    return v;
}

Utility socialWelfareNonEven(const Game& game, const VectorProfile& y) {
    double total = 0.0;
    for (std::size_t i = 0; i < game.numAgents(); ++i) {
        const Utility u = utilityNonEven(game, y, i);
        if (u.isNegInf()) {
            return Utility::negInf();
        }
        total += u.value();
    }
    return Utility::of(total);
}

NonEvenResponse bestResponseNonEven(const Game& game, const VectorProfile& y, std::size_t i) {
    if (!game.isPostSaleLinear()) {
        throw UnsupportedRegime("non-even best response requires alpha = 1 and linear impact");
    }
    const std::size_t m = game.numAssets();
    const auto row = game.holdingsRow(i);
    const double cap = game.lambda() + kConstraintTol;

    // Others' kept amount K_j, weights w_j = x_j^2 p0_j, c_j = x_j p0_j K_j.
    std::vector<double> others(m, 0.0);
    for (std::size_t k = 0; k < game.numAgents(); ++k) {
        if (k != i) {
            for (std::size_t j = 0; j < m; ++j) {
                others[j] += y(k, j) * game.holding(k, j);
            }
        }
    }
    double cross = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        cross += row[j] * game.initialPrice(j) * others[j];
    }
    const double base = game.illiquidAssets(i) - cap * (game.illiquidAssets(i) - game.liabilities(i) + cross);
    // Leverage constraint a - cap * e <= 0 as a separable convex quadratic.
    auto h = [&](const std::vector<double>& t) {
        double v = base;
        for (std::size_t j = 0; j < m; ++j) {
            const double w = row[j] * row[j] * game.initialPrice(j);
            const double c = row[j] * game.initialPrice(j) * others[j];
            v += (w * t[j] + c - cap * w) * t[j];
        }
        return v;
    };
    // Stationary point of the Lagrangian for multiplier 1/(2s).
    auto at = [&](double s) {
        std::vector<double> t(m, 1.0);
        for (std::size_t j = 0; j < m; ++j) {
            if (row[j] > 0.0) {
                t[j] = std::clamp(s + 0.5 * cap - others[j] / (2.0 * row[j]), 0.0, 1.0);
            }
        }
        return t;
    };

    NonEvenResponse r;
    std::vector<double> best(m, 1.0);
    if (h(best) <= 0.0) {
        r.feasible = true;
    } else if (h(at(0.0)) > 0.0) {
        best.assign(m, 0.0);
    } else {
        double lo = 0.0;
        double hi = 1.0 + cap;
        for (std::size_t j = 0; j < m; ++j) {
            if (row[j] > 0.0) {
                hi = std::max(hi, 1.0 + others[j] / (2.0 * row[j]));
            }
        }
        for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
            const double mid = 0.5 * (lo + hi);
            if (h(at(mid)) <= 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        best = at(lo);
        r.feasible = true;
    }
    r.keep = best;
    r.utility = utilityNonEven(game, y.withRow(i, best), i);
    return r;
}

NonEvenTrace improvingResponseRun(const Game& game, const VectorProfile& start,
                                  const std::vector<ScheduledMove>& schedule) {
    auto utilities = [&](const VectorProfile& y) {
        std::vector<Utility> u;
        for (std::size_t i = 0; i < game.numAgents(); ++i) {
            u.push_back(utilityNonEven(game, y, i));
        }
        return u;
    };
    NonEvenTrace t;
    t.profiles.push_back(start);
    t.utilities.push_back(utilities(start));
    for (const auto& move : schedule) {
        if (move.agent >= game.numAgents()) {
            throw std::invalid_argument("scheduled move for unknown agent");
        }
        VectorProfile next = t.profiles.back().withRow(move.agent, move.keep);
        auto u = utilities(next);
        t.improving.push_back(u[move.agent] > t.utilities.back()[move.agent]);
        t.profiles.push_back(std::move(next));
        t.utilities.push_back(std::move(u));
    }
    return t;
}

void writeVectorProfileCsv(std::ostream& out, const VectorProfile& y) {
    const auto oldPrecision = out.precision(17);
    for (std::size_t i = 0; i < y.numAgents(); ++i) {
        for (std::size_t j = 0; j < y.numAssets(); ++j) {
            out << (j ? "," : "") << y(i, j);
        }
        out << '\n';
    }
    out.precision(oldPrecision);
}

VectorProfile readVectorProfileCsv(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            row.push_back(std::stod(cell));
        }
        rows.push_back(std::move(row));
    }
    return VectorProfile(std::move(rows));
}

} // namespace firesale
