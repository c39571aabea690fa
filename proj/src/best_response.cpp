#include "firesale/best_response.hpp"

#include "firesale/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace firesale {

std::string toString(BestResponseMethod method) {
    switch (method) {
    case BestResponseMethod::ClosedFormQuadratic:
        return "closed_form_quadratic";
    case BestResponseMethod::ConvexDichotomy:
        return "convex_dichotomy";
    case BestResponseMethod::NumericScan:
        return "numeric_scan";
    case BestResponseMethod::Simplified:
        return "simplified";
    }
    return "unknown";
}

namespace detail {

std::optional<double> postSaleLinearMaxKeep(double illiquid, double liabilities, double lambda,
                                            double quadCoeff, double crossValue) {
    // Roots are taken on the exact cap; the tolerance only absorbs rounding.
    const double baseEquity = illiquid - liabilities + crossValue;
    const double a = quadCoeff;
    const double b = crossValue - lambda * quadCoeff;
    const double c = illiquid - lambda * baseEquity;
    const double cap = lambda + kConstraintTol;
    auto hTol = [&](double t) { return (a * t + crossValue - cap * quadCoeff) * t + illiquid - cap * baseEquity; };

    if (a <= 0.0) {
        // No liquid exposure: the constraint does not depend on t.
        if (b == 0.0) {
            return hTol(1.0) <= 0.0 ? std::optional<double>(1.0) : std::nullopt;
        }
        const double root = -c / b;
        if (b < 0.0) {
            return root <= 1.0 ? std::optional<double>(1.0) : std::nullopt;
        }
        if (root < 0.0) {
            return std::nullopt;
        }
        return std::min(1.0, root);
    }
    if (hTol(1.0) <= 0.0) {
        return 1.0;
    }
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) {
        return std::nullopt;
    }
    const double sq = std::sqrt(disc);
    // Numerically stable pair of roots.
    const double q = -0.5 * (b + std::copysign(sq, b));
    double r1 = q / a;
    double r2 = q != 0.0 ? c / q : r1;
    if (r1 > r2) {
        std::swap(r1, r2);
    }
    if (r2 < 0.0 || r1 > 1.0) {
        return std::nullopt;
    }
    double t = std::min(1.0, r2);
    if (t < 0.0) {
        t = 0.0;
    }
    // Pull back across the boundary if rounding put the root outside.
    for (int k = 0; k < 8 && hTol(t) > 0.0 && t > 0.0; ++k) {
        t = std::max(0.0, t - 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, t));
    }
    if (hTol(t) > 0.0) {
        return std::nullopt;
    }
    return t;
}

} // namespace detail

namespace {

double crossValue(const detail::AgentSlice& slice) {
    const Game& g = slice.game();
    const auto row = g.holdingsRow(slice.agent());
    double c = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
        c += row[j] * g.initialPrice(j) * slice.othersKept(j);
    }
    return c;
}

double quadCoeff(const Game& g, std::size_t i) {
    const auto row = g.holdingsRow(i);
    double b = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
        b += row[j] * row[j] * g.initialPrice(j);
    }
    return b;
}

std::optional<double> scanMaxFeasible(const detail::AgentSlice& slice, const BestResponseOptions& opts) {
    if (slice.feasible(1.0)) {
        return 1.0;
    }
    const std::size_t cells = std::max<std::size_t>(1, opts.feasibilityCells);
    for (std::size_t k = cells; k-- > 0;) {
        const double t = static_cast<double>(k) / static_cast<double>(cells);
        if (!slice.feasible(t)) {
            continue;
        }
        double lo = t;
        double hi = static_cast<double>(k + 1) / static_cast<double>(cells);
        while (hi - lo > opts.bisectionWidth) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) {
                break;
            }
            if (slice.feasible(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return lo;
    }
    return std::nullopt;
}

std::optional<double> maxFeasibleKeep(const detail::AgentSlice& slice, const BestResponseOptions& opts) {
    const Game& g = slice.game();
    if (g.isPostSaleLinear()) {
        const std::size_t i = slice.agent();
        return detail::postSaleLinearMaxKeep(g.illiquidAssets(i), g.liabilities(i), g.lambda(),
                                             quadCoeff(g, i), crossValue(slice));
    }
    return scanMaxFeasible(slice, opts);
}

struct Candidate {
    double keep;
    Utility utility;
};

// Largest keep among candidates within `slack` of the best utility.
Candidate pickLargestNearBest(const std::vector<Candidate>& cands, double slack) {
    Candidate best = cands.front();
    for (const auto& c : cands) {
        if (c.utility > best.utility) {
            best = c;
        }
    }
    if (best.utility.isNegInf()) {
        return best;
    }
    const double floor = best.utility.value() - slack;
    Candidate chosen = best;
    for (const auto& c : cands) {
        if (c.utility.isFinite() && c.utility.value() >= floor && c.keep > chosen.keep) {
            chosen = c;
        }
    }
    return chosen;
}

double asScore(const Utility& u) {
    return u.isFinite() ? u.value() : -std::numeric_limits<double>::infinity();
}

// Golden-section maximization of the utility on [lo, hi].
Candidate goldenRefine(const detail::AgentSlice& slice, double lo, double hi, double tol) {
    constexpr double invPhi = 0.6180339887498949;
    double x1 = hi - invPhi * (hi - lo);
    double x2 = lo + invPhi * (hi - lo);
    double f1 = asScore(slice.utilityAt(x1));
    double f2 = asScore(slice.utilityAt(x2));
    while (hi - lo > tol) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + invPhi * (hi - lo);
            f2 = asScore(slice.utilityAt(x2));
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - invPhi * (hi - lo);
            f1 = asScore(slice.utilityAt(x1));
        }
    }
    const double t = 0.5 * (lo + hi);
    return {t, slice.utilityAt(t)};
}

BestResponseResult numericScan(const detail::AgentSlice& slice, const BestResponseOptions& opts) {
    const Game& g = slice.game();
    const std::size_t i = slice.agent();
    const std::size_t points = std::max<std::size_t>(2, opts.scanPoints);

    std::vector<Candidate> cands;
    cands.reserve(points + 16);
    std::size_t bestGrid = 0;
    for (std::size_t k = 0; k < points; ++k) {
        const double t = static_cast<double>(k) / static_cast<double>(points - 1);
        cands.push_back({t, slice.utilityAt(t)});
        if (cands[k].utility > cands[bestGrid].utility) {
            bestGrid = k;
        }
    }
    // Tipping points: own keep that puts an asset's kept amount on a kink.
    const auto row = g.holdingsRow(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
        if (row[j] <= 0.0) {
            continue;
        }
        for (double kink : g.impact(j).kinks()) {
            const double t = (kink - slice.othersKept(j)) / row[j];
            if (t >= 0.0 && t <= 1.0) {
                cands.push_back({t, slice.utilityAt(t)});
            }
        }
    }
    const auto ymax = scanMaxFeasible(slice, opts);
    if (ymax) {
        cands.push_back({*ymax, slice.utilityAt(*ymax)});
    }
    if (cands[bestGrid].utility.isFinite()) {
        const double h = 1.0 / static_cast<double>(points - 1);
        const double lo = std::max(0.0, cands[bestGrid].keep - h);
        const double hi = std::min(1.0, cands[bestGrid].keep + h);
        const auto refined = goldenRefine(slice, lo, hi, opts.refineTol);
        if (refined.utility.isFinite()) {
            cands.push_back(refined);
        }
    }
    const auto chosen = pickLargestNearBest(cands, opts.tieSlack);
    return {chosen.keep, chosen.utility, ymax.has_value(), BestResponseMethod::NumericScan};
}

bool solventSomewhere(const detail::AgentSlice& slice, const BestResponseOptions& opts) {
    const Game& g = slice.game();
    if (slice.evaluate(1.0).equity > 0.0 || slice.evaluate(0.0).equity > 0.0) {
        return true;
    }
    if (g.alpha() == 1.0 || g.allConvex()) {
        // Equity is monotone (alpha = 1) or convex in the own keep: the
        // endpoints already bound it.
        return false;
    }
    const std::size_t cells = std::max<std::size_t>(1, opts.feasibilityCells);
    for (std::size_t k = 1; k < cells; ++k) {
        if (slice.evaluate(static_cast<double>(k) / static_cast<double>(cells)).equity > 0.0) {
            return true;
        }
    }
    return false;
}

BestResponseResult bestResponse(const detail::AgentSlice& slice, const BestResponseOptions& opts) {
    const Game& g = slice.game();
    if (g.alpha() == 1.0) {
        // Equity is nondecreasing in the own keep: keep as much as the cap allows.
        const auto ymax = maxFeasibleKeep(slice, opts);
        const double keep = ymax.value_or(0.0);
        const auto method =
            g.allLinear() ? BestResponseMethod::ClosedFormQuadratic : BestResponseMethod::NumericScan;
        return {keep, slice.utilityAt(keep), ymax.has_value(), method};
    }
    if (g.allConvex()) {
        const auto ymax = scanMaxFeasible(slice, opts);
        const Utility atZero = slice.utilityAt(0.0);
        if (!ymax) {
            return {0.0, atZero, false, BestResponseMethod::ConvexDichotomy};
        }
        const Utility atMax = slice.utilityAt(*ymax);
        if (atMax.isFinite() && atMax.value() >= atZero.value() - opts.tieSlack) {
            return {*ymax, atMax, true, BestResponseMethod::ConvexDichotomy};
        }
        return {0.0, atZero, true, BestResponseMethod::ConvexDichotomy};
    }
    return numericScan(slice, opts);
}

} // namespace

std::optional<double> maxFeasibleKeep(const Game& game, const StrategyProfile& y, std::size_t i,
                                      const BestResponseOptions& opts) {
    return maxFeasibleKeep(detail::AgentSlice(game, y, i), opts);
}

BestResponseResult bestResponse(const Game& game, const StrategyProfile& y, std::size_t i,
                                const BestResponseOptions& opts) {
    return bestResponse(detail::AgentSlice(game, y, i), opts);
}

SimplifiedQuantities simplifiedQuantities(const Game& game, const StrategyProfile& y, std::size_t i) {
    SimplifiedQuantities q;
    const auto row = game.holdingsRow(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
        if (row[j] > 0.0) {
            q.holdingsValue += row[j] * price(game, y, j);
        }
    }
    if (q.holdingsValue > 0.0) {
        const double lambda = game.lambda();
        q.target = lambda - (lambda * game.liabilities(i) - (lambda - 1.0) * game.illiquidAssets(i)) /
                                q.holdingsValue;
    }
    return q;
}

namespace {

void requirePostSaleLinear(const Game& game) {
    if (!game.isPostSaleLinear()) {
        throw UnsupportedRegime("simplified best response requires alpha = 1 and linear impact");
    }
}

double simplifiedFrom(double illiquid, double liabilities, double lambda, double holdingsValue) {
    const double eq = illiquid - liabilities + holdingsValue;
    if (eq <= 0.0) {
        return 0.0;
    }
    if (holdingsValue <= 0.0) {
        return illiquid <= lambda * (illiquid - liabilities) ? 1.0 : 0.0;
    }
    const double g = lambda - (lambda * liabilities - (lambda - 1.0) * illiquid) / holdingsValue;
    return std::clamp(g, 0.0, 1.0);
}

} // namespace

double simplifiedBestResponse(const Game& game, const StrategyProfile& y, std::size_t i) {
    requirePostSaleLinear(game);
    const auto q = simplifiedQuantities(game, y, i);
    return simplifiedFrom(game.illiquidAssets(i), game.liabilities(i), game.lambda(), q.holdingsValue);
}

StrategyProfile bestResponseProfile(const Game& game, const StrategyProfile& y, ResponseKind kind,
                                    const BestResponseOptions& opts) {
    const std::size_t n = game.numAgents();
    const std::size_t m = game.numAssets();
    std::vector<double> next(n, 0.0);

    if (kind == ResponseKind::Simplified) {
        requirePostSaleLinear(game);
    }
    if (game.isPostSaleLinear()) {
        // O(n m) fast path: total kept amounts once, then per-agent closed forms.
        std::vector<double> total(m, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = game.holdingsRow(i);
            for (std::size_t j = 0; j < m; ++j) {
                total[j] += y[i] * row[j];
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = game.holdingsRow(i);
            double cross = 0.0;
            double quad = 0.0;
            double value = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                const double x = row[j];
                if (x == 0.0) {
                    continue;
                }
                const double p0 = game.initialPrice(j);
                cross += x * p0 * (total[j] - y[i] * x);
                quad += x * x * p0;
                value += x * p0 * total[j];
            }
            if (kind == ResponseKind::Simplified) {
                next[i] = simplifiedFrom(game.illiquidAssets(i), game.liabilities(i), game.lambda(), value);
            } else {
                next[i] = detail::postSaleLinearMaxKeep(game.illiquidAssets(i), game.liabilities(i),
                                                        game.lambda(), quad, cross)
                              .value_or(0.0);
            }
        }
        return StrategyProfile(std::move(next));
    }
    for (std::size_t i = 0; i < n; ++i) {
        next[i] = bestResponse(game, y, i, opts).keep;
    }
    return StrategyProfile(std::move(next));
}

AgentStatus liquidityStatus(const Game& game, const StrategyProfile& y, std::size_t i,
                            const BestResponseOptions& opts) {
    const detail::AgentSlice slice(game, y, i);
    if (maxFeasibleKeep(slice, opts)) {
        return AgentStatus::Liquid;
    }
    return solventSomewhere(slice, opts) ? AgentStatus::Illiquid : AgentStatus::Insolvent;
}

} // namespace firesale
