#include "firesale/analysis.hpp"

#include "firesale/errors.hpp"
#include "firesale/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace firesale {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

nlohmann::json numberJson(double v) {
    if (std::isfinite(v)) {
        return v;
    }
    return v > 0 ? "inf" : "-inf";
}

} // namespace

EquilibriumReport verifyEquilibrium(const Game& game, const StrategyProfile& y, double tol,
                                    const BestResponseOptions& opts) {
    EquilibriumReport r;
    r.profile = y;
    for (std::size_t i = 0; i < game.numAgents(); ++i) {
        const double br = bestResponse(game, y, i, opts).keep;
        r.bestResponses.push_back(br);
        r.maxDeviation = std::max(r.maxDeviation, std::abs(br - y[i]));
        r.utilities.push_back(utility(game, y, i));
    }
    r.isExact = r.maxDeviation <= tol;
    r.welfare = socialWelfare(game, y);
    return r;
}

EquilibriumReport maximalEquilibrium(const Game& game, const BestResponseOptions& opts) {
    if (!game.hasLatticeStructure()) {
        throw UnsupportedRegime("maximal equilibrium needs alpha = 1 or convex price impact");
    }
    DynamicsConfig cfg;
    cfg.kind = DynamicsKind::SynchronousExact;
    cfg.delta = 1e-10;
    cfg.maxSteps = 1000000;
    cfg.responseOptions = opts;
    const auto trace = runDynamics(game, cfg);
    EquilibriumReport r = verifyEquilibrium(game, trace.finalProfile(), kEquilibriumTol, opts);
    r.maximal = trace.verdict == Verdict::Converged;
    r.steps = trace.steps();
    return r;
}

LatticeDiagnostics latticeCheck(const Game& game, const LatticeOptions& opts) {
    const std::size_t n = game.numAgents();
    LatticeDiagnostics d;
    for (std::size_t s = 0; s < opts.samples; ++s) {
        auto rng = SplitMix64::stream(opts.seed, s);
        std::vector<double> start(n);
        for (auto& v : start) {
            v = rng.uniform();
        }
        DynamicsConfig cfg;
        cfg.kind = DynamicsKind::SequentialExact;
        cfg.start = StrategyProfile(start);
        cfg.delta = opts.delta;
        cfg.maxSteps = opts.maxPasses;
        cfg.responseOptions = opts.responseOptions;
        const auto trace = runDynamics(game, cfg);
        ++d.runs;
        if (trace.verdict != Verdict::Converged) {
            ++d.unconverged;
            continue;
        }
        const auto& eq = trace.finalProfile();
        const bool known = std::any_of(d.equilibria.begin(), d.equilibria.end(), [&](const auto& e) {
            return e.maxDistance(eq) <= opts.distinctTol;
        });
        if (!known) {
            d.equilibria.push_back(eq);
        }
    }
    for (std::size_t a = 0; a < d.equilibria.size(); ++a) {
        for (std::size_t b = a + 1; b < d.equilibria.size(); ++b) {
            ++d.pairsChecked;
            std::vector<double> hi(n);
            std::vector<double> lo(n);
            for (std::size_t i = 0; i < n; ++i) {
                hi[i] = std::max(d.equilibria[a][i], d.equilibria[b][i]);
                lo[i] = std::min(d.equilibria[a][i], d.equilibria[b][i]);
            }
            for (const bool join : {true, false}) {
                StrategyProfile z(join ? hi : lo);
                const auto rep = verifyEquilibrium(game, z, opts.verifyTol, opts.responseOptions);
                if (!rep.isExact) {
                    d.violations.push_back({a, b, join, z, rep.maxDeviation});
                }
            }
        }
    }
    return d;
}

namespace {

struct Scorer {
    const Game& game;
    const StrategyProfile& base;
    std::vector<Utility> baseUtility;

    // Per-member gains and their minimum for a candidate profile.
    double score(const StrategyProfile& z, const std::vector<std::size_t>& members,
                 std::vector<double>& gains) const {
        gains.assign(members.size(), 0.0);
        double minGain = kInf;
        for (std::size_t k = 0; k < members.size(); ++k) {
            const std::size_t i = members[k];
            const Utility u = utility(game, z, i);
            const Utility& u0 = baseUtility[i];
            double g;
            if (u.isNegInf()) {
                g = u0.isNegInf() ? 0.0 : -kInf;
            } else if (u0.isNegInf()) {
                g = kInf;
            } else {
                g = u.value() - u0.value();
            }
            gains[k] = g;
            minGain = std::min(minGain, g);
        }
        return minGain;
    }
};

// Calls f(values) for every point of the product of per-member value lists.
template <typename F>
void forEachPoint(const std::vector<std::vector<double>>& axes, F&& f) {
    std::vector<std::size_t> idx(axes.size(), 0);
    std::vector<double> point(axes.size());
    while (true) {
        for (std::size_t k = 0; k < axes.size(); ++k) {
            point[k] = axes[k][idx[k]];
        }
        f(point);
        std::size_t k = 0;
        while (k < axes.size() && ++idx[k] == axes[k].size()) {
            idx[k] = 0;
            ++k;
        }
        if (k == axes.size()) {
            return;
        }
    }
}

} // namespace

CoalitionScanResult coalitionScan(const Game& game, const StrategyProfile& y, const CoalitionScanOptions& opts) {
    const std::size_t n = game.numAgents();
    if (n > 4) {
        throw std::invalid_argument("coalition scan supports at most 4 agents");
    }
    if (opts.gridPoints < 2) {
        throw std::invalid_argument("coalition grid needs at least 2 points");
    }
    Scorer scorer{game, y, {}};
    for (std::size_t i = 0; i < n; ++i) {
        scorer.baseUtility.push_back(utility(game, y, i));
    }
    const double h = 1.0 / static_cast<double>(opts.gridPoints - 1);

    CoalitionScanResult result;
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask & (1u << i)) {
                members.push_back(i);
            }
        }
        CoalitionDeviation best;
        best.mask = mask;
        best.members = members;
        best.minGain = -kInf;
        best.deviation = y;
        std::vector<double> gains;
        std::vector<double> values(n);
        auto consider = [&](const std::vector<double>& point) {
            values = y.values();
            for (std::size_t k = 0; k < members.size(); ++k) {
                values[members[k]] = point[k];
            }
            StrategyProfile z(values);
            const double s = scorer.score(z, members, gains);
            if (s > best.minGain) {
                best.minGain = s;
                best.gains = gains;
                best.deviation = std::move(z);
            }
        };

        std::vector<double> axis(opts.gridPoints);
        for (std::size_t g = 0; g < opts.gridPoints; ++g) {
            axis[g] = static_cast<double>(g) * h;
        }
        forEachPoint(std::vector<std::vector<double>>(members.size(), axis), consider);
        for (const auto& extra : opts.extraCandidates) {
            if (extra.size() != n) {
                continue;
            }
            std::vector<double> point;
            for (std::size_t i : members) {
                point.push_back(extra[i]);
            }
            consider(point);
        }
        if (opts.refine && std::isfinite(best.minGain)) {
            std::vector<std::vector<double>> local;
            for (std::size_t i : members) {
                std::vector<double> ax;
                for (int s = -10; s <= 10; ++s) {
                    ax.push_back(std::clamp(best.deviation[i] + s * h / 10.0, 0.0, 1.0));
                }
                local.push_back(std::move(ax));
            }
            forEachPoint(local, consider);
        }
        if (best.gains.empty()) {
            best.gains.assign(members.size(), best.minGain);
        }
        if (best.minGain > opts.gainTol && (!result.best || best.minGain > result.best->minGain)) {
            result.best = best;
        }
        result.perCoalition.push_back(std::move(best));
    }
    return result;
}

void writeCoalitionCsv(std::ostream& out, const Game& game, const CoalitionScanResult& result, double gainTol) {
    const std::size_t n = game.numAgents();
    out << "coalition_mask,members";
    for (std::size_t i = 0; i < n; ++i) {
        out << ",y_" << (i + 1);
    }
    for (std::size_t i = 0; i < n; ++i) {
        out << ",gain_" << (i + 1);
    }
    out << ",min_gain,improving\n";
    const auto oldPrecision = out.precision(17);
    for (const auto& c : result.perCoalition) {
        out << c.mask << ',';
        for (std::size_t k = 0; k < c.members.size(); ++k) {
            out << (k ? " " : "") << (c.members[k] + 1);
        }
        for (std::size_t i = 0; i < n; ++i) {
            out << ',' << c.deviation[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            out << ',';
            const auto it = std::find(c.members.begin(), c.members.end(), i);
            if (it != c.members.end()) {
                out << c.gains[static_cast<std::size_t>(it - c.members.begin())];
            }
        }
        out << ',' << c.minGain << ',' << (c.minGain > gainTol ? "true" : "false") << '\n';
    }
    out.precision(oldPrecision);
}

WelfareOptimum socialOptimumScan(const Game& game, std::size_t gridPoints) {
    const std::size_t n = game.numAgents();
    if (n > 3) {
        throw std::invalid_argument("welfare grid search supports at most 3 agents");
    }
    if (gridPoints < 2) {
        throw std::invalid_argument("welfare grid needs at least 2 points");
    }
    const double h = 1.0 / static_cast<double>(gridPoints - 1);
    std::vector<double> axis(gridPoints);
    for (std::size_t g = 0; g < gridPoints; ++g) {
        axis[g] = static_cast<double>(g) * h;
    }
    WelfareOptimum best{StrategyProfile::zeros(n), socialWelfare(game, StrategyProfile::zeros(n))};
    forEachPoint(std::vector<std::vector<double>>(n, axis), [&](const std::vector<double>& p) {
        StrategyProfile z(p);
        const Utility w = socialWelfare(game, z);
        if (w > best.welfare) {
            best = {std::move(z), w};
        }
    });
    // Pattern search around the best grid point.
    for (double step = h; step > 1e-10; step *= 0.5) {
        bool moved = true;
        while (moved) {
            moved = false;
            std::vector<std::vector<double>> local;
            for (std::size_t i = 0; i < n; ++i) {
                local.push_back({std::max(0.0, best.profile[i] - step), best.profile[i],
                                 std::min(1.0, best.profile[i] + step)});
            }
            WelfareOptimum next = best;
            forEachPoint(local, [&](const std::vector<double>& p) {
                StrategyProfile z(p);
                const Utility w = socialWelfare(game, z);
                if (w.isFinite() && next.welfare.isFinite() && w.value() > next.welfare.value() + 1e-15) {
                    next = {std::move(z), w};
                }
            });
            if (next.profile.maxDistance(best.profile) > 0.0) {
                best = std::move(next);
                moved = true;
            }
        }
    }
    return best;
}

Game transferHoldings(const Game& game, std::size_t donor, std::size_t recipient, std::size_t asset,
                      double share) {
    if (donor >= game.numAgents() || recipient >= game.numAgents() || asset >= game.numAssets()) {
        throw std::invalid_argument("transfer refers to an unknown agent or asset");
    }
    if (donor == recipient) {
        throw std::invalid_argument("donor and recipient must differ");
    }
    if (!(share >= 0.0) || share > game.holding(donor, asset) + 1e-12) {
        throw std::invalid_argument("donor holds less than the transferred share");
    }
    auto agents = game.agentSpecs();
    agents[donor].holdings[asset] = std::max(0.0, agents[donor].holdings[asset] - share);
    agents[recipient].holdings[asset] += share;
    return Game(std::move(agents), game.assetSpecs(), game.alpha(), game.lambda());
}

BailoutReport bailoutWhatIf(const Game& game, std::size_t donor, std::size_t recipient, std::size_t asset,
                            double share, const BestResponseOptions& opts) {
    const Game after = transferHoldings(game, donor, recipient, asset, share);
    BailoutReport r;
    r.before = maximalEquilibrium(game, opts);
    r.after = maximalEquilibrium(after, opts);
    for (std::size_t i = 0; i < game.numAgents(); ++i) {
        r.equityBefore.push_back(equity(game, r.before.profile, i));
        r.equityAfter.push_back(equity(after, r.after.profile, i));
    }
    return r;
}

GridScanResult equilibriumGridScan(const Game& game, double step, double tol, const BestResponseOptions& opts) {
    const std::size_t n = game.numAgents();
    if (n > 3) {
        throw std::invalid_argument("grid scan supports at most 3 agents");
    }
    if (!(step > 0.0 && step <= 1.0)) {
        throw std::invalid_argument("grid step must lie in (0, 1]");
    }
    const std::size_t points = static_cast<std::size_t>(std::llround(1.0 / step)) + 1;
    auto coord = [&](std::size_t k) { return std::min(1.0, static_cast<double>(k) * step); };

    // Best response of agent i depends only on the others' grid indices.
    std::vector<std::map<std::vector<std::size_t>, double>> cache(n);
    auto responseOf = [&](std::size_t i, const std::vector<std::size_t>& idx) {
        std::vector<std::size_t> key;
        std::vector<double> y(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            if (k != i) {
                key.push_back(idx[k]);
                y[k] = coord(idx[k]);
            }
        }
        auto [it, inserted] = cache[i].try_emplace(key, 0.0);
        if (inserted) {
            it->second = bestResponse(game, StrategyProfile(y), i, opts).keep;
        }
        return it->second;
    };

    GridScanResult result;
    std::vector<std::size_t> idx(n, 0);
    while (true) {
        ++result.points;
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            ok = std::abs(responseOf(i, idx) - coord(idx[i])) <= tol;
        }
        if (ok) {
            std::vector<double> y(n);
            for (std::size_t k = 0; k < n; ++k) {
                y[k] = coord(idx[k]);
            }
            result.equilibria.emplace_back(y);
        }
        std::size_t k = 0;
        while (k < n && ++idx[k] == points) {
            idx[k] = 0;
            ++k;
        }
        if (k == n) {
            break;
        }
    }
    return result;
}

nlohmann::json toJson(const Utility& u) {
    return u.isFinite() ? nlohmann::json(u.value()) : nlohmann::json("-inf");
}

nlohmann::json toJson(const EquilibriumReport& r) {
    nlohmann::json j;
    j["profile"] = r.profile.values();
    j["is_exact"] = r.isExact;
    j["max_deviation"] = r.maxDeviation;
    j["best_responses"] = r.bestResponses;
    j["utilities"] = nlohmann::json::array();
    for (const auto& u : r.utilities) {
        j["utilities"].push_back(toJson(u));
    }
    j["welfare"] = toJson(r.welfare);
    j["maximal"] = r.maximal;
    j["steps"] = r.steps;
    return j;
}

nlohmann::json toJson(const BailoutReport& r) {
    return {{"before", toJson(r.before)},
            {"after", toJson(r.after)},
            {"equity_before", r.equityBefore},
            {"equity_after", r.equityAfter}};
}

nlohmann::json toJson(const CoalitionScanResult& result) {
    nlohmann::json j;
    auto dev = [](const CoalitionDeviation& c) {
        nlohmann::json d;
        d["mask"] = c.mask;
        std::vector<std::size_t> members;
        for (auto i : c.members) {
            members.push_back(i + 1);
        }
        d["members"] = members;
        d["deviation"] = c.deviation.values();
        d["gains"] = nlohmann::json::array();
        for (double g : c.gains) {
            d["gains"].push_back(numberJson(g));
        }
        d["min_gain"] = numberJson(c.minGain);
        return d;
    };
    j["improving"] = result.best ? dev(*result.best) : nlohmann::json(nullptr);
    j["coalitions"] = nlohmann::json::array();
    for (const auto& c : result.perCoalition) {
        j["coalitions"].push_back(dev(c));
    }
    return j;
}

nlohmann::json toJson(const LatticeDiagnostics& d) {
    nlohmann::json j;
    j["runs"] = d.runs;
    j["unconverged"] = d.unconverged;
    j["pairs_checked"] = d.pairsChecked;
    j["equilibria"] = nlohmann::json::array();
    for (const auto& e : d.equilibria) {
        j["equilibria"].push_back(e.values());
    }
    j["violations"] = nlohmann::json::array();
    for (const auto& v : d.violations) {
        j["violations"].push_back({{"first", v.first},
                                   {"second", v.second},
                                   {"kind", v.join ? "max" : "min"},
                                   {"profile", v.profile.values()},
                                   {"deviation", v.deviation}});
    }
    return j;
}

} // namespace firesale
