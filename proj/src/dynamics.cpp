#include "firesale/dynamics.hpp"

#include "firesale/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace firesale {

std::string toString(DynamicsKind kind) {
    switch (kind) {
    case DynamicsKind::SynchronousExact:
        return "synchronous";
    case DynamicsKind::SequentialExact:
        return "sequential";
    case DynamicsKind::SynchronousSimplified:
        return "simplified";
    }
    return "unknown";
}

DynamicsKind dynamicsKindFromString(const std::string& name) {
    if (name == "synchronous") {
        return DynamicsKind::SynchronousExact;
    }
    if (name == "sequential") {
        return DynamicsKind::SequentialExact;
    }
    if (name == "simplified") {
        return DynamicsKind::SynchronousSimplified;
    }
    throw std::invalid_argument("unknown dynamics kind '" + name + "'");
}

std::string toString(Verdict verdict) {
    switch (verdict) {
    case Verdict::Converged:
        return "converged";
    case Verdict::CycleDetected:
        return "cycle";
    case Verdict::BudgetExhausted:
        return "budget_exhausted";
    }
    return "unknown";
}

void DynamicsConfig::validate(std::size_t numAgents) const {
    if (!(delta > 0.0)) {
        throw std::invalid_argument("delta must be > 0");
    }
    if (maxSteps < 1) {
        throw std::invalid_argument("max steps must be >= 1");
    }
    if (start && start->size() != numAgents) {
        throw std::invalid_argument("start profile has wrong length");
    }
    for (std::size_t i : order) {
        if (i >= numAgents) {
            throw std::invalid_argument("agent order refers to unknown agent " + std::to_string(i));
        }
    }
}

namespace {

double cycleTolerance(const DynamicsConfig& cfg) {
    return std::min(cfg.cycleTol, 0.5 * cfg.delta);
}

constexpr double kMoveTol = kConstraintTol;

class TraceRecorder {
public:
    TraceRecorder(const Game& game, const DynamicsConfig& cfg, DynamicsTrace& trace)
        : game_(game), cfg_(cfg), trace_(trace) {}

    void push(StrategyProfile next, std::optional<std::size_t> mover) {
        if (!trace_.profiles.empty()) {
            const auto& prev = trace_.profiles.back();
            double mx = 0.0;
            double sum = 0.0;
            for (std::size_t i = 0; i < next.size(); ++i) {
                const double d = std::abs(next[i] - prev[i]);
                mx = std::max(mx, d);
                sum += d;
            }
            trace_.stepMax.push_back(mx);
            trace_.stepMean.push_back(sum / static_cast<double>(next.size()));
            trace_.movers.push_back(mover);
            if (!next.pointwiseLessEqual(prev, kMoveTol)) {
                trace_.monotone = false;
            }
        }
        if (cfg_.recordValuations) {
            std::vector<AgentValuation> vals;
            vals.reserve(next.size());
            for (std::size_t i = 0; i < next.size(); ++i) {
                vals.push_back(valuation(game_, next, i));
            }
            trace_.valuations.push_back(std::move(vals));
        }
        trace_.profiles.push_back(std::move(next));
    }

private:
    const Game& game_;
    const DynamicsConfig& cfg_;
    DynamicsTrace& trace_;
};

void runSynchronous(const Game& game, const DynamicsConfig& cfg, DynamicsTrace& trace) {
    TraceRecorder rec(game, cfg, trace);
    const auto kind =
        cfg.kind == DynamicsKind::SynchronousSimplified ? ResponseKind::Simplified : ResponseKind::Exact;
    rec.push(cfg.start.value_or(StrategyProfile::ones(game.numAgents())), std::nullopt);
    for (std::size_t t = 0; t < cfg.maxSteps; ++t) {
        StrategyProfile next = bestResponseProfile(game, trace.profiles.back(), kind, cfg.responseOptions);
        rec.push(std::move(next), std::nullopt);
        ++trace.moves;
        if (trace.stepMax.back() <= cfg.delta) {
            trace.verdict = Verdict::Converged;
            return;
        }
        const auto& cur = trace.profiles.back();
        const std::size_t last = trace.profiles.size() - 1;
        const std::size_t window = std::min(cfg.cycleWindow, last);
        for (std::size_t k = 1; k <= window; ++k) {
            if (trace.profiles[last - k].maxDistance(cur) <= cycleTolerance(cfg)) {
                trace.verdict = Verdict::CycleDetected;
                trace.period = k;
                trace.cycleStates.assign(trace.profiles.begin() + static_cast<std::ptrdiff_t>(last - k),
                                         trace.profiles.begin() + static_cast<std::ptrdiff_t>(last));
                return;
            }
        }
    }
    trace.verdict = Verdict::BudgetExhausted;
}

void runSequential(const Game& game, const DynamicsConfig& cfg, DynamicsTrace& trace) {
    TraceRecorder rec(game, cfg, trace);
    const std::size_t n = game.numAgents();
    std::vector<std::size_t> order = cfg.order;
    if (order.empty()) {
        order.resize(n);
        std::iota(order.begin(), order.end(), 0);
    }
    const std::size_t len = order.size();

    StrategyProfile y = cfg.start.value_or(StrategyProfile::ones(n));
    rec.push(y, std::nullopt);

    // Recent (profile, next position) states, for cycle detection.
    struct State {
        std::size_t profileIndex;
        std::size_t pos;
    };
    std::vector<State> history;
    std::size_t quiet = 0; // consecutive turns with every change <= delta
    std::size_t pos = 0;
    const std::size_t budget = cfg.maxSteps > std::numeric_limits<std::size_t>::max() / len
                                   ? std::numeric_limits<std::size_t>::max()
                                   : cfg.maxSteps * len;

    for (std::size_t tick = 0; tick < budget; ++tick) {
        const std::size_t i = order[pos];
        pos = (pos + 1) % len;
        const double br = bestResponse(game, y, i, cfg.responseOptions).keep;
        const double change = std::abs(br - y[i]);
        quiet = change <= cfg.delta ? quiet + 1 : 0;
        if (change > kMoveTol) {
            y.set(i, br);
            rec.push(y, i);
            ++trace.moves;
        }
        if (quiet >= len) {
            trace.verdict = Verdict::Converged;
            if (trace.stepMax.empty() || trace.stepMax.back() > cfg.delta) {
                rec.push(y, std::nullopt);
            }
            return;
        }
        if (change <= kMoveTol) {
            continue;
        }
        const std::size_t cur = trace.profiles.size() - 1;
        for (std::size_t k = history.size(); k-- > 0 && history.size() - k <= cfg.cycleWindow;) {
            const auto& h = history[k];
            if (h.pos == pos && trace.profiles[h.profileIndex].maxDistance(y) <= cycleTolerance(cfg)) {
                trace.verdict = Verdict::CycleDetected;
                trace.period = cur - h.profileIndex;
                trace.cycleStates.assign(
                    trace.profiles.begin() + static_cast<std::ptrdiff_t>(h.profileIndex),
                    trace.profiles.begin() + static_cast<std::ptrdiff_t>(cur));
                return;
            }
        }
        history.push_back({cur, pos});
    }
    trace.verdict = Verdict::BudgetExhausted;
}

} // namespace

DynamicsTrace runDynamics(const Game& game, const DynamicsConfig& cfg) {
    cfg.validate(game.numAgents());
    if (cfg.kind == DynamicsKind::SynchronousSimplified && !game.isPostSaleLinear()) {
        throw UnsupportedRegime("simplified dynamics require alpha = 1 and linear impact");
    }
    DynamicsTrace trace;
    trace.kind = cfg.kind;
    if (cfg.kind == DynamicsKind::SequentialExact) {
        runSequential(game, cfg, trace);
    } else {
        runSynchronous(game, cfg, trace);
    }
    return trace;
}

ApproxEquilibriumVerdict checkApproxEquilibrium(const Game& game, const StrategyProfile& y, double epsilon,
                                                const BestResponseOptions& opts) {
    if (!(epsilon > 0.0)) {
        throw std::invalid_argument("epsilon must be > 0");
    }
    ApproxEquilibriumVerdict v;
    v.epsilon = epsilon;
    auto note = [](ClauseViolation& c, double amount, std::size_t i) {
        if (amount > c.amount) {
            c.amount = amount;
            c.agent = i;
        }
    };
    for (std::size_t i = 0; i < game.numAgents(); ++i) {
        const AgentValuation val = valuation(game, y, i);
        ApproxAgentDiagnostic d;
        d.status = val.status;
        d.keep = y[i];
        d.leverage = val.leverage;
        if (val.status == AgentStatus::Liquid) {
            // Gains are measured in equity, so a small leverage excess is
            // left to clause (2) rather than counting as an infinite loss.
            const auto br = bestResponse(game, y, i, opts);
            if (br.utility.isFinite()) {
                d.gain = std::max(0.0, br.utility.value() - val.equity);
            }
            note(v.gain, d.gain - epsilon, i);
            if (y[i] > 0.0) {
                const double excess = val.leverage ? *val.leverage - (game.lambda() + epsilon)
                                                   : std::numeric_limits<double>::infinity();
                note(v.leverage, excess, i);
            }
        } else {
            note(v.forced, y[i] - epsilon, i);
        }
        v.agents.push_back(d);
    }
    v.pass = !v.gain.agent && !v.leverage.agent && !v.forced.agent;
    return v;
}

std::vector<StepSize> stepSizeSeries(const DynamicsTrace& trace) {
    std::vector<StepSize> out;
    out.reserve(trace.stepMax.size());
    for (std::size_t t = 0; t < trace.stepMax.size(); ++t) {
        out.push_back({t + 1, trace.stepMax[t], trace.stepMean[t]});
    }
    return out;
}

void writeTraceCsv(std::ostream& out, const DynamicsTrace& trace) {
    const std::size_t n = trace.profiles.empty() ? 0 : trace.profiles.front().size();
    out << "step,agent";
    for (std::size_t i = 0; i < n; ++i) {
        out << ",y_" << (i + 1);
    }
    out << ",stepsize_max,stepsize_mean\n";
    const auto oldPrecision = out.precision(17);
    for (std::size_t t = 0; t < trace.profiles.size(); ++t) {
        out << t << ',';
        if (t > 0) {
            const auto& mover = trace.movers[t - 1];
            if (mover) {
                out << (*mover + 1);
            } else if (trace.kind != DynamicsKind::SequentialExact) {
                out << '*';
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            out << ',' << trace.profiles[t][i];
        }
        if (t > 0) {
            out << ',' << trace.stepMax[t - 1] << ',' << trace.stepMean[t - 1];
        } else {
            out << ",,";
        }
        out << '\n';
    }
    out.precision(oldPrecision);
}

nlohmann::json verdictJson(const DynamicsTrace& trace) {
    nlohmann::json j;
    j["dynamics"] = toString(trace.kind);
    j["verdict"] = toString(trace.verdict);
    j["steps"] = trace.steps();
    j["moves"] = trace.moves;
    j["monotone"] = trace.monotone;
    j["final_profile"] = trace.finalProfile().values();
    if (trace.verdict == Verdict::CycleDetected) {
        j["period"] = trace.period;
        auto states = nlohmann::json::array();
        for (const auto& s : trace.cycleStates) {
            states.push_back(s.values());
        }
        j["cycle_states"] = states;
    }
    if (!trace.stepMax.empty()) {
        j["last_stepsize_max"] = trace.stepMax.back();
    }
    return j;
}

} // namespace firesale
