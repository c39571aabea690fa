#include "firesale/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <thread>

namespace firesale {

namespace {

constexpr std::size_t kChunk = 256;
constexpr std::uint64_t kBootstrapStream = 0xB0075EEDULL;

} // namespace

std::string toString(ParameterSet set) {
    switch (set) {
    case ParameterSet::Fig2_3Left:
        return "Fig2_3Left";
    case ParameterSet::Fig3Right:
        return "Fig3Right";
    }
    return "unknown";
}

ParameterSet parameterSetFromString(const std::string& name) {
    if (name == "Fig2_3Left") {
        return ParameterSet::Fig2_3Left;
    }
    if (name == "Fig3Right") {
        return ParameterSet::Fig3Right;
    }
    throw std::invalid_argument("unknown parameter set '" + name + "' (Fig2_3Left, Fig3Right)");
}

void ExperimentConfig::validate() const {
    if (n < 1) {
        throw std::invalid_argument("n must be >= 1");
    }
    if (taus.empty()) {
        throw std::invalid_argument("tau grid is empty");
    }
    for (double t : taus) {
        if (!(t >= 0.0 && t <= 1.0)) {
            throw std::invalid_argument("tau must lie in [0, 1]");
        }
    }
    if (runs < 1) {
        throw std::invalid_argument("runs must be >= 1");
    }
    if (!(delta > 0.0)) {
        throw std::invalid_argument("delta must be > 0");
    }
    if (maxSteps < 1 || maxAttempts < 1) {
        throw std::invalid_argument("step and attempt budgets must be >= 1");
    }
}

std::vector<std::vector<double>> diversifiedHoldings(std::size_t n, double tau) {
    std::vector<std::vector<double>> x(n, std::vector<double>(n, tau / static_cast<double>(n)));
    for (std::size_t i = 0; i < n; ++i) {
        x[i][i] += 1.0 - tau;
    }
    return x;
}

std::optional<double> allOnesLeverage(const Game& game) {
    const auto ones = StrategyProfile::ones(game.numAgents());
    double worst = 0.0;
    for (std::size_t i = 0; i < game.numAgents(); ++i) {
        const detail::AgentSlice slice(game, ones, i);
        const auto pt = slice.evaluate(1.0);
        if (!(pt.equity > 0.0)) {
            return std::nullopt;
        }
        worst = std::max(worst, pt.assets / pt.equity);
    }
    return worst;
}

std::optional<Game> sampleGame(const ExperimentConfig& cfg, double tau, SplitMix64& rng) {
    const std::size_t n = cfg.n;
    const auto x = diversifiedHoldings(n, tau);
    const bool left = cfg.parameters == ParameterSet::Fig2_3Left;
    std::vector<AgentSpec> agents(n);
    for (std::size_t i = 0; i < n; ++i) {
        agents[i].illiquidAssets = left ? rng.uniform(80.0, 120.0) : 100.0 - rng.uniform(0.0, 100.0);
        agents[i].liabilities = left ? rng.uniform(40.0, 60.0) : rng.uniform(40.0, 100.0);
        agents[i].holdings = x[i];
    }
    std::vector<AssetSpec> assets(n);
    for (auto& a : assets) {
        a.impact = PriceImpact::linear(left ? 100.0 : rng.uniform(50.0, 150.0));
    }
    const double lo = left ? 0.6 : 0.9;
    const double u = rng.uniform(lo, 0.99);
    // The cap is set after lambda^1 is known; build with a placeholder first.
    const Game probe(agents, assets, 1.0, 2.0);
    const auto lambda1 = allOnesLeverage(probe);
    if (!lambda1) {
        return std::nullopt;
    }
    const double lambda = u * *lambda1;
    if (!(lambda > 1.0)) {
        return std::nullopt;
    }
    return Game(std::move(agents), std::move(assets), 1.0, lambda);
}

const ExperimentPoint& ExperimentResult::at(std::size_t tauIndex, DynamicsKind kind) const {
    return points.at(2 * tauIndex + (kind == DynamicsKind::SynchronousExact ? 0 : 1));
}

namespace {

struct KindTally {
    std::vector<double> steps; // per run, in run order
    std::vector<double> decaySum;
    std::vector<std::size_t> active;
    std::size_t unconverged = 0;
    std::size_t approxFailures = 0;
    double maxViolation = 0.0;
};

struct ChunkResult {
    KindTally kinds[2];
    std::size_t rejected = 0;
};

constexpr DynamicsKind kKinds[2] = {DynamicsKind::SynchronousExact, DynamicsKind::SynchronousSimplified};

ChunkResult runChunk(const ExperimentConfig& cfg, std::size_t tauIndex, std::size_t first, std::size_t last,
                     bool checkEndpoints) {
    ChunkResult out;
    const double tau = cfg.taus[tauIndex];
    for (std::size_t r = first; r < last; ++r) {
        auto rng = SplitMix64::stream(cfg.seed, tauIndex, r);
        std::optional<Game> game;
        for (std::size_t attempt = 0; attempt < cfg.maxAttempts && !game; ++attempt) {
            game = sampleGame(cfg, tau, rng);
            if (!game) {
                ++out.rejected;
            }
        }
        if (!game) {
            throw std::runtime_error("no acceptable game after " + std::to_string(cfg.maxAttempts) + " draws");
        }
        for (int k = 0; k < 2; ++k) {
            DynamicsConfig dc;
            dc.kind = kKinds[k];
            dc.delta = cfg.delta;
            dc.maxSteps = cfg.maxSteps;
            const auto trace = runDynamics(*game, dc);
            auto& tally = out.kinds[k];
            tally.steps.push_back(static_cast<double>(trace.steps()));
            if (trace.verdict != Verdict::Converged) {
                ++tally.unconverged;
            } else if (checkEndpoints) {
                const auto v = checkApproxEquilibrium(*game, trace.finalProfile(), 1e-3);
                if (!v.pass) {
                    ++tally.approxFailures;
                    tally.maxViolation =
                        std::max({tally.maxViolation, v.gain.amount, v.leverage.amount, v.forced.amount});
                }
            }
            if (tally.decaySum.size() < trace.steps()) {
                tally.decaySum.resize(trace.steps(), 0.0);
                tally.active.resize(trace.steps(), 0);
            }
            for (std::size_t t = 0; t < trace.steps(); ++t) {
                tally.decaySum[t] += trace.stepMean[t];
                ++tally.active[t];
            }
        }
    }
    return out;
}

void bootstrap(ExperimentPoint& p, const std::vector<double>& steps, const ExperimentConfig& cfg,
               std::size_t tauIndex, int kind) {
    const std::size_t m = steps.size();
    if (cfg.bootstrapSamples == 0 || m == 0) {
        p.ciLow = p.ciHigh = p.meanSteps;
        return;
    }
    auto rng = SplitMix64::stream(cfg.seed ^ kBootstrapStream, tauIndex, static_cast<std::uint64_t>(kind));
    std::vector<double> means(cfg.bootstrapSamples);
    for (auto& mean : means) {
        double sum = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            sum += steps[static_cast<std::size_t>(rng() % m)];
        }
        mean = sum / static_cast<double>(m);
    }
    std::sort(means.begin(), means.end());
    const std::size_t b = means.size();
    p.ciLow = means[static_cast<std::size_t>(std::floor(0.025 * static_cast<double>(b)))];
    p.ciHigh = means[std::min(b - 1, static_cast<std::size_t>(std::ceil(0.975 * static_cast<double>(b))) - 1)];
}

} // namespace

ExperimentResult runExperiment(const ExperimentConfig& cfg, bool checkEndpoints) {
    cfg.validate();
    ExperimentResult result;
    result.config = cfg;
    const std::size_t chunks = (cfg.runs + kChunk - 1) / kChunk;
    const std::size_t workers = std::max<std::size_t>(1, cfg.workers);

    for (std::size_t ti = 0; ti < cfg.taus.size(); ++ti) {
        std::vector<ChunkResult> parts(chunks);
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::atomic<bool> failed{false};
        auto work = [&] {
            for (std::size_t c = next++; c < chunks && !failed; c = next++) {
                try {
                    parts[c] = runChunk(cfg, ti, c * kChunk, std::min(cfg.runs, (c + 1) * kChunk), checkEndpoints);
                } catch (...) {
                    if (!failed.exchange(true)) {
                        failure = std::current_exception();
                    }
                }
            }
        };
        if (workers == 1) {
            work();
        } else {
            std::vector<std::thread> pool;
            for (std::size_t w = 0; w < std::min(workers, chunks); ++w) {
                pool.emplace_back(work);
            }
            for (auto& t : pool) {
                t.join();
            }
        }
        if (failure) {
            std::rethrow_exception(failure);
        }
        // Ordered reduction keeps the floating-point sums reproducible.
        std::size_t rejected = 0;
        for (const auto& part : parts) {
            rejected += part.rejected;
        }
        for (int k = 0; k < 2; ++k) {
            ExperimentPoint p;
            p.tau = cfg.taus[ti];
            p.dynamics = kKinds[k];
            p.rejected = rejected;
            std::vector<double> steps;
            std::vector<double> decaySum;
            for (const auto& part : parts) {
                const auto& tally = part.kinds[k];
                steps.insert(steps.end(), tally.steps.begin(), tally.steps.end());
                p.unconverged += tally.unconverged;
                p.approxFailures += tally.approxFailures;
                p.maxApproxViolation = std::max(p.maxApproxViolation, tally.maxViolation);
                if (decaySum.size() < tally.decaySum.size()) {
                    decaySum.resize(tally.decaySum.size(), 0.0);
                    p.active.resize(tally.active.size(), 0);
                }
                for (std::size_t t = 0; t < tally.decaySum.size(); ++t) {
                    decaySum[t] += tally.decaySum[t];
                    p.active[t] += tally.active[t];
                }
            }
            p.runs = steps.size();
            double sum = 0.0;
            for (double s : steps) {
                sum += s;
            }
            p.meanSteps = sum / static_cast<double>(p.runs);
            p.decay.resize(decaySum.size());
            for (std::size_t t = 0; t < decaySum.size(); ++t) {
                p.decay[t] = decaySum[t] / static_cast<double>(p.active[t]);
            }
            bootstrap(p, steps, cfg, ti, k);
            result.points.push_back(std::move(p));
        }
    }
    return result;
}

namespace {

std::string formatNumber(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string tauLabel(double tau) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", tau);
    return buf;
}

} // namespace

void writeSummaryCsv(std::ostream& out, const ExperimentResult& result) {
    out << "n,tau,dynamics,mean_steps,ci_low,ci_high\n";
    for (const auto& p : result.points) {
        out << result.config.n << ',' << formatNumber(p.tau) << ',' << toString(p.dynamics) << ','
            << formatNumber(p.meanSteps) << ',' << formatNumber(p.ciLow) << ',' << formatNumber(p.ciHigh) << '\n';
    }
}

void writeDecayCsv(std::ostream& out, const ExperimentResult& result, std::size_t tauIndex) {
    out << "step,dynamics,mean_stepsize,active_runs\n";
    for (const auto kind : kKinds) {
        const auto& p = result.at(tauIndex, kind);
        for (std::size_t t = 0; t < p.decay.size(); ++t) {
            out << (t + 1) << ',' << toString(kind) << ',' << formatNumber(p.decay[t]) << ',' << p.active[t] << '\n';
        }
    }
}

void writeExperimentOutputs(const ExperimentResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto open = [&](const std::string& name) {
        std::ofstream f(dir / name);
        if (!f) {
            throw std::runtime_error("cannot write " + (dir / name).string());
        }
        return f;
    };
    {
        auto f = open("summary.csv");
        writeSummaryCsv(f, result);
    }
    for (std::size_t ti = 0; ti < result.config.taus.size(); ++ti) {
        auto f = open("decay_tau_" + tauLabel(result.config.taus[ti]) + ".csv");
        writeDecayCsv(f, result, ti);
    }
    nlohmann::json meta;
    meta["config"] = toJson(result.config);
    meta["points"] = nlohmann::json::array();
    for (const auto& p : result.points) {
        meta["points"].push_back({{"tau", p.tau},
                                  {"dynamics", toString(p.dynamics)},
                                  {"runs", p.runs},
                                  {"rejected", p.rejected},
                                  {"unconverged", p.unconverged}});
    }
    auto f = open("meta.json");
    f << meta.dump(2) << '\n';
}

TailTest tailRatioTest(const ExperimentPoint& point, std::size_t minActive) {
    if (minActive == 0) {
        minActive = std::max<std::size_t>(10, point.runs / 100);
    }
    std::vector<double> ts;
    std::vector<double> logs;
    for (std::size_t t = 0; t < point.decay.size(); ++t) {
        if (point.active[t] < minActive) {
            break;
        }
        if (point.decay[t] > 0.0) {
            ts.push_back(static_cast<double>(t + 1));
            logs.push_back(std::log(point.decay[t]));
        }
    }
    TailTest r;
    r.points = ts.size();
    if (ts.size() < 6) {
        return r;
    }
    auto rate = [&](std::size_t from, std::size_t to) {
        const double cnt = static_cast<double>(to - from);
        double mt = 0.0;
        double ml = 0.0;
        for (std::size_t k = from; k < to; ++k) {
            mt += ts[k];
            ml += logs[k];
        }
        mt /= cnt;
        ml /= cnt;
        double sxy = 0.0;
        double sxx = 0.0;
        for (std::size_t k = from; k < to; ++k) {
            sxy += (ts[k] - mt) * (logs[k] - ml);
            sxx += (ts[k] - mt) * (ts[k] - mt);
        }
        return -sxy / sxx;
    };
    const std::size_t third = ts.size() / 3;
    r.headRate = rate(0, third);
    r.tailRate = rate(ts.size() - third, ts.size());
    r.rejectsExponential = r.tailRate < 0.5 * r.headRate;
    return r;
}

bool hasInteriorMaximum(const std::vector<double>& values) {
    if (values.size() < 3) {
        return false;
    }
    const auto it = std::max_element(values.begin(), values.end());
    const double peak = *it;
    return it != values.begin() && peak > values.front() && peak > values.back();
}

ExperimentConfig experimentConfigFromJson(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw std::invalid_argument("experiment config must be a JSON object");
    }
    static const std::vector<std::string> known = {"n",         "taus",  "parameters",   "runs",
                                                   "delta",     "seed",  "max_steps",    "max_attempts",
                                                   "bootstrap", "workers"};
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw std::invalid_argument("unknown experiment config field '" + key + "'");
        }
    }
    ExperimentConfig cfg;
    try {
        cfg.n = j.value("n", cfg.n);
        cfg.taus = j.value("taus", cfg.taus);
        if (j.contains("parameters")) {
            cfg.parameters = parameterSetFromString(j.at("parameters").get<std::string>());
        }
        cfg.runs = j.value("runs", cfg.runs);
        cfg.delta = j.value("delta", cfg.delta);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.maxSteps = j.value("max_steps", cfg.maxSteps);
        cfg.maxAttempts = j.value("max_attempts", cfg.maxAttempts);
        cfg.bootstrapSamples = j.value("bootstrap", cfg.bootstrapSamples);
        cfg.workers = j.value("workers", cfg.workers);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("bad experiment config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

nlohmann::json toJson(const ExperimentConfig& cfg) {
    return {{"n", cfg.n},
            {"taus", cfg.taus},
            {"parameters", toString(cfg.parameters)},
            {"runs", cfg.runs},
            {"delta", cfg.delta},
            {"seed", cfg.seed},
            {"max_steps", cfg.maxSteps},
            {"max_attempts", cfg.maxAttempts},
            {"bootstrap", cfg.bootstrapSamples}};
}

std::size_t workersFromEnvironment() {
    const char* v = std::getenv("FIRESALE_WORKERS");
    if (!v || !*v) {
        return 1;
    }
    char* end = nullptr;
    const long w = std::strtol(v, &end, 10);
    if (*end != '\0' || w < 1) {
        throw std::invalid_argument("FIRESALE_WORKERS must be a positive integer");
    }
    return static_cast<std::size_t>(w);
}

} // namespace firesale
