#pragma once

#include "firesale/dynamics.hpp"
#include "firesale/model.hpp"
#include "firesale/rng.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace firesale {

enum class ParameterSet {
    Fig2_3Left, // a^I ~ U[80,120], l ~ U[40,60], p0 = 100, lambda ~ U[0.6, 0.99] lambda^1
    Fig3Right,  // a^I ~ U(0,100], l ~ U[40,100], p0 ~ U[50,150], lambda ~ U[0.9, 0.99] lambda^1
};

std::string toString(ParameterSet set);
ParameterSet parameterSetFromString(const std::string& name);

struct ExperimentConfig {
    std::size_t n = 10; // agents = assets
    std::vector<double> taus = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    ParameterSet parameters = ParameterSet::Fig2_3Left;
    std::size_t runs = 10000; // accepted games per tau
    double delta = 1e-5;
    std::uint64_t seed = 1;
    std::size_t maxSteps = 1000000;
    std::size_t maxAttempts = 10000; // samples per run before giving up
    std::size_t bootstrapSamples = 1000;
    std::size_t workers = 1;

    void validate() const; // throws std::invalid_argument
};

/// Holdings x_ij = tau / n + (1 - tau) [i == j].
std::vector<std::vector<double>> diversifiedHoldings(std::size_t n, double tau);

/// Largest leverage at all-ones, or nullopt when some agent has equity <= 0.
std::optional<double> allOnesLeverage(const Game& game);

/// One draw; nullopt when the instance is rejected (lambda <= 1 or an agent
/// with nonpositive equity at all-ones).
std::optional<Game> sampleGame(const ExperimentConfig& cfg, double tau, SplitMix64& rng);

struct ExperimentPoint {
    double tau = 0.0;
    DynamicsKind dynamics = DynamicsKind::SynchronousExact;
    std::size_t runs = 0;          // accepted games
    std::size_t rejected = 0;      // rejected draws
    std::size_t unconverged = 0;   // budget exhausted or cycle
    std::size_t approxFailures = 0; // converged endpoints failing the 1e-3 check (when requested)
    double maxApproxViolation = 0.0;
    double meanSteps = 0.0;
    double ciLow = 0.0;            // 95% bootstrap interval of the mean
    double ciHigh = 0.0;
    std::vector<double> decay;     // mean |dy_i| at step t+1 over runs still active
    std::vector<std::size_t> active; // runs still active at step t+1
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<ExperimentPoint> points; // tau-major, exact before simplified

    const ExperimentPoint& at(std::size_t tauIndex, DynamicsKind kind) const;
};

/// Runs exact and simplified synchronous dynamics from all-ones on every
/// sampled game. Deterministic for a given config, whatever the worker count.
/// With checkEndpoints, every converged endpoint is tested as a
/// 1e-3-approximate equilibrium.
ExperimentResult runExperiment(const ExperimentConfig& cfg, bool checkEndpoints = false);

/// Columns: n, tau, dynamics, mean_steps, ci_low, ci_high.
void writeSummaryCsv(std::ostream& out, const ExperimentResult& result);
/// Columns: step, dynamics, mean_stepsize, active_runs, for one tau.
void writeDecayCsv(std::ostream& out, const ExperimentResult& result, std::size_t tauIndex);
/// Writes summary.csv, decay_tau_<tau>.csv for every tau and meta.json.
void writeExperimentOutputs(const ExperimentResult& result, const std::filesystem::path& dir);

struct TailTest {
    double headRate = 0.0; // fitted decay rate of log step size over the first third
    double tailRate = 0.0; // over the last third
    bool rejectsExponential = false;
    std::size_t points = 0;
};

/// Fits log(mean step size) linearly on the first and last thirds of the
/// well-populated part of a decay curve. An exponential curve has equal
/// rates; the fit is rejected when the tail rate is below half the head rate.
TailTest tailRatioTest(const ExperimentPoint& point, std::size_t minActive = 0);

bool hasInteriorMaximum(const std::vector<double>& values);

ExperimentConfig experimentConfigFromJson(const nlohmann::json& j);
nlohmann::json toJson(const ExperimentConfig& cfg);

/// Worker count from FIRESALE_WORKERS, or 1.
std::size_t workersFromEnvironment();

} // namespace firesale
