#pragma once

#include "firesale/best_response.hpp"
#include "firesale/model.hpp"

#include <json.hpp>

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace firesale {

enum class DynamicsKind { SynchronousExact, SequentialExact, SynchronousSimplified };

std::string toString(DynamicsKind kind);
DynamicsKind dynamicsKindFromString(const std::string& name);

struct DynamicsConfig {
    DynamicsKind kind = DynamicsKind::SynchronousExact;
    /// Sequential move order; empty means round-robin 0..n-1.
    std::vector<std::size_t> order;
    /// Start profile; all-ones when absent.
    std::optional<StrategyProfile> start;
    double delta = 1e-5;
    /// Synchronous: number of steps. Sequential: number of full passes.
    std::size_t maxSteps = 100000;
    std::size_t cycleWindow = 64;
    /// Revisit distance that counts as a cycle; capped at delta / 2 so a slow
    /// monotone approach is never mistaken for one.
    double cycleTol = kConstraintTol;
    /// Record a valuation of every agent at every recorded profile.
    bool recordValuations = false;
    BestResponseOptions responseOptions;

    void validate(std::size_t numAgents) const; // throws std::invalid_argument
};

enum class Verdict { Converged, CycleDetected, BudgetExhausted };

std::string toString(Verdict verdict);

struct DynamicsTrace {
    DynamicsKind kind = DynamicsKind::SynchronousExact;
    /// Recorded profiles y^0 (start), y^1, ... One per synchronous step or
    /// per sequential agent move.
    std::vector<StrategyProfile> profiles;
    /// stepMax[t] = ||profiles[t+1] - profiles[t]||_inf; stepMean likewise
    /// with the mean over agents.
    std::vector<double> stepMax;
    std::vector<double> stepMean;
    /// Agent that moved into profiles[t+1]; empty for synchronous steps.
    std::vector<std::optional<std::size_t>> movers;
    /// valuations[t][i], filled when the config asks for it.
    std::vector<std::vector<AgentValuation>> valuations;

    Verdict verdict = Verdict::BudgetExhausted;
    std::size_t period = 0;                   // CycleDetected only
    std::vector<StrategyProfile> cycleStates; // CycleDetected only, in visiting order
    std::size_t moves = 0;                    // agent moves (sequential) or steps (synchronous)
    bool monotone = true;                     // every step is point-wise nonincreasing

    const StrategyProfile& finalProfile() const { return profiles.back(); }
    std::size_t steps() const { return stepMax.size(); }
};

DynamicsTrace runDynamics(const Game& game, const DynamicsConfig& cfg);

struct ClauseViolation {
    double amount = 0.0;               // worst excess over the allowance
    std::optional<std::size_t> agent;  // agent attaining it
};

struct ApproxAgentDiagnostic {
    AgentStatus status = AgentStatus::Liquid;
    double keep = 0.0;
    double gain = 0.0; // best-response equity minus current equity
    std::optional<double> leverage;
};

struct ApproxEquilibriumVerdict {
    bool pass = true;
    double epsilon = 0.0;
    ClauseViolation gain;     // clause 1: max gain over epsilon
    ClauseViolation leverage; // clause 2: max leverage over lambda + epsilon
    ClauseViolation forced;   // clause 3: max keep of illiquid/insolvent agents over epsilon
    std::vector<ApproxAgentDiagnostic> agents;
};

/// epsilon-approximate equilibrium check:
///   (1) liquid agents gain at most epsilon equity by a liquid deviation,
///   (2) liquid agents with y_i > 0 have leverage at most lambda + epsilon,
///   (3) illiquid and insolvent agents keep at most epsilon.
ApproxEquilibriumVerdict checkApproxEquilibrium(const Game& game, const StrategyProfile& y, double epsilon,
                                                const BestResponseOptions& opts = {});

struct StepSize {
    std::size_t step = 0;
    double max = 0.0;
    double mean = 0.0;
};

std::vector<StepSize> stepSizeSeries(const DynamicsTrace& trace);

/// Columns: step, agent, y_1..y_n, stepsize_max, stepsize_mean. The start
/// row has empty agent and step-size cells; synchronous rows use "*".
void writeTraceCsv(std::ostream& out, const DynamicsTrace& trace);

/// Verdict sidecar: kind, verdict, period, cycle states, final profile,
/// step and move counts, monotone flag.
nlohmann::json verdictJson(const DynamicsTrace& trace);

} // namespace firesale
