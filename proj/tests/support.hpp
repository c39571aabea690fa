#pragma once

#include "firesale/game_io.hpp"
#include "firesale/model.hpp"
#include "firesale/rng.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace firesale::testing {

inline std::filesystem::path dataDir() { return FIRESALE_DATA_DIR; }

inline Game bundledGame(const std::string& name) { return loadGame(dataDir() / "games" / (name + ".json")); }

enum class ImpactFamily { Linear, PowerConvex };

/// Random game with n agents and m assets whose all-ones profile violates
/// some leverage cap, so dynamics have something to do. Linear games have
/// alpha = 1; power games draw alpha in (0, 1) and exponents in [1, 3].
inline std::optional<Game> tryRandomGame(SplitMix64& rng, std::size_t n, std::size_t m, ImpactFamily family) {
    std::vector<std::vector<double>> x(n, std::vector<double>(m, 0.0));
    for (std::size_t j = 0; j < m; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            x[i][j] = rng.uniform() < 0.25 ? 0.0 : rng.uniform();
            sum += x[i][j];
        }
        const double supply = rng.uniform(0.6, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            x[i][j] = sum > 0.0 ? x[i][j] / sum * supply : 0.0;
        }
    }
    std::vector<AssetSpec> assets;
    std::vector<double> p0(m);
    for (std::size_t j = 0; j < m; ++j) {
        p0[j] = rng.uniform(50.0, 150.0);
        assets.push_back({family == ImpactFamily::Linear ? PriceImpact::linear(p0[j])
                                                         : PriceImpact::powerConvex(p0[j], rng.uniform(1.0, 3.0))});
    }
    std::vector<AgentSpec> agents;
    for (std::size_t i = 0; i < n; ++i) {
        double value = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            value += x[i][j] * p0[j];
        }
        const double illiquid = rng.uniform(20.0, 120.0);
        agents.push_back({illiquid, rng.uniform(0.4, 0.8) * (illiquid + value), x[i]});
    }
    const double alpha = family == ImpactFamily::Linear ? 1.0 : rng.uniform(0.2, 0.9);
    const Game probe(agents, assets, alpha, 2.0);
    const auto ones = StrategyProfile::ones(n);
    double top = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto v = valuation(probe, ones, i);
        if (!v.leverage) {
            return std::nullopt;
        }
        top = std::max(top, *v.leverage);
    }
    const double lambda = rng.uniform(0.7, 1.0) * top;
    if (lambda <= 1.05) {
        return std::nullopt;
    }
    return Game(std::move(agents), std::move(assets), alpha, lambda);
}

inline Game randomGame(SplitMix64& rng, std::size_t n, std::size_t m, ImpactFamily family) {
    for (;;) {
        if (auto g = tryRandomGame(rng, n, m, family)) {
            return *g;
        }
    }
}

inline StrategyProfile randomProfile(SplitMix64& rng, std::size_t n) {
    std::vector<double> y(n);
    for (auto& v : y) {
        v = rng.uniform();
    }
    return StrategyProfile(std::move(y));
}

/// Point-wise max (join) or min (meet) of two profiles.
inline StrategyProfile combine(const StrategyProfile& a, const StrategyProfile& b, bool join) {
    std::vector<double> y(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        y[i] = join ? std::max(a[i], b[i]) : std::min(a[i], b[i]);
    }
    return StrategyProfile(std::move(y));
}

} // namespace firesale::testing
