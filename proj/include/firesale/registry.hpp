#pragma once

#include "firesale/model.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace firesale {

/// Named examples shipped with the library. "badNE_<n>" is accepted for any
/// n >= 2; the others are fixed ids.
std::vector<std::string> exampleIds();
bool isKnownExample(const std::string& id);

/// Data directory compiled in, overridable with FIRESALE_DATA_DIR.
std::filesystem::path defaultDataDir();

/// Game of the bad-equilibrium family: n agents with a^I = l = 1, one asset
/// held equally (x = 1/n), p0 = n/2, lambda = 3.
Game badEquilibriumGame(std::size_t n);

/// The game behind an example id (generated for badNE_<n>, else loaded from
/// <dataDir>/games/<id>.json).
Game exampleGame(const std::string& id, const std::filesystem::path& dataDir);

/// Runs the scripted scenario of an example and returns its named results.
/// Utilities of -inf are encoded as the string "-inf".
nlohmann::json runScenario(const std::string& id, const std::filesystem::path& dataDir);

struct FixtureMismatch {
    std::string key;
    nlohmann::json expected;
    nlohmann::json actual; // null when the scenario did not produce the key
    double tolerance = 0.0;
};

struct FixtureComparison {
    bool pass = true;
    std::size_t checked = 0;
    std::vector<FixtureMismatch> mismatches;
};

/// Fixture format: {"id": ..., "values": {key: {"expected": v, "tol": t}}}.
/// Numbers (also inside arrays) match within tol; everything else must be
/// equal. A missing tol means exact comparison.
FixtureComparison compareFixture(const nlohmann::json& fixture, const nlohmann::json& values);

nlohmann::json loadFixture(const std::string& id, const std::filesystem::path& dataDir);

} // namespace firesale
