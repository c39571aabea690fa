#include "firesale/game_io.hpp"
#include "firesale/registry.hpp"
#include "support.hpp"

#include <doctest.h>

#include <filesystem>

using namespace firesale;
using namespace firesale::testing;
using doctest::Approx;

namespace {

Diagnostic diagnosticOf(const std::string& text) {
    try {
        (void)parseGame(text, "t.json");
    } catch (const GameLoadError& e) {
        return e.diagnostic();
    }
    FAIL("expected a GameLoadError");
    return {};
}

const char* kValid = R"({
  "alpha": 1.0,
  "lambda": 6.0,
  "agents": [
    {"illiquid_assets": 1, "liabilities": 1.25, "holdings": [0.5]},
    {"illiquid_assets": 1, "liabilities": 1.25, "holdings": [0.5]}
  ],
  "assets": [{"p0": 1, "impact": {"kind": "linear"}}]
})";

} // namespace

TEST_SUITE("game files") {
    TEST_CASE("every bundled game loads") {
        for (const auto& entry : std::filesystem::directory_iterator(dataDir() / "games")) {
            CAPTURE(entry.path().string());
            CHECK_NOTHROW((void)loadGame(entry.path()));
        }
    }

    TEST_CASE("valid document") {
        const Game g = parseGame(kValid);
        CHECK(g.numAgents() == 2);
        CHECK(g.numAssets() == 1);
        CHECK(g.lambda() == 6.0);
        CHECK(g.liabilities(1) == 1.25);
        CHECK(g.isPostSaleLinear());
    }

    TEST_CASE("round trip through JSON") {
        for (const char* id : {"ex_cycle_convex", "prop8", "thm6", "prop9"}) {
            const Game g = bundledGame(id);
            const Game h = parseGame(gameToJson(g).dump());
            CHECK(gameToJson(h) == gameToJson(g));
            for (double k : {0.0, 0.05, 0.33, 0.5, 1.0}) {
                for (std::size_t j = 0; j < g.numAssets(); ++j) {
                    CHECK(h.impact(j)(k) == Approx(g.impact(j)(k)));
                }
            }
        }
        const Game b = badEquilibriumGame(10);
        CHECK(gameToJson(parseGame(gameToJson(b).dump())) == gameToJson(b));
    }

    TEST_CASE("bundled bad-equilibrium files match the generator") {
        for (std::size_t n : {10u, 100u}) {
            CHECK(gameToJson(bundledGame("badNE_" + std::to_string(n))) == gameToJson(badEquilibriumGame(n)));
        }
    }

    TEST_CASE("diagnostics point at the offending value") {
        std::string text = kValid;
        text.replace(text.find("1.25, \"holdings\": [0.5]}\n  ]"), 4, "-1.0");
        const auto d = diagnosticOf(text);
        CHECK(d.path == "agents/1/liabilities");
        CHECK(d.line == 6);
        CHECK(d.column > 1);
        CHECK(d.format().rfind("t.json:6:", 0) == 0);
    }

    TEST_CASE("holding outside [0, 1]") {
        std::string text = kValid;
        text.replace(text.find("[0.5]"), 5, "[1.5]");
        const auto d = diagnosticOf(text);
        CHECK(d.path == "agents/0/holdings/0");
        CHECK(d.line == 5);
    }

    TEST_CASE("column sum above supply") {
        std::string text = kValid;
        text.replace(text.find("[0.5]"), 5, "[0.6]");
        CHECK(diagnosticOf(text).message.find("sum") != std::string::npos);
    }

    TEST_CASE("missing and unknown fields") {
        std::string text = kValid;
        text.replace(text.find("\"lambda\": 6.0,"), 14, "");
        CHECK(diagnosticOf(text).path == "lambda");
        std::string extra = kValid;
        extra.replace(extra.find("\"alpha\""), 0, "\"beta\": 1, ");
        CHECK(diagnosticOf(extra).path == "beta");
    }

    TEST_CASE("impact kinds and their parameters") {
        std::string power = kValid;
        power.replace(power.find("{\"kind\": \"linear\"}"), 18, "{\"kind\": \"power\", \"exponent\": 0.5}");
        CHECK(diagnosticOf(power).path == "assets/0/impact/exponent");
        std::string kind = kValid;
        kind.replace(kind.find("\"linear\""), 8, "\"cubic\"");
        CHECK(diagnosticOf(kind).path == "assets/0/impact/kind");
        std::string scale = kValid;
        scale.replace(scale.find("{\"kind\": \"linear\"}"), 18,
                      "{\"kind\": \"power\", \"exponent\": 2, \"scale\": 3}");
        CHECK(diagnosticOf(scale).path.rfind("assets/0", 0) == 0);
        std::string pw = kValid;
        const std::string linear = "\"p0\": 1, \"impact\": {\"kind\": \"linear\"}";
        pw.replace(pw.find(linear), linear.size(),
                   "\"impact\": {\"kind\": \"piecewise_linear\", \"breakpoints\": [[0, 0], [0.5, 2], [0.4, 3]]}");
        CHECK(diagnosticOf(pw).path.rfind("assets/0/impact/breakpoints", 0) == 0);
    }

    TEST_CASE("malformed JSON reports line and column") {
        const auto d = diagnosticOf("{\n  \"alpha\": 1.0,\n  \"lambda\": ,\n}");
        CHECK(d.line == 3);
        CHECK(d.column > 0);
    }

    TEST_CASE("save and load") {
        const auto path = std::filesystem::temp_directory_path() / "firesale_io_test.json";
        const Game g = bundledGame("thm6");
        saveGame(g, path);
        CHECK(gameToJson(loadGame(path)) == gameToJson(g));
        std::filesystem::remove(path);
        CHECK_THROWS_AS((void)loadGame(path), GameLoadError);
    }
}
