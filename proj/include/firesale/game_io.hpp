#pragma once

#include "firesale/model.hpp"

#include <json.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace firesale {

/// Location of a problem in a game document.
struct Diagnostic {
    std::string source; // file name or "<input>"
    std::size_t line = 0;   // 1-based; 0 when unknown
    std::size_t column = 0; // 1-based; 0 when unknown
    std::string path;       // field path, e.g. "agents/1/holdings/0"
    std::string message;

    /// "source:line:column: path: message"
    std::string format() const;
};

class GameLoadError : public std::runtime_error {
public:
    explicit GameLoadError(Diagnostic d) : std::runtime_error(d.format()), diagnostic_(std::move(d)) {}
    const Diagnostic& diagnostic() const { return diagnostic_; }

private:
    Diagnostic diagnostic_;
};

/// Parses and validates a game document:
///
///   {
///     "alpha": 1.0, "lambda": 6.0,
///     "agents": [{"illiquid_assets": 1, "liabilities": 1.25, "holdings": [0.5]}, ...],
///     "assets": [{"p0": 1, "impact": {"kind": "linear"}}, ...]
///   }
///
/// Impact kinds: {"kind": "linear"}, {"kind": "power", "exponent": e}
/// (optional "scale", which must equal p0) and {"kind": "piecewise_linear",
/// "breakpoints": [[kept, price], ...]} (p0 optional, must match the curve
/// at kept amount 1). Throws GameLoadError with the line of the offending value.
Game parseGame(const std::string& text, const std::string& source = "<input>");
Game loadGame(const std::filesystem::path& file);

nlohmann::json gameToJson(const Game& game);
void saveGame(const Game& game, const std::filesystem::path& file);

namespace detail {

/// Maps every value in a JSON text to the offset where it starts, keyed
/// by slash-separated path ("" for the root).
class JsonLineIndex {
public:
    explicit JsonLineIndex(const std::string& text);

    /// Line and column of the value at `path`, falling back to the nearest
    /// enclosing value that exists.
    std::pair<std::size_t, std::size_t> locate(const std::string& path) const;
    std::pair<std::size_t, std::size_t> lineColumn(std::size_t offset) const;

private:
    std::vector<std::size_t> lineStarts_;
    std::vector<std::pair<std::string, std::size_t>> entries_;
};

} // namespace detail

} // namespace firesale
