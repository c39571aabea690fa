#pragma once

#include <stdexcept>
#include <string>

namespace firesale {

/// Violation of a game invariant. `field()` is a JSON-pointer-like path
/// relative to the game document (e.g. "agents/1/holdings/0") so loaders
/// can map it back to a source location.
class GameError : public std::invalid_argument {
public:
    GameError(std::string field, const std::string& message)
        : std::invalid_argument(message), field_(std::move(field)) {}

    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Requested operation is not defined for the game's parameter regime
/// (e.g. simplified dynamics with alpha < 1).
class UnsupportedRegime : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace firesale
