#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace firesale {

/// A point of a piecewise-linear price curve: (kept amount, price).
struct Breakpoint {
    double kept = 0.0;
    double price = 0.0;
};

/// Price of one asset as a function of the total amount of it that is
/// still held (the "kept amount"). Normalized so that the full supply
/// (kept amount 1) trades at the initial price p0.
///
/// Three shapes are supported:
///   Linear           p(x) = p0 * x
///   PowerConvex      p(x) = scale * x^exponent, exponent >= 1, scale == p0
///   PiecewiseLinear  linear interpolation through breakpoints given in
///                    kept-amount units; the first breakpoint sits at 0 and
///                    the last at or beyond 1. Past the last breakpoint the
///                    final segment is extended.
class PriceImpact {
public:
    enum class Kind { Linear, PowerConvex, PiecewiseLinear };

    static PriceImpact linear(double p0);
    static PriceImpact powerConvex(double p0, double exponent);
    static PriceImpact piecewiseLinear(std::vector<Breakpoint> breakpoints);

    Kind kind() const { return kind_; }
    double initialPrice() const { return p0_; }
    double exponent() const { return exponent_; }
    const std::vector<Breakpoint>& breakpoints() const { return breakpoints_; }

    double operator()(double kept) const;

    bool isLinear() const { return kind_ == Kind::Linear; }

    /// Convex on [0, 1]. Linear and power curves always are; piecewise
    /// curves are when segment slopes are nondecreasing.
    bool isConvex() const;

    /// Interior kink locations (kept-amount units), excluding 0 and the end.
    std::vector<double> kinks() const;

private:
    PriceImpact() = default;

    Kind kind_ = Kind::Linear;
    double p0_ = 1.0;
    double exponent_ = 1.0;
    std::vector<Breakpoint> breakpoints_;
};

std::string toString(PriceImpact::Kind kind);

} // namespace firesale
