#include "firesale/price_impact.hpp"

#include "firesale/errors.hpp"

#include <cmath>

namespace firesale {

PriceImpact PriceImpact::linear(double p0) {
    if (!(p0 > 0.0) || !std::isfinite(p0)) {
        throw GameError("p0", "initial price must be positive and finite");
    }
    PriceImpact impact;
    impact.kind_ = Kind::Linear;
    impact.p0_ = p0;
    return impact;
}

PriceImpact PriceImpact::powerConvex(double p0, double exponent) {
    if (!(p0 > 0.0) || !std::isfinite(p0)) {
        throw GameError("p0", "initial price must be positive and finite");
    }
    if (!(exponent >= 1.0) || !std::isfinite(exponent)) {
        throw GameError("impact/exponent", "power impact needs exponent >= 1");
    }
    PriceImpact impact;
    impact.kind_ = Kind::PowerConvex;
    impact.p0_ = p0;
    impact.exponent_ = exponent;
    return impact;
}

PriceImpact PriceImpact::piecewiseLinear(std::vector<Breakpoint> breakpoints) {
    if (breakpoints.size() < 2) {
        throw GameError("impact/breakpoints", "need at least two breakpoints");
    }
    if (breakpoints.front().kept != 0.0) {
        throw GameError("impact/breakpoints/0", "first breakpoint must be at kept amount 0");
    }
    if (breakpoints.back().kept < 1.0) {
        throw GameError("impact/breakpoints/" + std::to_string(breakpoints.size() - 1),
                        "last breakpoint must be at kept amount >= 1");
    }
    if (!(breakpoints.front().price >= 0.0)) {
        throw GameError("impact/breakpoints/0", "price at kept amount 0 must be >= 0");
    }
    for (std::size_t k = 1; k < breakpoints.size(); ++k) {
        const auto& prev = breakpoints[k - 1];
        const auto& cur = breakpoints[k];
        if (!std::isfinite(cur.kept) || !std::isfinite(cur.price)) {
            throw GameError("impact/breakpoints/" + std::to_string(k), "breakpoint must be finite");
        }
        if (!(cur.kept > prev.kept)) {
            throw GameError("impact/breakpoints/" + std::to_string(k),
                            "breakpoints must be strictly increasing in kept amount");
        }
        if (!(cur.price > prev.price)) {
            throw GameError("impact/breakpoints/" + std::to_string(k),
                            "price must be strictly increasing");
        }
    }
    PriceImpact impact;
    impact.kind_ = Kind::PiecewiseLinear;
    impact.breakpoints_ = std::move(breakpoints);
    impact.p0_ = impact(1.0);
    return impact;
}

double PriceImpact::operator()(double kept) const {
    switch (kind_) {
    case Kind::Linear:
        return p0_ * kept;
    case Kind::PowerConvex:
        return kept <= 0.0 ? 0.0 : p0_ * std::pow(kept, exponent_);
    case Kind::PiecewiseLinear: {
        const auto& bp = breakpoints_;
        std::size_t seg = 0;
        while (seg + 2 < bp.size() && kept >= bp[seg + 1].kept) {
            ++seg;
        }
        const auto& lo = bp[seg];
        const auto& hi = bp[seg + 1];
        const double slope = (hi.price - lo.price) / (hi.kept - lo.kept);
        return lo.price + slope * (kept - lo.kept);
    }
    }
    return 0.0;
}

bool PriceImpact::isConvex() const {
    if (kind_ != Kind::PiecewiseLinear) {
        return true;
    }
    double prevSlope = -1.0;
    for (std::size_t k = 1; k < breakpoints_.size(); ++k) {
        const auto& lo = breakpoints_[k - 1];
        const auto& hi = breakpoints_[k];
        const double slope = (hi.price - lo.price) / (hi.kept - lo.kept);
        if (slope < prevSlope - 1e-12) {
            return false;
        }
        prevSlope = slope;
    }
    return true;
}

std::vector<double> PriceImpact::kinks() const {
    std::vector<double> out;
    if (kind_ == Kind::PiecewiseLinear) {
        for (std::size_t k = 1; k + 1 < breakpoints_.size(); ++k) {
            out.push_back(breakpoints_[k].kept);
        }
    }
    return out;
}

std::string toString(PriceImpact::Kind kind) {
    switch (kind) {
    case PriceImpact::Kind::Linear:
        return "linear";
    case PriceImpact::Kind::PowerConvex:
        return "power";
    case PriceImpact::Kind::PiecewiseLinear:
        return "piecewise_linear";
    }
    return "unknown";
}

} // namespace firesale
