#pragma once

#include "afield/trajectory.hpp"

#include <optional>
#include <span>

namespace afield {

// Near-range attractive field: speed beta - alpha * exp(-r^2 / sigma^2),
// directed toward x0.
struct NearFieldParams {
    double beta = 0.0;  // top speed, length/sample
    double alpha = 0.0; // deceleration amplitude, length/sample
    Point x0;           // center of force
    double sigma = 0.0; // shape scale, length

    void validate() const;
};

// Far-range speed law: log-normal with location mu_log and scale sigma_far.
struct FarFieldParams {
    double mu_log = 0.0;
    double sigma_far = 0.0;

    double median_speed() const;
};

struct SwitchingField {
    NearFieldParams near;
    FarFieldParams far;
    double r_switch = 0.0;

    void validate() const;
};

double eval_near_speed(const NearFieldParams& p, double r);

// Field velocity at x: near law inside r_switch, median far speed outside,
// always directed at x0 (zero at x0 itself).
Velocity eval_field(const SwitchingField& f, const Point& x);

// Maximum-likelihood log-normal fit. Speeds below 1e-9 are floored.
// Throws InsufficientData for fewer than 2 speeds.
FarFieldParams fit_far_lognormal(std::span<const double> speeds);

inline constexpr double kDecreaseTolerance = 1e-3;

// First index i where speeds strictly decrease (by more than a 1e-3 relative
// margin) for dk_switch consecutive steps; samples from i on are near-range.
std::optional<std::size_t> classify_phase(std::span<const double> speeds, std::size_t dk_switch = 3);

} // namespace afield
