#include "afield/field_model.hpp"

#include "afield/error.hpp"

#include <algorithm>
#include <cmath>

namespace afield {

void NearFieldParams::validate() const {
    detail::require(beta > 0 && alpha > 0 && sigma > 0, "near-field beta, alpha and sigma must be > 0");
    detail::require(x0.size() >= 1 && x0.allFinite(), "near-field center must be finite");
}

double FarFieldParams::median_speed() const { return std::exp(mu_log); }

void SwitchingField::validate() const {
    near.validate();
    detail::require(far.sigma_far >= 0, "sigma_far must be >= 0");
    detail::require(r_switch > 0, "r_switch must be > 0");
}

double eval_near_speed(const NearFieldParams& p, double r) {
    detail::require(r >= 0, "distance must be non-negative");
    return p.beta - p.alpha * std::exp(-(r * r) / (p.sigma * p.sigma));
}

Velocity eval_field(const SwitchingField& f, const Point& x) {
    detail::require(x.size() == f.near.x0.size(), "point dimension does not match field");
    detail::require(x.allFinite(), "point must be finite");
    const Velocity toward = f.near.x0 - x;
    const double r = toward.norm();
    if (r == 0.0) return Velocity::Zero(x.size());
    const double speed = r <= f.r_switch ? eval_near_speed(f.near, r) : f.far.median_speed();
    return speed * toward / r;
}

FarFieldParams fit_far_lognormal(std::span<const double> speeds) {
    if (speeds.size() < 2) throw InsufficientData("log-normal fit needs at least 2 speeds");
    double sum = 0.0;
    for (double s : speeds) sum += std::log(std::max(s, 1e-9));
    const double n = static_cast<double>(speeds.size());
    const double mean = sum / n;
    double ss = 0.0;
    for (double s : speeds) {
        const double d = std::log(std::max(s, 1e-9)) - mean;
        ss += d * d;
    }
    return FarFieldParams{mean, std::sqrt(ss / n)};
}

std::optional<std::size_t> classify_phase(std::span<const double> speeds, std::size_t dk_switch) {
    detail::require(dk_switch >= 1, "dk_switch must be >= 1");
    std::size_t run = 0;
    for (std::size_t j = 1; j < speeds.size(); ++j) {
        run = speeds[j] < speeds[j - 1] * (1.0 - kDecreaseTolerance) ? run + 1 : 0;
        if (run == dk_switch) return j - dk_switch;
    }
    return std::nullopt;
}

} // namespace afield
