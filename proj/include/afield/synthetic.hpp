#pragma once

#include "afield/field_model.hpp"
#include "afield/trajectory.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace afield {

struct Box {
    Point lo;
    Point hi;

    std::size_t dim() const noexcept { return static_cast<std::size_t>(lo.size()); }
    bool contains(const Point& p) const;
    void validate() const;
};

// Ground-truth environment. Attractor fields use alpha = beta (agents arrive
// at rest) and switch to constant cruise at beta beyond 3 sigma.
struct Scenario {
    std::vector<SwitchingField> attractors;
    Box bounds;
    std::uint64_t seed = 7;

    void validate() const;
};

// Ground-truth field for an attractor given by center, top speed and sigma^2.
SwitchingField make_attractor(const Point& x0, double beta, double sigma2);

// The three-attractor layout on [-1, 1]^2.
Scenario default_scenario();

Scenario parse_scenario_json(const std::string& text);
std::string scenario_to_json(const Scenario& s);

struct SimConfig {
    double snr = 10.0;
    std::size_t n_trajectories = 150;
    std::size_t max_steps = 2000;
    double arrival_radius = 0.02;

    void validate() const;
};

struct SimulatedAgent {
    Trajectory trajectory;
    bool truncated = false;
};

// Simulated walk through `goals` (attractor indexes). Each step moves by the
// current goal's speed law toward its center plus per-axis uniform noise of
// half-width |v| / snr; the goal advances within arrival_radius.
SimulatedAgent simulate_agent(const Scenario& scenario, std::span<const std::size_t> goals, const SimConfig& cfg,
                              std::uint64_t rng_seed);

// n_trajectories agents with random goal sequences of length 1-3 (no goal
// repeated back to back). Trajectory i uses seed scenario.seed + i.
std::vector<Trajectory> generate_dataset(const Scenario& scenario, const SimConfig& cfg);

// Noiseless integration of eval_field from `start` for `steps` samples.
Trajectory trace_field(const SwitchingField& f, const Point& start, std::size_t steps, std::string id = "trace");

// Normalized error per noise level. ground_truth[m] and estimates[tau][m] are
// parameter vectors of equal length.
std::vector<double> normalized_error(std::span<const Eigen::VectorXd> ground_truth,
                                     std::span<const std::vector<Eigen::VectorXd>> estimates);

} // namespace afield
