#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace afield {

// Position in n-D environment coordinates.
using Point = Eigen::VectorXd;
// Velocity in length units per sample.
using Velocity = Eigen::VectorXd;

struct Observation {
    std::int64_t k = 0;
    Point z;
};

// Ordered, uniformly sampled positions of one agent. Rates derived from a
// trajectory are always per sample (the sample interval is normalized to 1).
struct Trajectory {
    std::string id;
    std::vector<Observation> observations;

    std::size_t size() const noexcept { return observations.size(); }
    std::size_t dim() const noexcept {
        return observations.empty() ? 0 : static_cast<std::size_t>(observations.front().z.size());
    }
};

// Observation paired with the velocity the environment imposed at it.
// `origin` is the position the control displacement started from (the
// filter's prediction); it equals z - dk * u.
struct ControlSample {
    Point z;
    Velocity u;
    std::int64_t k = 0;
    Point origin;
};

struct ParseResult {
    std::vector<Trajectory> trajectories;
    std::vector<std::string> warnings;
};

// Reads the trajectory CSV (`traj_id,k,x1,...,xn`). Trajectories keep the
// order in which their id first appears; observations are sorted by k.
// The sample interval is the most common k step in the file; trajectories
// stepping by anything else, or with fewer than two points, are dropped with
// a warning. Throws ParseError / SchemaError.
ParseResult parse_trajectories(std::istream& in, std::optional<std::size_t> expected_dim = std::nullopt);

// Writes the same CSV format with shortest round-trip number formatting.
void write_trajectories(std::ostream& out, std::span<const Trajectory> trajectories);

// v_k = z_{k+1} - z_k, one entry per consecutive pair.
std::vector<Velocity> finite_difference_velocity(const Trajectory& t);

// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

} // namespace afield
