#pragma once

#include "afield/field_model.hpp"
#include "afield/segmenter.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace afield {

struct FitterConfig {
    double learning_rate_x0 = 0.05;
    double learning_rate_sigma = 0.05;
    std::size_t max_iters = 500;
    double grad_tol = 1e-8;
    std::size_t dk_switch = 3;
    // Zero means "derive from the data" (see fit_segment).
    double sigma_init = 0.0;
    double r0_init = 0.0;
    // Step multiplier applied after every accepted descent step; rejected
    // steps halve it.
    double step_growth = 1.2;
    // Stop once an accepted step lowers J by less than this fraction.
    double j_rel_tol = 1e-9;
    // A segment is discarded when the fused estimate fits its near samples
    // worse than the last prefix fit by more than this factor (0 disables).
    double max_fusion_ratio = 25.0;

    void validate() const;
};

struct FitIteration {
    std::size_t q = 0;
    std::size_t n_samples = 0;
    Point x0_hat;
    double sigma_hat = 0.0;
    double j_value = 0.0;
    std::size_t descent_steps = 0;
    bool failed = false;
};

struct FieldShape {
    Point x0;
    double sigma = 0.0;
};

// beta is the control speed at the switch sample; alpha = beta.
std::pair<double, double> estimate_beta_alpha(std::span<const double> speeds, std::size_t switch_index);

// Mean-square error between observed control speeds and the near-field law.
double objective(const FieldShape& params, double beta, double alpha, std::span<const ControlSample> near_samples);

struct FieldGradient {
    double d_sigma = 0.0;
    Eigen::VectorXd d_x0;
};

// Analytic gradient of objective() with respect to sigma and x0.
FieldGradient gradient(const FieldShape& params, double beta, double alpha,
                       std::span<const ControlSample> near_samples);

// Refits (sigma, x0) by gradient descent each time the near set grows, for
// prefix sizes 3..N, warm-starting from the previous estimate. A fresh start
// sits r0_init ahead of the prefix's last sample along `direction` (default:
// the mean control direction); the first prefix uses one, and later prefixes
// fall back to one when the warm start ends with J above 1.5x the previous
// prefix's J. Throws InsufficientData for fewer than 3 samples.
std::vector<FitIteration> fit_segment(std::span<const ControlSample> near_samples, double beta, double alpha,
                                      const FitterConfig& cfg, std::optional<Eigen::VectorXd> direction = std::nullopt);

// Weighted mean over successful iterations with weights
// (n_q / max n) * (min J / J_q), renormalized to sum to one.
FieldShape fuse_estimates(std::span<const FitIteration> iters);

// Full per-segment field estimate: phase split, beta/alpha, near fit and
// fusion, far log-normal fit and switch radius.
struct SegmentEstimate {
    std::string traj_id;
    std::size_t segment = 0;
    std::int64_t i_start = 0;
    std::int64_t i_end = 0;
    SwitchingField field;
    std::size_t switch_index = 0;
    std::size_t n_near = 0;
    std::size_t n_far = 0;
    std::vector<FitIteration> iterations;
};

// Returns nullopt when the segment shows no near-range phase or has fewer
// than three near samples.
std::optional<SegmentEstimate> estimate_segment_field(const Segment& seg, const FitterConfig& cfg);

void write_fit_trace(std::ostream& out, std::span<const FitIteration> iters);

} // namespace afield
