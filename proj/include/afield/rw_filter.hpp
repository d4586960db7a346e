#pragma once

#include "afield/trajectory.hpp"

#include <Eigen/Core>

namespace afield {

// Noise model of the random-walk Kalman filter. State is [position; velocity]
// (2n), measurements are positions (n).
struct FilterConfig {
    std::size_t n = 2;
    double q_pos = 0.01;  // process-noise variance, position axes
    double q_vel = 0.01;  // process-noise variance, velocity axes
    double r_meas = 1e-4; // measurement-noise variance per axis
    double p0 = 1.0;      // initial covariance scale
    double dk = 1.0;      // sample interval

    void validate() const;

    Eigen::MatrixXd transition() const;  // [[I, 0], [0, 0]]
    Eigen::MatrixXd control_map() const; // B = [dk I; I]
    Eigen::MatrixXd observation() const; // H = [I, 0]
    Eigen::MatrixXd process_noise() const;
    Eigen::MatrixXd measurement_noise() const;
};

struct FilterState {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;

    // Position at z, zero velocity, covariance p0 * I.
    static FilterState initial(const Point& z, const FilterConfig& cfg);
    Point position() const { return mean.head(mean.size() / 2); }
};

struct Innovation {
    Eigen::VectorXd y;
    Eigen::MatrixXd s_cov;
    std::int64_t k = 0;
};

// Random-walk prediction: position persists, velocity prediction is zero.
FilterState predict_rw(const FilterState& state, const FilterConfig& cfg);

// Residual of z against the predicted position, with its covariance H P H' + R.
Innovation innovate(const FilterState& predicted, const Point& z, const FilterConfig& cfg, std::int64_t k = 0);

// Kalman correction. Throws NumericalError when S is not positive definite.
FilterState update(const FilterState& predicted, const Innovation& inn, const FilterConfig& cfg);

// Control velocity implied by an innovation: y / dk.
Velocity extract_control(const Innovation& inn, const FilterConfig& cfg);

// Runs the random-walk filter over t. The filter starts at the first
// observation; one ControlSample is produced for each later observation.
std::vector<ControlSample> run_rw_pass(const Trajectory& t, const FilterConfig& cfg);

// Largest |P(i,j) - P(j,i)|.
double max_asymmetry(const Eigen::MatrixXd& m);

} // namespace afield
