#include "afield/rw_filter.hpp"

#include "afield/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace afield {

namespace {
Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }
} // namespace

void FilterConfig::validate() const {
    detail::require(n >= 1, "filter dimension must be >= 1");
    detail::require(q_pos > 0 && q_vel > 0 && r_meas > 0 && p0 > 0, "filter variances must be > 0");
    detail::require(dk > 0, "filter dk must be > 0");
}

Eigen::MatrixXd FilterConfig::transition() const {
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(2 * idx(n), 2 * idx(n));
    f.topLeftCorner(idx(n), idx(n)).setIdentity();
    return f;
}

Eigen::MatrixXd FilterConfig::control_map() const {
    Eigen::MatrixXd b(2 * idx(n), idx(n));
    b.topRows(idx(n)) = dk * Eigen::MatrixXd::Identity(idx(n), idx(n));
    b.bottomRows(idx(n)).setIdentity();
    return b;
}

Eigen::MatrixXd FilterConfig::observation() const {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(idx(n), 2 * idx(n));
    h.leftCols(idx(n)).setIdentity();
    return h;
}

Eigen::MatrixXd FilterConfig::process_noise() const {
    Eigen::VectorXd d(2 * idx(n));
    d.head(idx(n)).setConstant(q_pos);
    d.tail(idx(n)).setConstant(q_vel);
    return d.asDiagonal();
}

Eigen::MatrixXd FilterConfig::measurement_noise() const {
    return r_meas * Eigen::MatrixXd::Identity(idx(n), idx(n));
}

FilterState FilterState::initial(const Point& z, const FilterConfig& cfg) {
    detail::require(static_cast<std::size_t>(z.size()) == cfg.n, "initial point dimension mismatch");
    FilterState s;
    s.mean = Eigen::VectorXd::Zero(2 * z.size());
    s.mean.head(z.size()) = z;
    s.cov = cfg.p0 * Eigen::MatrixXd::Identity(2 * z.size(), 2 * z.size());
    return s;
}

FilterState predict_rw(const FilterState& state, const FilterConfig& cfg) {
    detail::require(state.mean.size() == 2 * idx(cfg.n) && state.cov.rows() == state.mean.size() &&
                        state.cov.cols() == state.mean.size(),
                    "filter state shape does not match config");
    const Eigen::MatrixXd f = cfg.transition();
    FilterState out;
    out.mean = f * state.mean;
    out.cov = f * state.cov * f.transpose() + cfg.process_noise();
    return out;
}

Innovation innovate(const FilterState& predicted, const Point& z, const FilterConfig& cfg, std::int64_t k) {
    detail::require(static_cast<std::size_t>(z.size()) == cfg.n, "measurement dimension mismatch");
    const Eigen::MatrixXd h = cfg.observation();
    Innovation inn;
    inn.y = z - h * predicted.mean;
    inn.s_cov = h * predicted.cov * h.transpose() + cfg.measurement_noise();
    inn.k = k;
    return inn;
}

FilterState update(const FilterState& predicted, const Innovation& inn, const FilterConfig& cfg) {
    const Eigen::MatrixXd h = cfg.observation();
    const Eigen::LLT<Eigen::MatrixXd> llt(inn.s_cov);
    if (llt.info() != Eigen::Success)
        throw NumericalError("innovation covariance is not positive definite at k=" + std::to_string(inn.k));

    // K = P H' S^-1, computed as (S^-1 H P)' since S and P are symmetric.
    const Eigen::MatrixXd gain = llt.solve(h * predicted.cov).transpose();
    if (!gain.allFinite()) throw NumericalError("non-finite Kalman gain at k=" + std::to_string(inn.k));

    FilterState out;
    out.mean = predicted.mean + gain * inn.y;
    const auto dim = predicted.mean.size();
    Eigen::MatrixXd cov = (Eigen::MatrixXd::Identity(dim, dim) - gain * h) * predicted.cov;
    out.cov = 0.5 * (cov + cov.transpose());
    return out;
}

Velocity extract_control(const Innovation& inn, const FilterConfig& cfg) { return inn.y / cfg.dk; }

std::vector<ControlSample> run_rw_pass(const Trajectory& t, const FilterConfig& cfg) {
    cfg.validate();
    detail::require(t.size() >= 2, "run_rw_pass needs at least 2 observations");
    detail::require(t.dim() == cfg.n, "trajectory dimension does not match filter config");

    std::vector<ControlSample> out;
    out.reserve(t.size() - 1);
    auto state = FilterState::initial(t.observations.front().z, cfg);
    for (std::size_t i = 1; i < t.size(); ++i) {
        const auto& obs = t.observations[i];
        const auto predicted = predict_rw(state, cfg);
        const auto inn = innovate(predicted, obs.z, cfg, obs.k);
        out.push_back(ControlSample{obs.z, extract_control(inn, cfg), obs.k, predicted.position()});
        state = update(predicted, inn, cfg);
    }
    return out;
}

double max_asymmetry(const Eigen::MatrixXd& m) { return (m - m.transpose()).cwiseAbs().maxCoeff(); }

} // namespace afield
