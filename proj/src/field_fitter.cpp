#include "afield/field_fitter.hpp"

#include "afield/error.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace afield {

void FitterConfig::validate() const {
    detail::require(learning_rate_x0 > 0 && learning_rate_sigma > 0, "learning rates must be > 0");
    detail::require(max_iters >= 1, "max_iters must be >= 1");
    detail::require(grad_tol > 0, "grad_tol must be > 0");
    detail::require(dk_switch >= 1, "dk_switch must be >= 1");
    detail::require(sigma_init >= 0 && r0_init >= 0, "initializers must be >= 0");
    detail::require(step_growth >= 1.0, "step_growth must be >= 1");
    detail::require(j_rel_tol >= 0, "j_rel_tol must be >= 0");
    detail::require(max_fusion_ratio >= 0, "max_fusion_ratio must be >= 0");
}

std::pair<double, double> estimate_beta_alpha(std::span<const double> speeds, std::size_t switch_index) {
    detail::require(switch_index < speeds.size(), "switch index out of range");
    const double beta = speeds[switch_index];
    return {beta, beta};
}

double objective(const FieldShape& params, double beta, double alpha, std::span<const ControlSample> near_samples) {
    detail::require(near_samples.size() >= 2, "objective needs at least 2 samples");
    const double s2 = params.sigma * params.sigma;
    double sum = 0.0;
    for (const auto& c : near_samples) {
        const double r2 = (c.z - params.x0).squaredNorm();
        const double e = c.u.norm() - (beta - alpha * std::exp(-r2 / s2));
        sum += e * e;
    }
    return sum / static_cast<double>(near_samples.size());
}

FieldGradient gradient(const FieldShape& params, double beta, double alpha,
                       std::span<const ControlSample> near_samples) {
    detail::require(near_samples.size() >= 2, "gradient needs at least 2 samples");
    const double s2 = params.sigma * params.sigma;
    FieldGradient g;
    g.d_x0 = Eigen::VectorXd::Zero(params.x0.size());
    // With g_k = alpha exp(-r_k^2/s^2) and residual e_k:
    //   dJ/dx0    = 4/(N s^2) sum e_k g_k (z_k - x0)
    //   dJ/dsigma = 4/(N s^3) sum e_k g_k r_k^2
    double acc_sigma = 0.0;
    for (const auto& c : near_samples) {
        const double r2 = (c.z - params.x0).squaredNorm();
        const double decel = alpha * std::exp(-r2 / s2);
        const double e = c.u.norm() - beta + decel;
        g.d_x0 += (e * decel) * (c.z - params.x0);
        acc_sigma += e * decel * r2;
    }
    const double n = static_cast<double>(near_samples.size());
    g.d_x0 *= 4.0 / (n * s2);
    g.d_sigma = 4.0 * acc_sigma / (n * s2 * params.sigma);
    return g;
}

namespace {

struct DescentResult {
    FieldShape shape;
    double j = 0.0;
    std::size_t steps = 0;
    bool failed = false;
    double scale = 1.0;
};

// Samples packed column-wise; same arithmetic as objective() / gradient().
struct Packed {
    Eigen::MatrixXd z;
    Eigen::ArrayXd speed;

    explicit Packed(std::span<const ControlSample> samples)
        : z(samples.front().z.size(), static_cast<Eigen::Index>(samples.size())),
          speed(static_cast<Eigen::Index>(samples.size())) {
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const auto c = static_cast<Eigen::Index>(i);
            z.col(c) = samples[i].z;
            speed[c] = samples[i].u.norm();
        }
    }

    double j(const FieldShape& p, double beta, double alpha, Eigen::Index n) const {
        const Eigen::ArrayXd r2 = (z.leftCols(n).colwise() - p.x0).colwise().squaredNorm().transpose().array();
        const Eigen::ArrayXd e = speed.head(n) - beta + alpha * (-r2 / (p.sigma * p.sigma)).exp();
        return e.square().sum() / static_cast<double>(n);
    }

    FieldGradient grad(const FieldShape& p, double beta, double alpha, Eigen::Index n) const {
        const double s2 = p.sigma * p.sigma;
        const Eigen::MatrixXd d = z.leftCols(n).colwise() - p.x0;
        const Eigen::ArrayXd r2 = d.colwise().squaredNorm().transpose().array();
        const Eigen::ArrayXd decel = alpha * (-r2 / s2).exp();
        const Eigen::ArrayXd w = (speed.head(n) - beta + decel) * decel;
        FieldGradient g;
        g.d_x0 = (4.0 / (static_cast<double>(n) * s2)) * (d * w.matrix());
        g.d_sigma = 4.0 * (w * r2).sum() / (static_cast<double>(n) * s2 * p.sigma);
        return g;
    }
};

constexpr double kRestartRatio = 1.5;

// Fixed-step descent in (x0, log sigma) with a shared step multiplier that
// grows on accepted steps and halves on rejected ones.
DescentResult descend(FieldShape start, double beta, double alpha, const Packed& data, Eigen::Index n,
                      const FitterConfig& cfg, double scale) {
    FieldShape cur = std::move(start);
    const double j0 = data.j(cur, beta, alpha, n);
    double j = j0;
    std::size_t it = 0;
    FieldShape next;
    for (; it < cfg.max_iters; ++it) {
        const auto g = data.grad(cur, beta, alpha, n);
        const double gnorm = std::sqrt(g.d_x0.squaredNorm() + g.d_sigma * g.d_sigma);
        if (!std::isfinite(gnorm)) return {cur, j, it, true, 1.0};
        if (gnorm < cfg.grad_tol) break;

        next.x0 = cur.x0 - (cfg.learning_rate_x0 * scale) * g.d_x0;
        // Chain rule for log sigma: dJ/dlog(sigma) = sigma dJ/dsigma.
        next.sigma = cur.sigma * std::exp(-(cfg.learning_rate_sigma * scale) * cur.sigma * g.d_sigma);
        const double j_next = data.j(next, beta, alpha, n);
        if (std::isfinite(j_next) && j_next <= j) {
            std::swap(cur, next);
            const double gain = j - j_next;
            j = j_next;
            scale *= cfg.step_growth;
            if (gain <= cfg.j_rel_tol * (j + gain)) {
                ++it;
                break;
            }
        } else {
            scale *= 0.5;
            if (scale < 1e-30) break;
        }
    }
    const bool diverged = !std::isfinite(j) || j > 10.0 * j0;
    return {cur, j, it, diverged, std::max(scale, 1.0)};
}

} // namespace

std::vector<FitIteration> fit_segment(std::span<const ControlSample> near_samples, double beta, double alpha,
                                      const FitterConfig& cfg, std::optional<Eigen::VectorXd> direction) {
    cfg.validate();
    if (near_samples.size() < 3) throw InsufficientData("fit_segment needs at least 3 near samples");
    detail::require(beta > 0 && alpha > 0, "beta and alpha must be > 0");

    Eigen::VectorXd dir;
    if (direction && direction->norm() > 0) {
        dir = direction->normalized();
    } else {
        dir = Eigen::VectorXd::Zero(near_samples.front().u.size());
        for (const auto& c : near_samples) dir += c.u;
        if (dir.norm() > 0) dir.normalize();
    }

    // Center ahead of the last sample along the motion direction, scaled by
    // the distance the prefix covers.
    const auto fresh_start = [&](std::span<const ControlSample> prefix) {
        const auto& z_last = prefix.back().z;
        const double covered = std::max((z_last - prefix.front().z).norm(), 1e-6);
        FieldShape s;
        s.x0 = z_last + (cfg.r0_init > 0 ? cfg.r0_init : 2.0 * covered) * dir;
        s.sigma = cfg.sigma_init > 0 ? cfg.sigma_init : covered;
        return s;
    };

    const Packed data(near_samples);
    FieldShape shape = fresh_start(near_samples.first(3));
    double scale = 1.0;
    std::vector<FitIteration> out;
    out.reserve(near_samples.size() - 2);
    for (std::size_t n = 3; n <= near_samples.size(); ++n) {
        const auto prefix = near_samples.first(n);
        const auto cols = static_cast<Eigen::Index>(n);
        auto res = descend(shape, beta, alpha, data, cols, cfg, scale);
        // A warm start that no longer explains the new samples is usually
        // stuck on a plateau; retry from a fresh initializer.
        if (n > 3 && (res.failed || res.j > kRestartRatio * out.back().j_value)) {
            auto alt = descend(fresh_start(prefix), beta, alpha, data, cols, cfg, scale);
            if (res.failed || (!alt.failed && alt.j < res.j)) res = std::move(alt);
        }
        FitIteration it;
        it.q = out.size() + 1;
        it.n_samples = n;
        it.x0_hat = res.shape.x0;
        it.sigma_hat = res.shape.sigma;
        it.j_value = res.j;
        it.descent_steps = res.steps;
        it.failed = res.failed;
        out.push_back(std::move(it));
        if (!res.failed) {
            shape = std::move(res.shape);
            scale = res.scale;
        }
    }
    return out;
}

FieldShape fuse_estimates(std::span<const FitIteration> iters) {
    constexpr double eps = 1e-12;
    std::size_t max_n = 0;
    double min_j = 0.0;
    bool any = false;
    for (const auto& it : iters) {
        if (it.failed) continue;
        max_n = std::max(max_n, it.n_samples);
        min_j = any ? std::min(min_j, it.j_value) : it.j_value;
        any = true;
    }
    if (!any) throw InsufficientData("fuse_estimates needs at least one successful iteration");

    std::vector<double> w;
    w.reserve(iters.size());
    double total = 0.0;
    for (const auto& it : iters) {
        if (it.failed) {
            w.push_back(0.0);
            continue;
        }
        const double w1 = static_cast<double>(it.n_samples) / static_cast<double>(max_n);
        const double w2 = std::max(min_j, eps) / std::max(it.j_value, eps);
        w.push_back(w1 * w2);
        total += w.back();
    }

    FieldShape fused;
    for (std::size_t i = 0; i < iters.size(); ++i) {
        if (iters[i].failed) continue;
        const double wi = w[i] / total;
        if (fused.x0.size() == 0) fused.x0 = Eigen::VectorXd::Zero(iters[i].x0_hat.size());
        fused.x0 += wi * iters[i].x0_hat;
        fused.sigma += wi * iters[i].sigma_hat;
    }
    return fused;
}

std::optional<SegmentEstimate> estimate_segment_field(const Segment& seg, const FitterConfig& cfg) {
    std::vector<double> speeds;
    speeds.reserve(seg.samples.size());
    for (const auto& c : seg.samples) speeds.push_back(c.u.norm());

    const auto switch_index = classify_phase(speeds, cfg.dk_switch);
    if (!switch_index) return std::nullopt;
    const std::span<const ControlSample> samples(seg.samples);
    const auto near = samples.subspan(*switch_index);
    if (near.size() < 3) return std::nullopt;

    const auto [beta, alpha] = estimate_beta_alpha(speeds, *switch_index);
    if (!(beta > 0)) return std::nullopt;

    const double mu = seg.direction.mu;
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(near.front().u.size());
    dir[0] = std::cos(mu);
    if (dir.size() > 1) dir[1] = std::sin(mu);

    SegmentEstimate est;
    est.segment = seg.s;
    est.i_start = seg.i_start;
    est.i_end = seg.i_end;
    est.switch_index = *switch_index;
    est.n_near = near.size();
    est.n_far = *switch_index;
    // Each control is the displacement that started at its origin, so the
    // field law is evaluated there.
    std::vector<ControlSample> anchored(near.begin(), near.end());
    for (auto& c : anchored)
        if (c.origin.size() == c.z.size()) c.z = c.origin;
    est.iterations = fit_segment(anchored, beta, alpha, cfg, dir);

    FieldShape fused;
    try {
        fused = fuse_estimates(est.iterations);
    } catch (const InsufficientData&) {
        return std::nullopt;
    }
    if (!fused.x0.allFinite() || !(fused.sigma > 0)) return std::nullopt;
    if (cfg.max_fusion_ratio > 0) {
        const double j_fused = objective(fused, beta, alpha, anchored);
        const double j_last = std::max(est.iterations.back().j_value, 1e-300);
        if (!(j_fused <= cfg.max_fusion_ratio * j_last)) return std::nullopt;
    }

    est.field.near = NearFieldParams{beta, alpha, fused.x0, fused.sigma};
    const std::span<const double> far_speeds(speeds.data(), *switch_index);
    est.field.far = far_speeds.size() >= 2 ? fit_far_lognormal(far_speeds) : FarFieldParams{std::log(beta), 0.0};
    est.field.r_switch = std::max((anchored.front().z - fused.x0).norm(), 1e-9);
    return est;
}

void write_fit_trace(std::ostream& out, std::span<const FitIteration> iters) {
    const auto dim = iters.empty() ? 0 : iters.front().x0_hat.size();
    out << "q,n_samples";
    for (Eigen::Index i = 1; i <= dim; ++i) out << ",x0_" << i;
    out << ",sigma,j\n";
    for (const auto& it : iters) {
        out << it.q << ',' << it.n_samples;
        for (Eigen::Index i = 0; i < it.x0_hat.size(); ++i) out << ',' << format_double(it.x0_hat[i]);
        out << ',' << format_double(it.sigma_hat) << ',' << format_double(it.j_value) << '\n';
    }
}

} // namespace afield
