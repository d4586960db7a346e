#include "afield/segmenter.hpp"

#include "afield/error.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace afield {

namespace {
constexpr double kPi = boost::math::constants::pi<double>();
constexpr double kTwoPi = 2.0 * kPi;

// Best & Fisher (1981) approximation of the inverse of A(kappa) = I1(kappa)/I0(kappa).
double inverse_a(double r) {
    if (r < 0.53) return 2.0 * r + r * r * r + 5.0 * std::pow(r, 5) / 6.0;
    if (r < 0.85) return -0.4 + 1.39 * r + 0.43 / (1.0 - r);
    const double denom = r * r * r - 4.0 * r * r + 3.0 * r;
    return denom > 0.0 ? 1.0 / denom : kKappaMax;
}

// Unnormalized density relative to the mode, scaled so the peak is 1.
double scaled_density(double delta, double kappa) { return std::exp(kappa * (std::cos(delta) - 1.0)); }

double integrate(double kappa, double upper) {
    auto f = [kappa](double t) { return scaled_density(t, kappa); };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, upper, 20, 1e-12);
}
} // namespace

void SegmenterConfig::validate() const {
    detail::require(a >= 3, "segmenter window a must be >= 3");
    detail::require(theta_dev > 0 && theta_dev < kPi, "theta_dev must lie in (0, pi)");
    detail::require(d_theta > 0, "d_theta must be > 0");
    detail::require(n_theta >= 1, "n_theta must be >= 1");
    detail::require(cdf_threshold > 0 && cdf_threshold < 1, "cdf_threshold must lie in (0, 1)");
}

double wrap_angle(double a) {
    double w = std::remainder(a, kTwoPi);
    if (w <= -kPi) w += kTwoPi;
    return w;
}

double orientation(const Velocity& u) {
    if (u.size() == 0) return 0.0;
    return std::atan2(u.size() > 1 ? u[1] : 0.0, u[0]);
}

VonMisesEstimate estimate_von_mises(std::span<const double> angles) {
    detail::require(angles.size() >= 2, "estimate_von_mises needs at least 2 angles");
    double c = 0.0;
    double s = 0.0;
    for (double a : angles) {
        c += std::cos(a);
        s += std::sin(a);
    }
    const double n = static_cast<double>(angles.size());
    const double r = std::hypot(c, s) / n;

    VonMisesEstimate est;
    // Resultant lengths at rounding level are treated as exactly uniform.
    if (r < 1e-12) return est;
    est.mu = wrap_angle(std::atan2(s, c));
    est.kappa = r >= 1.0 ? kKappaMax : std::min(inverse_a(r), kKappaMax);
    return est;
}

double von_mises_interval_mass(const VonMisesEstimate& est, double half_width) {
    detail::require(half_width > 0 && half_width <= kPi, "half_width must lie in (0, pi]");
    if (half_width >= kPi) return 1.0;
    if (est.kappa <= 0.0) return half_width / kPi;
    // Symmetric about mu, so integrate one side and normalize by the half circle.
    const double mass = integrate(est.kappa, half_width) / integrate(est.kappa, kPi);
    return std::clamp(mass, 0.0, 1.0);
}

double mahalanobis_angle(double theta, const VonMisesEstimate& est) {
    if (est.kappa <= 0.0) return 0.0;
    return std::abs(wrap_angle(theta - est.mu)) * std::sqrt(est.kappa);
}

Segmenter::Segmenter(SegmenterConfig cfg, bool keep_trace) : cfg_(cfg), keep_trace_(keep_trace) { cfg_.validate(); }

std::vector<Segment> Segmenter::push(const ControlSample& sample) {
    std::vector<Segment> closed;
    feed(sample, closed);
    return closed;
}

std::vector<Segment> Segmenter::finish() {
    std::vector<Segment> closed;
    if (open_) closed.push_back(close());
    pending_.clear();
    window_.clear();
    return closed;
}

void Segmenter::feed(const ControlSample& sample, std::vector<Segment>& closed) {
    const double theta = orientation(sample.u);
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();

    if (!open_) {
        window_.push_back(sample);
        if (keep_trace_) trace_.push_back({sample.k, theta, nan, nan, nan, -1});
        try_open();
        if (open_ && keep_trace_) {
            for (std::size_t i = trace_.size() - cfg_.a; i < trace_.size(); ++i) {
                trace_[i].mu = est_.mu;
                trace_[i].kappa = est_.kappa;
                trace_[i].segment_id = static_cast<long>(next_id_);
            }
        }
        return;
    }

    const double d_m = mahalanobis_angle(theta, est_);
    if (d_m < cfg_.d_theta) {
        members_.push_back(sample);
        streak_ = 0;
        refit();
        if (!pending_.empty()) {
            // Rejected samples inside a surviving segment get one more chance
            // against the updated estimate; the rest are discarded as outliers.
            for (auto& p : pending_) {
                if (mahalanobis_angle(orientation(p.u), est_) < cfg_.d_theta) members_.push_back(std::move(p));
            }
            pending_.clear();
            std::stable_sort(members_.begin(), members_.end(),
                             [](const ControlSample& x, const ControlSample& y) { return x.k < y.k; });
            refit();
        }
        if (keep_trace_) trace_.push_back({sample.k, theta, est_.mu, est_.kappa, d_m, static_cast<long>(next_id_)});
        return;
    }

    if (keep_trace_) trace_.push_back({sample.k, theta, est_.mu, est_.kappa, d_m, -1});
    pending_.push_back(sample);
    if (++streak_ < cfg_.n_theta) return;

    auto seed = std::move(pending_);
    pending_.clear();
    closed.push_back(close());
    for (const auto& p : seed) feed(p, closed);
}

void Segmenter::try_open() {
    if (window_.size() < cfg_.a) return;
    std::vector<double> angles;
    angles.reserve(window_.size());
    for (const auto& w : window_) angles.push_back(orientation(w.u));
    const auto est = estimate_von_mises(angles);
    if (von_mises_interval_mass(est, cfg_.theta_dev) > cfg_.cdf_threshold) {
        open_ = true;
        members_.assign(window_.begin(), window_.end());
        window_.clear();
        est_ = est;
        streak_ = 0;
        pending_.clear();
    } else {
        window_.pop_front();
    }
}

void Segmenter::refit() {
    std::vector<double> angles;
    angles.reserve(members_.size());
    for (const auto& m : members_) angles.push_back(orientation(m.u));
    est_ = estimate_von_mises(angles);
}

Segment Segmenter::close() {
    // Members admitted against an earlier, looser estimate are dropped until
    // every survivor passes the gate of the final one.
    while (true) {
        std::vector<ControlSample> kept;
        kept.reserve(members_.size());
        for (const auto& m : members_)
            if (mahalanobis_angle(orientation(m.u), est_) < cfg_.d_theta) kept.push_back(m);
        if (kept.size() == members_.size() || kept.size() < 2) break;
        members_ = std::move(kept);
        refit();
    }
    Segment seg;
    seg.s = next_id_++;
    seg.i_start = members_.front().k;
    seg.i_end = members_.back().k;
    seg.samples = std::move(members_);
    seg.direction = est_;
    members_.clear();
    open_ = false;
    streak_ = 0;
    return seg;
}

std::vector<Segment> segment_stream(std::span<const ControlSample> samples, const SegmenterConfig& cfg) {
    Segmenter seg(cfg);
    std::vector<Segment> out;
    for (const auto& s : samples) {
        auto closed = seg.push(s);
        std::move(closed.begin(), closed.end(), std::back_inserter(out));
    }
    auto tail = seg.finish();
    std::move(tail.begin(), tail.end(), std::back_inserter(out));
    return out;
}

void write_segmenter_trace(std::ostream& out, std::span<const SegmenterTraceRow> rows) {
    out << "sample_k,angle,mu,kappa,d_m,segment_id\n";
    auto num = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };
    for (const auto& r : rows)
        out << r.sample_k << ',' << num(r.angle) << ',' << num(r.mu) << ',' << num(r.kappa) << ',' << num(r.d_m)
            << ',' << r.segment_id << '\n';
}

} // namespace afield
