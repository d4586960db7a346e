#pragma once

#include "afield/trajectory.hpp"

#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace afield {

struct SegmenterConfig {
    std::size_t a = 5;          // minimum window size
    double theta_dev = 0.6;     // half-width of the alignment interval, radians
    double d_theta = 3.0;       // gate on the angular Mahalanobis distance
    std::size_t n_theta = 4;    // consecutive rejections that close a segment
    double cdf_threshold = 0.9; // interval mass needed to open a segment

    void validate() const;
};

inline constexpr double kKappaMax = 1e4;

struct VonMisesEstimate {
    double mu = 0.0;    // (-pi, pi]
    double kappa = 0.0; // >= 0, capped at kKappaMax
};

struct Segment {
    std::size_t s = 0;
    std::int64_t i_start = 0;
    std::int64_t i_end = 0;
    std::vector<ControlSample> samples;
    VonMisesEstimate direction;
};

// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

// Orientation of a control vector in the plane of its first two axes.
double orientation(const Velocity& u);

// Mean direction and concentration of a set of angles. kappa uses the
// Best-Fisher piecewise inverse of A(kappa) = I1/I0 and is capped at kKappaMax.
VonMisesEstimate estimate_von_mises(std::span<const double> angles);

// Probability mass of the von Mises density on [mu - half_width, mu + half_width].
double von_mises_interval_mass(const VonMisesEstimate& est, double half_width);

// |wrap(theta - mu)| * sqrt(kappa); zero when kappa is zero.
double mahalanobis_angle(double theta, const VonMisesEstimate& est);

// One row of the optional segmenter debug dump.
struct SegmenterTraceRow {
    std::int64_t sample_k = 0;
    double angle = 0.0;
    double mu = 0.0;
    double kappa = 0.0;
    double d_m = 0.0;
    long segment_id = -1;
};

// Online segmentation of a control-sample stream into runs of stable
// orientation. Feed samples in index order with push(); closed segments are
// returned as they complete, and finish() flushes the open one. On closing,
// members that fail the gate against the final estimate are dropped.
class Segmenter {
public:
    explicit Segmenter(SegmenterConfig cfg, bool keep_trace = false);

    std::vector<Segment> push(const ControlSample& sample);
    std::vector<Segment> finish();

    bool segment_open() const noexcept { return open_; }
    const std::vector<SegmenterTraceRow>& trace() const noexcept { return trace_; }

private:
    void feed(const ControlSample& sample, std::vector<Segment>& closed);
    void try_open();
    void refit();
    Segment close();

    SegmenterConfig cfg_;
    bool keep_trace_;
    std::size_t next_id_ = 0;

    std::deque<ControlSample> window_;
    bool open_ = false;
    std::vector<ControlSample> members_;
    std::vector<ControlSample> pending_;
    std::size_t streak_ = 0;
    VonMisesEstimate est_;

    std::vector<SegmenterTraceRow> trace_;
};

// Batch convenience over Segmenter.
std::vector<Segment> segment_stream(std::span<const ControlSample> samples, const SegmenterConfig& cfg);

void write_segmenter_trace(std::ostream& out, std::span<const SegmenterTraceRow> rows);

} // namespace afield
