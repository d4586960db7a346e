#pragma once

#include "afield/atlas.hpp"
#include "afield/field_fitter.hpp"
#include "afield/rw_filter.hpp"
#include "afield/segmenter.hpp"
#include "afield/synthetic.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace afield {

struct LearnConfig {
    FilterConfig filter;
    SegmenterConfig segmenter;
    FitterConfig fitter;
    ClusterConfig cluster;
    bool keep_traces = false;
};

struct TrajectoryTrace {
    std::string traj_id;
    std::vector<SegmenterTraceRow> segmenter;
};

struct LearnResult {
    Atlas atlas;
    std::vector<SegmentEstimate> estimates;
    std::size_t n_segments = 0;
    std::size_t chosen_k = 0;
    std::vector<double> silhouette;
    std::vector<std::size_t> labels;
    std::vector<TrajectoryTrace> traces;
    std::vector<std::string> warnings;
};

// Random-walk filter -> segmentation -> phase split and near-field fit per
// segment -> k-means merge. Trajectories are processed in input order.
LearnResult learn(std::span<const Trajectory> trajectories, const LearnConfig& cfg);

// Per-segment field estimates of one trajectory (no merging).
std::vector<SegmentEstimate> estimate_trajectory(const Trajectory& t, const LearnConfig& cfg,
                                                 TrajectoryTrace* trace = nullptr);

struct AttractorMatch {
    std::size_t attractor = 0;
    std::size_t letter = 0;
    Eigen::VectorXd d_x0; // |letter - truth| per axis
    double d_x0_norm = 0.0;
    double d_beta = 0.0;
    double d_sigma2 = 0.0;
};

struct AtlasEvaluation {
    std::vector<AttractorMatch> matches;
    std::vector<std::size_t> unmatched_letters;
    std::vector<std::size_t> unmatched_attractors;
};

struct EvaluationReport {
    std::vector<AtlasEvaluation> atlases;
    // Normalized error across the given atlases (one per noise level); empty
    // when some attractor is unmatched in some atlas.
    std::vector<double> epsilon;
};

// Parameter vector compared against ground truth: [x0..., beta, sigma^2].
Eigen::VectorXd comparison_vector(const NearFieldParams& p);

// Greedy nearest-center matching of letters to attractors (closest pair first).
AtlasEvaluation match_atlas(const Atlas& atlas, const Scenario& truth);

EvaluationReport evaluate(std::span<const Atlas> atlases, const Scenario& truth);

std::string evaluation_to_json(const EvaluationReport& report);

} // namespace afield
