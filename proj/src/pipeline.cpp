#include "afield/pipeline.hpp"

#include "afield/error.hpp"
#include "json_util.hpp"

#include <json.hpp>

#include <algorithm>
#include <limits>
#include <tuple>

namespace afield {

using json = nlohmann::ordered_json;

std::vector<SegmentEstimate> estimate_trajectory(const Trajectory& t, const LearnConfig& cfg, TrajectoryTrace* trace) {
    auto filter_cfg = cfg.filter;
    filter_cfg.n = t.dim();
    const auto controls = run_rw_pass(t, filter_cfg);

    Segmenter segmenter(cfg.segmenter, trace != nullptr);
    std::vector<Segment> segments;
    for (const auto& c : controls) {
        auto closed = segmenter.push(c);
        std::move(closed.begin(), closed.end(), std::back_inserter(segments));
    }
    auto tail = segmenter.finish();
    std::move(tail.begin(), tail.end(), std::back_inserter(segments));
    if (trace) {
        trace->traj_id = t.id;
        trace->segmenter = segmenter.trace();
    }

    std::vector<SegmentEstimate> out;
    for (const auto& seg : segments) {
        auto est = estimate_segment_field(seg, cfg.fitter);
        if (!est) continue;
        est->traj_id = t.id;
        out.push_back(std::move(*est));
    }
    return out;
}

LearnResult learn(std::span<const Trajectory> trajectories, const LearnConfig& cfg) {
    cfg.segmenter.validate();
    cfg.fitter.validate();
    cfg.cluster.validate();

    LearnResult result;
    std::size_t dim = 0;
    for (const auto& t : trajectories) {
        if (dim == 0) dim = t.dim();
        if (t.dim() != dim) throw SchemaError("trajectories with mixed dimensions");
    }
    result.atlas.dim = dim == 0 ? cfg.filter.n : dim;

    for (const auto& t : trajectories) {
        TrajectoryTrace trace;
        auto est = estimate_trajectory(t, cfg, cfg.keep_traces ? &trace : nullptr);
        if (cfg.keep_traces) result.traces.push_back(std::move(trace));
        std::move(est.begin(), est.end(), std::back_inserter(result.estimates));
    }
    result.n_segments = result.estimates.size();

    if (result.estimates.empty()) {
        result.warnings.push_back("no segment with a near-range phase was found; atlas is empty");
        return result;
    }

    std::vector<SwitchingField> fields;
    fields.reserve(result.estimates.size());
    for (const auto& e : result.estimates) fields.push_back(e.field);
    auto clusters = cluster_attractors(fields, cfg.cluster);
    result.atlas = std::move(clusters.atlas);
    result.chosen_k = clusters.k;
    result.silhouette = std::move(clusters.silhouette);
    result.labels = std::move(clusters.labels);
    return result;
}

Eigen::VectorXd comparison_vector(const NearFieldParams& p) {
    Eigen::VectorXd v(p.x0.size() + 2);
    v.head(p.x0.size()) = p.x0;
    v[p.x0.size()] = p.beta;
    v[p.x0.size() + 1] = p.sigma * p.sigma;
    return v;
}

AtlasEvaluation match_atlas(const Atlas& atlas, const Scenario& truth) {
    std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
    for (std::size_t m = 0; m < truth.attractors.size(); ++m)
        for (std::size_t l = 0; l < atlas.letters.size(); ++l) {
            const auto& x = atlas.letters[l].params.x0;
            const auto& g = truth.attractors[m].near.x0;
            const double d = x.size() == g.size() ? (x - g).norm() : std::numeric_limits<double>::infinity();
            pairs.emplace_back(d, m, l);
        }
    std::sort(pairs.begin(), pairs.end());

    std::vector<bool> used_m(truth.attractors.size(), false);
    std::vector<bool> used_l(atlas.letters.size(), false);
    AtlasEvaluation ev;
    for (const auto& [d, m, l] : pairs) {
        if (used_m[m] || used_l[l] || !std::isfinite(d)) continue;
        used_m[m] = used_l[l] = true;
        const auto& gt = truth.attractors[m].near;
        const auto& est = atlas.letters[l].params;
        AttractorMatch match;
        match.attractor = m;
        match.letter = atlas.letters[l].id;
        match.d_x0 = (est.x0 - gt.x0).cwiseAbs();
        match.d_x0_norm = d;
        match.d_beta = std::abs(est.beta - gt.beta);
        match.d_sigma2 = std::abs(est.sigma * est.sigma - gt.sigma * gt.sigma);
        ev.matches.push_back(std::move(match));
    }
    std::sort(ev.matches.begin(), ev.matches.end(),
              [](const AttractorMatch& a, const AttractorMatch& b) { return a.attractor < b.attractor; });
    for (std::size_t m = 0; m < used_m.size(); ++m)
        if (!used_m[m]) ev.unmatched_attractors.push_back(m);
    for (std::size_t l = 0; l < used_l.size(); ++l)
        if (!used_l[l]) ev.unmatched_letters.push_back(atlas.letters[l].id);
    return ev;
}

EvaluationReport evaluate(std::span<const Atlas> atlases, const Scenario& truth) {
    EvaluationReport report;
    bool complete = !atlases.empty();
    std::vector<std::vector<Eigen::VectorXd>> estimates;
    for (const auto& atlas : atlases) {
        auto ev = match_atlas(atlas, truth);
        if (!ev.unmatched_attractors.empty()) complete = false;
        if (complete) {
            std::vector<Eigen::VectorXd> row(truth.attractors.size());
            for (const auto& m : ev.matches) {
                const auto it = std::find_if(atlas.letters.begin(), atlas.letters.end(),
                                             [&](const AttractorLetter& l) { return l.id == m.letter; });
                row[m.attractor] = comparison_vector(it->params);
            }
            estimates.push_back(std::move(row));
        }
        report.atlases.push_back(std::move(ev));
    }
    if (complete) {
        std::vector<Eigen::VectorXd> gt;
        for (const auto& a : truth.attractors) gt.push_back(comparison_vector(a.near));
        report.epsilon = normalized_error(gt, estimates);
    }
    return report;
}

std::string evaluation_to_json(const EvaluationReport& report) {
    json j;
    j["atlases"] = json::array();
    for (const auto& ev : report.atlases) {
        json a;
        a["matches"] = json::array();
        for (const auto& m : ev.matches)
            a["matches"].push_back({{"attractor", m.attractor},
                                    {"letter", m.letter},
                                    {"d_x0", jsonio::from_point(m.d_x0)},
                                    {"d_x0_norm", m.d_x0_norm},
                                    {"d_beta", m.d_beta},
                                    {"d_sigma2", m.d_sigma2}});
        a["unmatched_letters"] = ev.unmatched_letters;
        a["unmatched_attractors"] = ev.unmatched_attractors;
        j["atlases"].push_back(std::move(a));
    }
    j["epsilon"] = report.epsilon.empty() ? json(nullptr) : json(report.epsilon);
    return j.dump(2) + "\n";
}

} // namespace afield
