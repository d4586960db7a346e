#include "afield/atlas.hpp"

#include "afield/error.hpp"
#include "json_util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

namespace afield {

using json = nlohmann::ordered_json;

void Atlas::validate() const {
    detail::require(dim >= 1, "atlas dimension must be >= 1");
    std::set<std::size_t> ids;
    for (const auto& l : letters) {
        detail::require(ids.insert(l.id).second, "atlas letter ids must be unique");
        detail::require(l.support >= 1, "letter support must be >= 1");
        detail::require(static_cast<std::size_t>(l.params.x0.size()) == dim, "letter center dimension mismatch");
        l.params.validate();
    }
}

void ClusterConfig::validate() const {
    detail::require(k_max >= 1, "k_max must be >= 1");
    detail::require(restarts >= 1 && max_iters >= 1, "restarts and max_iters must be >= 1");
}

namespace {

struct KMeansFit {
    std::vector<std::size_t> labels;
    std::vector<Point> centers;
    double inertia = std::numeric_limits<double>::infinity();
};

std::size_t nearest(const std::vector<Point>& centers, const Point& p) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.size(); ++c) {
        const double d = (centers[c] - p).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

// Lloyd iterations from a k-means++ seeding.
KMeansFit kmeans_once(std::span<const Point> pts, std::size_t k, std::size_t max_iters, std::mt19937_64& rng) {
    const std::size_t n = pts.size();
    std::vector<Point> centers;
    centers.push_back(pts[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
    std::vector<double> d2(n);
    while (centers.size() < k) {
        for (std::size_t i = 0; i < n; ++i) d2[i] = (pts[i] - centers[nearest(centers, pts[i])]).squaredNorm();
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t pick = 0;
        if (total > 0) {
            double target = std::uniform_real_distribution<double>(0.0, total)(rng);
            for (pick = 0; pick + 1 < n && target >= d2[pick]; ++pick) target -= d2[pick];
        } else {
            pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
        }
        centers.push_back(pts[pick]);
    }

    KMeansFit fit;
    fit.labels.assign(n, 0);
    for (std::size_t it = 0; it < max_iters; ++it) {
        bool changed = it == 0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = nearest(centers, pts[i]);
            if (c != fit.labels[i]) changed = true;
            fit.labels[i] = c;
        }
        std::vector<Point> sums(k, Point::Zero(pts[0].size()));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            sums[fit.labels[i]] += pts[i];
            ++counts[fit.labels[i]];
        }
        for (std::size_t c = 0; c < k; ++c)
            if (counts[c] > 0) centers[c] = sums[c] / static_cast<double>(counts[c]);
        if (!changed) break;
    }
    fit.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) fit.inertia += (pts[i] - centers[fit.labels[i]]).squaredNorm();
    fit.centers = std::move(centers);
    return fit;
}

KMeansFit kmeans(std::span<const Point> pts, std::size_t k, const ClusterConfig& cfg) {
    std::mt19937_64 rng(cfg.seed + 7919 * k);
    KMeansFit best;
    for (std::size_t r = 0; r < cfg.restarts; ++r) {
        auto fit = kmeans_once(pts, k, cfg.max_iters, rng);
        if (fit.inertia < best.inertia) best = std::move(fit);
    }
    return best;
}

} // namespace

double silhouette_score(std::span<const Point> points, std::span<const std::size_t> labels, std::size_t k) {
    detail::require(points.size() == labels.size(), "labels must match points");
    const std::size_t n = points.size();
    if (n < 2 || k < 2) return 0.0;
    std::vector<std::size_t> counts(k, 0);
    for (auto l : labels) ++counts.at(l);

    double total = 0.0;
    std::vector<double> mean_d(k);
    for (std::size_t i = 0; i < n; ++i) {
        if (counts[labels[i]] <= 1) continue; // singleton clusters score 0
        std::fill(mean_d.begin(), mean_d.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) mean_d[labels[j]] += (points[i] - points[j]).norm();
        const double a = mean_d[labels[i]] / static_cast<double>(counts[labels[i]] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c)
            if (c != labels[i] && counts[c] > 0) b = std::min(b, mean_d[c] / static_cast<double>(counts[c]));
        if (!std::isfinite(b)) continue;
        const double denom = std::max(a, b);
        total += denom > 0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(n);
}

ClusterResult cluster_attractors(std::span<const SwitchingField> estimates, const ClusterConfig& cfg) {
    cfg.validate();
    detail::require(!estimates.empty(), "cluster_attractors needs at least one estimate");
    const std::size_t n = estimates.size();
    const std::size_t dim = static_cast<std::size_t>(estimates.front().near.x0.size());
    std::vector<Point> centers;
    centers.reserve(n);
    for (const auto& e : estimates) {
        detail::require(static_cast<std::size_t>(e.near.x0.size()) == dim, "estimates must share a dimension");
        centers.push_back(e.near.x0);
    }

    ClusterResult result;
    const std::size_t k_hi = std::min(cfg.k_max, n);
    result.silhouette.assign(k_hi + 1, 0.0);
    std::size_t best_k = 1;
    double best_s = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> labels(n, 0);
    for (std::size_t k = 2; k <= k_hi && k < n; ++k) {
        const auto fit = kmeans(centers, k, cfg);
        const double s = silhouette_score(centers, fit.labels, k);
        result.silhouette[k] = s;
        if (s > best_s) {
            best_s = s;
            best_k = k;
            labels = fit.labels;
        }
    }
    if (best_s < cfg.silhouette_floor) {
        best_k = 1;
        std::fill(labels.begin(), labels.end(), 0);
    }

    // Merge members per cluster (plain mean), then number letters by center.
    std::vector<AttractorLetter> merged(best_k);
    for (std::size_t c = 0; c < best_k; ++c) {
        auto& l = merged[c];
        l.params.x0 = Point::Zero(static_cast<Eigen::Index>(dim));
    }
    for (std::size_t i = 0; i < n; ++i) {
        auto& l = merged[labels[i]];
        const auto& e = estimates[i];
        l.params.beta += e.near.beta;
        l.params.alpha += e.near.alpha;
        l.params.x0 += e.near.x0;
        l.params.sigma += e.near.sigma;
        l.far.mu_log += e.far.mu_log;
        l.far.sigma_far += e.far.sigma_far;
        l.r_switch += e.r_switch;
        ++l.support;
    }
    std::vector<std::size_t> order;
    for (std::size_t c = 0; c < best_k; ++c) {
        auto& l = merged[c];
        if (l.support == 0) continue;
        const double p = static_cast<double>(l.support);
        l.params.beta /= p;
        l.params.alpha /= p;
        l.params.x0 /= p;
        l.params.sigma /= p;
        l.far.mu_log /= p;
        l.far.sigma_far /= p;
        l.r_switch /= p;
        order.push_back(c);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& xa = merged[a].params.x0;
        const auto& xb = merged[b].params.x0;
        return std::lexicographical_compare(xa.data(), xa.data() + xa.size(), xb.data(), xb.data() + xb.size());
    });
    std::vector<std::size_t> relabel(best_k, 0);
    for (std::size_t i = 0; i < order.size(); ++i) {
        relabel[order[i]] = i;
        merged[order[i]].id = i;
        result.atlas.letters.push_back(merged[order[i]]);
    }
    result.atlas.dim = dim;
    result.k = result.atlas.letters.size();
    result.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) result.labels[i] = relabel[labels[i]];
    return result;
}

FilterState BankModel::predict(const FilterState& state) const {
    auto out = predict_rw(state, cfg);
    out.mean += cfg.control_map() * eval_field(field, state.position());
    return out;
}

std::vector<BankModel> build_filter_bank(const Atlas& atlas, const FilterConfig& cfg) {
    cfg.validate();
    detail::require(!atlas.letters.empty(), "filter bank needs a non-empty atlas");
    detail::require(atlas.dim == cfg.n, "atlas dimension does not match filter config");
    std::vector<BankModel> bank;
    bank.reserve(atlas.letters.size());
    for (const auto& l : atlas.letters) bank.push_back(BankModel{l.id, cfg, l.field()});
    return bank;
}

std::vector<Innovation> augmented_innovation(const BankModel& model, const Trajectory& t) {
    detail::require(t.size() >= 2, "augmented_innovation needs at least 2 observations");
    detail::require(t.dim() == model.cfg.n, "trajectory dimension does not match model");
    std::vector<Innovation> out;
    out.reserve(t.size() - 1);
    auto state = FilterState::initial(t.observations.front().z, model.cfg);
    for (std::size_t i = 1; i < t.size(); ++i) {
        const auto predicted = model.predict(state);
        auto inn = innovate(predicted, t.observations[i].z, model.cfg, t.observations[i].k);
        state = update(predicted, inn, model.cfg);
        out.push_back(std::move(inn));
    }
    return out;
}

double Raster::x(std::size_t col) const {
    return bounds.lo[0] + (bounds.hi[0] - bounds.lo[0]) * static_cast<double>(col) / static_cast<double>(resolution - 1);
}

double Raster::y(std::size_t row) const {
    return bounds.lo[1] + (bounds.hi[1] - bounds.lo[1]) * static_cast<double>(row) / static_cast<double>(resolution - 1);
}

Raster rasterize_field_map(const Atlas& atlas, const Box& bounds, std::size_t resolution) {
    detail::require(resolution >= 2, "raster resolution must be >= 2");
    detail::require(bounds.dim() == 2, "raster bounds must be 2-D");
    bounds.validate();
    detail::require(atlas.letters.empty() || atlas.dim >= 2, "raster needs an atlas of dimension >= 2");

    Raster r;
    r.bounds = bounds;
    r.resolution = resolution;
    r.values.assign(resolution * resolution, 0.0);
    for (std::size_t row = 0; row < resolution; ++row) {
        const double y = r.y(row);
        for (std::size_t col = 0; col < resolution; ++col) {
            const double x = r.x(col);
            double v = 0.0;
            for (const auto& l : atlas.letters) {
                const double dx = x - l.params.x0[0];
                const double dy = y - l.params.x0[1];
                v += l.params.alpha * std::exp(-(dx * dx + dy * dy) / (l.params.sigma * l.params.sigma));
            }
            r.values[row * resolution + col] = v;
        }
    }
    return r;
}

void write_raster_csv(std::ostream& out, const Raster& r) {
    out << "row,col,x,y,intensity\n";
    for (std::size_t row = 0; row < r.resolution; ++row)
        for (std::size_t col = 0; col < r.resolution; ++col)
            out << row << ',' << col << ',' << format_double(r.x(col)) << ',' << format_double(r.y(row)) << ','
                << format_double(r.at(row, col)) << '\n';
}

std::string raster_sidecar_json(const Raster& r) {
    json j;
    j["bounds"] = json::array({jsonio::from_point(r.bounds.lo), jsonio::from_point(r.bounds.hi)});
    j["resolution"] = r.resolution;
    j["rows"] = r.resolution;
    j["cols"] = r.resolution;
    j["layout"] = "row-major; row indexes x2, col indexes x1";
    return j.dump(2) + "\n";
}

Atlas parse_atlas_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("atlas JSON: ") + e.what(), 0);
    }
    try {
        Atlas a;
        a.dim = j.at("dim").get<std::size_t>();
        for (const auto& l : j.at("letters")) {
            AttractorLetter letter;
            letter.id = l.at("id").get<std::size_t>();
            letter.params.beta = l.at("beta").get<double>();
            letter.params.alpha = l.at("alpha").get<double>();
            letter.params.x0 = jsonio::to_point(l.at("x0"));
            letter.params.sigma = l.at("sigma").get<double>();
            letter.far.mu_log = l.at("mu_log").get<double>();
            letter.far.sigma_far = l.at("sigma_far").get<double>();
            letter.r_switch = l.at("r_switch").get<double>();
            letter.support = l.at("support").get<std::size_t>();
            a.letters.push_back(std::move(letter));
        }
        a.validate();
        return a;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("atlas JSON: ") + e.what());
    } catch (const ContractViolation& e) {
        throw SchemaError(std::string("atlas JSON: ") + e.what());
    }
}

std::string atlas_to_json(const Atlas& atlas) {
    json j;
    j["dim"] = atlas.dim;
    j["letters"] = json::array();
    for (const auto& l : atlas.letters) {
        j["letters"].push_back({{"id", l.id},
                                {"beta", l.params.beta},
                                {"alpha", l.params.alpha},
                                {"x0", jsonio::from_point(l.params.x0)},
                                {"sigma", l.params.sigma},
                                {"mu_log", l.far.mu_log},
                                {"sigma_far", l.far.sigma_far},
                                {"r_switch", l.r_switch},
                                {"support", l.support}});
    }
    return j.dump(2) + "\n";
}

} // namespace afield
