#pragma once

#include "afield/field_model.hpp"
#include "afield/rw_filter.hpp"
#include "afield/synthetic.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace afield {

// One merged attractor of the environment vocabulary.
struct AttractorLetter {
    std::size_t id = 0;
    NearFieldParams params;
    FarFieldParams far;
    double r_switch = 0.0;
    std::size_t support = 0;

    SwitchingField field() const { return SwitchingField{params, far, r_switch}; }
};

struct Atlas {
    std::vector<AttractorLetter> letters;
    std::size_t dim = 2;

    void validate() const;
};

struct ClusterConfig {
    std::size_t k_max = 8;
    std::size_t restarts = 20;
    std::size_t max_iters = 100;
    double silhouette_floor = 0.25;
    std::uint64_t seed = 1;

    void validate() const;
};

struct ClusterResult {
    Atlas atlas;
    std::size_t k = 0;
    // silhouette[k] for k = 2..k_max tried; silhouette[0] and [1] are unused.
    std::vector<double> silhouette;
    // Letter id assigned to each input estimate.
    std::vector<std::size_t> labels;
};

// k-means on field centers with k picked by the best mean silhouette (k = 1
// when every silhouette is below the floor). Each letter is the unweighted
// mean of its members' parameters. Letters are numbered in lexicographic
// order of their centers.
ClusterResult cluster_attractors(std::span<const SwitchingField> estimates, const ClusterConfig& cfg);

// Mean silhouette of a labelling of `points` into k clusters.
double silhouette_score(std::span<const Point> points, std::span<const std::size_t> labels, std::size_t k);

// Kalman model whose prediction adds the letter's field as a control input:
// X_{k+1} = F X_k + B G(position).
struct BankModel {
    std::size_t letter_ref = 0;
    FilterConfig cfg;
    SwitchingField field;

    FilterState predict(const FilterState& state) const;
};

std::vector<BankModel> build_filter_bank(const Atlas& atlas, const FilterConfig& cfg);

// Innovation sequence of the augmented filter over t (one per observation
// after the first).
std::vector<Innovation> augmented_innovation(const BankModel& model, const Trajectory& t);

// Row-major intensity grid over a 2-D box. Node (row, col) sits at
// x = lo.x + col * dx, y = lo.y + row * dy.
struct Raster {
    Box bounds;
    std::size_t resolution = 0;
    std::vector<double> values;

    double x(std::size_t col) const;
    double y(std::size_t row) const;
    double at(std::size_t row, std::size_t col) const { return values[row * resolution + col]; }
};

// Sum over letters of alpha * exp(-r^2 / sigma^2), with r measured in the
// plane of the first two axes.
Raster rasterize_field_map(const Atlas& atlas, const Box& bounds, std::size_t resolution);

void write_raster_csv(std::ostream& out, const Raster& r);
std::string raster_sidecar_json(const Raster& r);

Atlas parse_atlas_json(const std::string& text);
std::string atlas_to_json(const Atlas& atlas);

} // namespace afield
