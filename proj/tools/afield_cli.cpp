// Command-line front end: simulate, learn, evaluate, render.

#include "afield/afield.h"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

enum Exit { kOk = 0, kUnexpected = 1, kUsage = 2, kIo = 3, kNumerical = 4 };

struct Failure {
    int code;
};

int exit_code(afield_status s) {
    switch (s) {
    case AFIELD_OK: return kOk;
    case AFIELD_ERR_INVALID_ARGUMENT:
    case AFIELD_ERR_PARSE:
    case AFIELD_ERR_SCHEMA:
    case AFIELD_ERR_INSUFFICIENT_DATA: return kUsage;
    case AFIELD_ERR_IO: return kIo;
    case AFIELD_ERR_NUMERICAL: return kNumerical;
    case AFIELD_ERR_INTERNAL: break;
    }
    return kUnexpected;
}

void check(afield_status s, const char* context) {
    if (s == AFIELD_OK) return;
    std::fprintf(stderr, "error: %s: %s (%s)\n", context, afield_last_error(), afield_status_name(s));
    throw Failure{exit_code(s)};
}

[[noreturn]] void usage_error(const std::string& msg) {
    std::fprintf(stderr, "error: %s\n", msg.c_str());
    throw Failure{kUsage};
}

template <class T, void (*Free)(T*)>
struct Deleter {
    void operator()(T* p) const { Free(p); }
};
using ScenarioPtr = std::unique_ptr<afield_scenario, Deleter<afield_scenario, afield_scenario_free>>;
using DatasetPtr = std::unique_ptr<afield_dataset, Deleter<afield_dataset, afield_dataset_free>>;
using ResultPtr = std::unique_ptr<afield_learn_result, Deleter<afield_learn_result, afield_learn_result_free>>;
using AtlasPtr = std::unique_ptr<afield_atlas, Deleter<afield_atlas, afield_atlas_free>>;
using EvalPtr = std::unique_ptr<afield_evaluation, Deleter<afield_evaluation, afield_evaluation_free>>;
using RasterPtr = std::unique_ptr<afield_raster, Deleter<afield_raster, afield_raster_free>>;

struct Shared {
    std::optional<unsigned long long> seed;
    std::string config;
    std::string out;
};

void add_shared(CLI::App* cmd, Shared& s, bool out_required) {
    cmd->add_option("--seed", s.seed, "Random seed");
    cmd->add_option("--config", s.config, "JSON config with per-module sections");
    auto* out = cmd->add_option("--out", s.out, "Output path");
    if (out_required) out->required();
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        std::fprintf(stderr, "error: cannot open %s\n", path.c_str());
        throw Failure{kIo};
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void apply_config(const Shared& s, afield_sim_config* sim, afield_learn_config* learn, afield_render_config* render) {
    if (s.config.empty()) return;
    const auto text = read_text(s.config);
    check(afield_config_apply_json(text.c_str(), sim, learn, render), s.config.c_str());
}

ScenarioPtr load_scenario(const std::string& path) {
    afield_scenario* raw = nullptr;
    if (path.empty())
        check(afield_scenario_default(&raw), "default scenario");
    else
        check(afield_scenario_load(path.c_str(), &raw), path.c_str());
    return ScenarioPtr(raw);
}

AtlasPtr load_atlas(const std::string& path) {
    afield_atlas* raw = nullptr;
    check(afield_atlas_load(path.c_str(), &raw), path.c_str());
    return AtlasPtr(raw);
}

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
    Shared shared;
    std::string scenario;
    std::optional<double> snr;
    std::optional<size_t> n;
    std::optional<size_t> max_steps;
    std::optional<double> arrival_radius;
};

int run_simulate(const SimulateArgs& a) {
    afield_sim_config cfg;
    afield_sim_config_default(&cfg);
    apply_config(a.shared, &cfg, nullptr, nullptr);
    if (a.snr) cfg.snr = *a.snr;
    if (a.n) cfg.n_trajectories = *a.n;
    if (a.max_steps) cfg.max_steps = *a.max_steps;
    if (a.arrival_radius) cfg.arrival_radius = *a.arrival_radius;

    auto scenario = load_scenario(a.scenario);
    check(afield_scenario_set_seed(scenario.get(), *a.shared.seed), "seed");

    afield_dataset* raw = nullptr;
    check(afield_simulate(scenario.get(), &cfg, &raw), "simulate");
    DatasetPtr data(raw);
    check(afield_dataset_save(data.get(), a.shared.out.c_str()), a.shared.out.c_str());
    std::printf("wrote %zu trajectories to %s\n", afield_dataset_size(data.get()), a.shared.out.c_str());
    return kOk;
}

// ---- learn -----------------------------------------------------------------

struct LearnArgs {
    Shared shared;
    std::string input;
    std::string trace_dir;
};

int run_learn(const LearnArgs& a) {
    afield_learn_config cfg;
    afield_learn_config_default(&cfg);
    apply_config(a.shared, nullptr, &cfg, nullptr);
    if (a.shared.seed) cfg.seed = *a.shared.seed;
    cfg.keep_traces = a.trace_dir.empty() ? 0 : 1;

    afield_dataset* raw_data = nullptr;
    check(afield_dataset_load(a.input.c_str(), &raw_data), a.input.c_str());
    DatasetPtr data(raw_data);
    for (size_t i = 0; i < afield_dataset_warning_count(data.get()); ++i)
        std::fprintf(stderr, "warning: %s\n", afield_dataset_warning(data.get(), i));

    afield_learn_result* raw_result = nullptr;
    check(afield_learn(data.get(), &cfg, &raw_result), "learn");
    ResultPtr result(raw_result);
    for (size_t i = 0; i < afield_learn_warning_count(result.get()); ++i)
        std::fprintf(stderr, "warning: %s\n", afield_learn_warning(result.get(), i));

    afield_atlas* raw_atlas = nullptr;
    check(afield_learn_atlas(result.get(), &raw_atlas), "atlas");
    AtlasPtr atlas(raw_atlas);
    check(afield_atlas_save(atlas.get(), a.shared.out.c_str()), a.shared.out.c_str());
    if (!a.trace_dir.empty()) check(afield_learn_write_traces(result.get(), a.trace_dir.c_str()), a.trace_dir.c_str());

    const size_t dim = afield_atlas_dim(atlas.get());
    std::printf("%zu trajectories, %zu segment estimates, %zu letters\n", afield_dataset_size(data.get()),
                afield_learn_segment_count(result.get()), afield_atlas_letter_count(atlas.get()));
    std::printf("%-6s %-24s %-9s %-9s %-9s %s\n", "letter", "x0", "beta", "sigma2", "r_switch", "support");
    std::vector<double> x0(dim);
    for (size_t i = 0; i < afield_atlas_letter_count(atlas.get()); ++i) {
        afield_letter_info info;
        check(afield_atlas_letter(atlas.get(), i, &info), "letter");
        check(afield_atlas_letter_center(atlas.get(), i, x0.data(), dim), "letter");
        std::string center;
        char buf[32];
        for (size_t j = 0; j < dim; ++j) {
            std::snprintf(buf, sizeof buf, "%s%.4f", j ? " " : "", x0[j]);
            center += buf;
        }
        std::printf("%-6zu %-24s %-9.4f %-9.4f %-9.4f %zu\n", info.id, center.c_str(), info.beta,
                    info.sigma * info.sigma, info.r_switch, info.support);
    }
    return kOk;
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateArgs {
    Shared shared;
    std::vector<std::string> atlases;
    std::string scenario;
};

int run_evaluate(const EvaluateArgs& a) {
    apply_config(a.shared, nullptr, nullptr, nullptr);
    auto scenario = load_scenario(a.scenario);
    std::vector<AtlasPtr> owned;
    std::vector<const afield_atlas*> atlases;
    for (const auto& path : a.atlases) {
        owned.push_back(load_atlas(path));
        atlases.push_back(owned.back().get());
    }
    afield_evaluation* raw = nullptr;
    check(afield_evaluate(atlases.data(), atlases.size(), scenario.get(), &raw), "evaluate");
    EvalPtr ev(raw);

    const bool have_eps = afield_evaluation_epsilon_count(ev.get()) == atlases.size();
    for (size_t t = 0; t < atlases.size(); ++t) {
        std::printf("atlas %zu: %s\n", t, a.atlases[t].c_str());
        std::printf("  %-9s %-6s %-10s %-10s %-10s\n", "attractor", "letter", "|dx0|", "|dbeta|", "|dsigma2|");
        for (size_t i = 0; i < afield_evaluation_match_count(ev.get(), t); ++i) {
            afield_match_info m;
            check(afield_evaluation_match(ev.get(), t, i, &m), "match");
            std::printf("  %-9zu %-6zu %-10.4f %-10.4f %-10.4f\n", m.attractor, m.letter, m.d_x0_norm, m.d_beta,
                        m.d_sigma2);
        }
        if (const size_t u = afield_evaluation_unmatched_count(ev.get(), t)) std::printf("  unmatched entries: %zu\n", u);
        if (have_eps) std::printf("  epsilon: %.6f\n", afield_evaluation_epsilon(ev.get(), t));
    }
    if (!have_eps) std::printf("epsilon: unavailable (unmatched attractors)\n");

    if (!a.shared.out.empty()) {
        char* text = nullptr;
        check(afield_evaluation_to_json(ev.get(), &text), "report");
        std::unique_ptr<char, Deleter<char, afield_string_free>> holder(text);
        std::ofstream out(a.shared.out, std::ios::binary | std::ios::trunc);
        out << text;
        if (!out) {
            std::fprintf(stderr, "error: cannot write %s\n", a.shared.out.c_str());
            throw Failure{kIo};
        }
    }
    return kOk;
}

// ---- render ----------------------------------------------------------------

struct RenderArgs {
    Shared shared;
    std::string atlas;
    std::vector<double> bounds;
    std::optional<size_t> resolution;
    std::string sidecar;
};

int run_render(const RenderArgs& a) {
    afield_render_config cfg;
    afield_render_config_default(&cfg);
    apply_config(a.shared, nullptr, nullptr, &cfg);
    if (!a.bounds.empty()) {
        cfg.lo[0] = a.bounds[0];
        cfg.lo[1] = a.bounds[1];
        cfg.hi[0] = a.bounds[2];
        cfg.hi[1] = a.bounds[3];
    }
    if (a.resolution) cfg.resolution = *a.resolution;
    if (cfg.resolution < 2) usage_error("resolution must be at least 2");

    auto atlas = load_atlas(a.atlas);
    afield_raster* raw = nullptr;
    check(afield_render(atlas.get(), &cfg, &raw), "render");
    RasterPtr raster(raw);
    const std::string sidecar = a.sidecar.empty() ? a.shared.out + ".json" : a.sidecar;
    check(afield_raster_save(raster.get(), a.shared.out.c_str(), sidecar.c_str()), a.shared.out.c_str());
    std::printf("wrote %zux%zu raster to %s\n", cfg.resolution, cfg.resolution, a.shared.out.c_str());
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learn attractive velocity fields from trajectories."};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "Generate synthetic trajectories from a scenario");
    add_shared(c_sim, sim.shared, true);
    c_sim->get_option("--seed")->required();
    c_sim->add_option("--scenario", sim.scenario, "Scenario JSON (default: built-in three-attractor layout)");
    c_sim->add_option("--snr", sim.snr, "Signal-to-noise ratio");
    c_sim->add_option("-n,--n-trajectories", sim.n, "Number of trajectories");
    c_sim->add_option("--max-steps", sim.max_steps, "Step cap per trajectory");
    c_sim->add_option("--arrival-radius", sim.arrival_radius, "Goal arrival radius");

    LearnArgs learn;
    auto* c_learn = app.add_subcommand("learn", "Learn an attractor atlas from a trajectory CSV");
    add_shared(c_learn, learn.shared, true);
    c_learn->add_option("input", learn.input, "Trajectory CSV")->required();
    c_learn->add_option("--trace-dir", learn.trace_dir, "Directory for segmenter and fit traces")
        ->check(CLI::ExistingDirectory);

    EvaluateArgs eval;
    auto* c_eval = app.add_subcommand("evaluate", "Compare atlases against a ground-truth scenario");
    add_shared(c_eval, eval.shared, false);
    c_eval->add_option("--atlas", eval.atlases, "Atlas JSON; repeat once per noise level")->required();
    c_eval->add_option("--scenario", eval.scenario, "Scenario JSON (default: built-in three-attractor layout)");

    RenderArgs render;
    auto* c_render = app.add_subcommand("render", "Rasterize an atlas into an intensity map");
    add_shared(c_render, render.shared, true);
    c_render->add_option("atlas", render.atlas, "Atlas JSON")->required();
    c_render->add_option("--bounds", render.bounds, "xmin ymin xmax ymax")->expected(4);
    c_render->add_option("--resolution", render.resolution, "Grid nodes per axis (>= 2)");
    c_render->add_option("--sidecar", render.sidecar, "Sidecar JSON path (default: <out>.json)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (c_sim->parsed()) return run_simulate(sim);
        if (c_learn->parsed()) return run_learn(learn);
        if (c_eval->parsed()) return run_evaluate(eval);
        if (c_render->parsed()) return run_render(render);
    } catch (const Failure& f) {
        return f.code;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUnexpected;
    }
    return kUsage;
}
