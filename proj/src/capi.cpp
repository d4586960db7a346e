#include "afield/afield.h"

#include "afield/error.hpp"
#include "afield/pipeline.hpp"

#include <json.hpp>

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>

struct afield_scenario {
    afield::Scenario s;
};

struct afield_dataset {
    std::vector<afield::Trajectory> trajectories;
    std::vector<std::string> warnings;
};

struct afield_learn_result {
    afield::LearnResult r;
};

struct afield_atlas {
    afield::Atlas a;
};

struct afield_evaluation {
    afield::EvaluationReport e;
};

struct afield_raster {
    afield::Raster r;
};

namespace {

thread_local std::string g_last_error;

afield_status fail(afield_status status, const std::string& msg) {
    g_last_error = msg;
    return status;
}

// Runs `body`, translating library exceptions into status codes.
template <class F>
afield_status guarded(F&& body) {
    try {
        body();
        return AFIELD_OK;
    } catch (const afield::ParseError& e) {
        return fail(AFIELD_ERR_PARSE, e.what());
    } catch (const afield::SchemaError& e) {
        return fail(AFIELD_ERR_SCHEMA, e.what());
    } catch (const afield::ContractViolation& e) {
        return fail(AFIELD_ERR_INVALID_ARGUMENT, e.what());
    } catch (const afield::IoError& e) {
        return fail(AFIELD_ERR_IO, e.what());
    } catch (const afield::NumericalError& e) {
        return fail(AFIELD_ERR_NUMERICAL, e.what());
    } catch (const afield::InsufficientData& e) {
        return fail(AFIELD_ERR_INSUFFICIENT_DATA, e.what());
    } catch (const nlohmann::json::parse_error& e) {
        return fail(AFIELD_ERR_PARSE, e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(AFIELD_ERR_SCHEMA, e.what());
    } catch (const std::bad_alloc&) {
        return fail(AFIELD_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(AFIELD_ERR_INTERNAL, e.what());
    }
}

void need(const void* p, const char* what) {
    if (!p) throw afield::ContractViolation(std::string(what) + " must not be null");
}

std::string read_file(const char* path) {
    need(path, "path");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw afield::IoError(std::string("cannot open ") + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw afield::IoError(std::string("cannot read ") + path);
    return ss.str();
}

void write_file(const char* path, const std::string& content) {
    need(path, "path");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw afield::IoError(std::string("cannot open ") + path + " for writing");
    out << content;
    out.flush();
    if (!out) throw afield::IoError(std::string("cannot write ") + path);
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

afield::LearnConfig to_learn_config(const afield_learn_config& c) {
    afield::LearnConfig cfg;
    cfg.filter.q_pos = c.q_pos;
    cfg.filter.q_vel = c.q_vel;
    cfg.filter.r_meas = c.r_meas;
    cfg.filter.p0 = c.p0;
    cfg.filter.dk = c.dk;
    cfg.segmenter.a = c.window;
    cfg.segmenter.theta_dev = c.theta_dev;
    cfg.segmenter.d_theta = c.d_theta;
    cfg.segmenter.n_theta = c.n_theta;
    cfg.segmenter.cdf_threshold = c.cdf_threshold;
    cfg.fitter.learning_rate_x0 = c.learning_rate_x0;
    cfg.fitter.learning_rate_sigma = c.learning_rate_sigma;
    cfg.fitter.max_iters = c.max_iters;
    cfg.fitter.grad_tol = c.grad_tol;
    cfg.fitter.dk_switch = c.dk_switch;
    cfg.fitter.sigma_init = c.sigma_init;
    cfg.fitter.r0_init = c.r0_init;
    cfg.fitter.step_growth = c.step_growth;
    cfg.fitter.j_rel_tol = c.j_rel_tol;
    cfg.fitter.max_fusion_ratio = c.max_fusion_ratio;
    cfg.cluster.k_max = c.k_max;
    cfg.cluster.restarts = c.restarts;
    cfg.cluster.max_iters = c.cluster_max_iters;
    cfg.cluster.silhouette_floor = c.silhouette_floor;
    cfg.cluster.seed = c.seed;
    cfg.keep_traces = c.keep_traces != 0;
    return cfg;
}

afield::SimConfig to_sim_config(const afield_sim_config& c) {
    afield::SimConfig cfg;
    cfg.snr = c.snr;
    cfg.n_trajectories = c.n_trajectories;
    cfg.max_steps = c.max_steps;
    cfg.arrival_radius = c.arrival_radius;
    return cfg;
}

using json = nlohmann::json;
using Setter = std::function<void(const json&)>;

Setter real(double& dst) {
    return [&dst](const json& v) {
        if (!v.is_number()) throw afield::SchemaError("expected a number");
        dst = v.get<double>();
    };
}

Setter count(size_t& dst) {
    return [&dst](const json& v) {
        if (!v.is_number_unsigned()) throw afield::SchemaError("expected a non-negative integer");
        dst = v.get<size_t>();
    };
}

Setter seed(uint64_t& dst) {
    return [&dst](const json& v) {
        if (!v.is_number_unsigned()) throw afield::SchemaError("expected a non-negative integer");
        dst = v.get<uint64_t>();
    };
}

Setter pair(double (&dst)[2]) {
    return [&dst](const json& v) {
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            throw afield::SchemaError("expected [x, y]");
        dst[0] = v[0].get<double>();
        dst[1] = v[1].get<double>();
    };
}

void apply_section(const json& doc, const char* name, const std::map<std::string, Setter>& fields) {
    if (!doc.contains(name)) return;
    const auto& sec = doc.at(name);
    if (!sec.is_object()) throw afield::SchemaError(std::string("config section '") + name + "' must be an object");
    for (const auto& [key, value] : sec.items()) {
        const auto it = fields.find(key);
        if (it == fields.end()) throw afield::SchemaError(std::string("unknown config key ") + name + "." + key);
        try {
            it->second(value);
        } catch (const afield::SchemaError& e) {
            throw afield::SchemaError(std::string("config key ") + name + "." + key + ": " + e.what());
        }
    }
}

std::string safe_name(const std::string& id) {
    std::string out = id;
    for (auto& c : out) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                        c == '_' || c == '.';
        if (!ok) c = '_';
    }
    return out.empty() ? "_" : out;
}

} // namespace

extern "C" {

const char* afield_last_error(void) { return g_last_error.c_str(); }

const char* afield_status_name(afield_status status) {
    switch (status) {
    case AFIELD_OK: return "ok";
    case AFIELD_ERR_INVALID_ARGUMENT: return "invalid argument";
    case AFIELD_ERR_PARSE: return "parse error";
    case AFIELD_ERR_SCHEMA: return "schema error";
    case AFIELD_ERR_IO: return "i/o error";
    case AFIELD_ERR_NUMERICAL: return "numerical failure";
    case AFIELD_ERR_INSUFFICIENT_DATA: return "insufficient data";
    case AFIELD_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

void afield_string_free(char* s) { std::free(s); }

void afield_sim_config_default(afield_sim_config* cfg) {
    if (!cfg) return;
    const afield::SimConfig d;
    cfg->snr = d.snr;
    cfg->n_trajectories = d.n_trajectories;
    cfg->max_steps = d.max_steps;
    cfg->arrival_radius = d.arrival_radius;
}

void afield_learn_config_default(afield_learn_config* cfg) {
    if (!cfg) return;
    const afield::LearnConfig d;
    cfg->q_pos = d.filter.q_pos;
    cfg->q_vel = d.filter.q_vel;
    cfg->r_meas = d.filter.r_meas;
    cfg->p0 = d.filter.p0;
    cfg->dk = d.filter.dk;
    cfg->window = d.segmenter.a;
    cfg->theta_dev = d.segmenter.theta_dev;
    cfg->d_theta = d.segmenter.d_theta;
    cfg->n_theta = d.segmenter.n_theta;
    cfg->cdf_threshold = d.segmenter.cdf_threshold;
    cfg->learning_rate_x0 = d.fitter.learning_rate_x0;
    cfg->learning_rate_sigma = d.fitter.learning_rate_sigma;
    cfg->max_iters = d.fitter.max_iters;
    cfg->grad_tol = d.fitter.grad_tol;
    cfg->dk_switch = d.fitter.dk_switch;
    cfg->sigma_init = d.fitter.sigma_init;
    cfg->r0_init = d.fitter.r0_init;
    cfg->step_growth = d.fitter.step_growth;
    cfg->j_rel_tol = d.fitter.j_rel_tol;
    cfg->max_fusion_ratio = d.fitter.max_fusion_ratio;
    cfg->k_max = d.cluster.k_max;
    cfg->restarts = d.cluster.restarts;
    cfg->cluster_max_iters = d.cluster.max_iters;
    cfg->silhouette_floor = d.cluster.silhouette_floor;
    cfg->seed = d.cluster.seed;
    cfg->keep_traces = d.keep_traces ? 1 : 0;
}

void afield_render_config_default(afield_render_config* cfg) {
    if (!cfg) return;
    cfg->lo[0] = cfg->lo[1] = -1.0;
    cfg->hi[0] = cfg->hi[1] = 1.0;
    cfg->resolution = 100;
}

afield_status afield_config_apply_json(const char* json_text, afield_sim_config* sim, afield_learn_config* learn,
                                       afield_render_config* render) {
    return guarded([&] {
        need(json_text, "json_text");
        const auto doc = json::parse(json_text);
        if (!doc.is_object()) throw afield::SchemaError("config must be a JSON object");
        static const char* const kSections[] = {"simulate", "filter", "segmenter", "fitter", "cluster", "render"};
        for (const auto& [key, value] : doc.items()) {
            bool known = false;
            for (const char* s : kSections) known = known || key == s;
            if (!known) throw afield::SchemaError("unknown config section " + key);
        }
        // Work on copies so a rejected document leaves the caller's structs alone.
        afield_sim_config s{};
        afield_learn_config l{};
        afield_render_config r{};
        if (sim) s = *sim;
        if (learn) l = *learn;
        if (render) r = *render;
        if (sim)
            apply_section(doc, "simulate",
                          {{"snr", real(s.snr)},
                           {"n_trajectories", count(s.n_trajectories)},
                           {"max_steps", count(s.max_steps)},
                           {"arrival_radius", real(s.arrival_radius)}});
        if (learn) {
            apply_section(doc, "filter",
                          {{"q_pos", real(l.q_pos)},
                           {"q_vel", real(l.q_vel)},
                           {"r_meas", real(l.r_meas)},
                           {"p0", real(l.p0)},
                           {"dk", real(l.dk)}});
            apply_section(doc, "segmenter",
                          {{"a", count(l.window)},
                           {"theta_dev", real(l.theta_dev)},
                           {"d_theta", real(l.d_theta)},
                           {"n_theta", count(l.n_theta)},
                           {"cdf_threshold", real(l.cdf_threshold)}});
            apply_section(doc, "fitter",
                          {{"learning_rate_x0", real(l.learning_rate_x0)},
                           {"learning_rate_sigma", real(l.learning_rate_sigma)},
                           {"max_iters", count(l.max_iters)},
                           {"grad_tol", real(l.grad_tol)},
                           {"dk_switch", count(l.dk_switch)},
                           {"sigma_init", real(l.sigma_init)},
                           {"r0_init", real(l.r0_init)},
                           {"step_growth", real(l.step_growth)},
                           {"j_rel_tol", real(l.j_rel_tol)},
                           {"max_fusion_ratio", real(l.max_fusion_ratio)}});
            apply_section(doc, "cluster",
                          {{"k_max", count(l.k_max)},
                           {"restarts", count(l.restarts)},
                           {"max_iters", count(l.cluster_max_iters)},
                           {"silhouette_floor", real(l.silhouette_floor)},
                           {"seed", seed(l.seed)}});
        }
        if (render)
            apply_section(doc, "render", {{"lo", pair(r.lo)}, {"hi", pair(r.hi)}, {"resolution", count(r.resolution)}});
        if (sim) *sim = s;
        if (learn) *learn = l;
        if (render) *render = r;
    });
}

afield_status afield_scenario_default(afield_scenario** out) {
    return guarded([&] {
        need(out, "out");
        *out = new afield_scenario{afield::default_scenario()};
    });
}

afield_status afield_scenario_from_json(const char* json_text, afield_scenario** out) {
    return guarded([&] {
        need(json_text, "json_text");
        need(out, "out");
        *out = new afield_scenario{afield::parse_scenario_json(json_text)};
    });
}

afield_status afield_scenario_load(const char* path, afield_scenario** out) {
    return guarded([&] {
        need(out, "out");
        *out = new afield_scenario{afield::parse_scenario_json(read_file(path))};
    });
}

afield_status afield_scenario_to_json(const afield_scenario* s, char** out) {
    return guarded([&] {
        need(s, "scenario");
        need(out, "out");
        *out = dup_string(afield::scenario_to_json(s->s));
    });
}

afield_status afield_scenario_set_seed(afield_scenario* s, uint64_t seed_value) {
    return guarded([&] {
        need(s, "scenario");
        s->s.seed = seed_value;
    });
}

size_t afield_scenario_attractor_count(const afield_scenario* s) { return s ? s->s.attractors.size() : 0; }

void afield_scenario_free(afield_scenario* s) { delete s; }

afield_status afield_simulate(const afield_scenario* s, const afield_sim_config* cfg, afield_dataset** out) {
    return guarded([&] {
        need(s, "scenario");
        need(cfg, "config");
        need(out, "out");
        *out = new afield_dataset{afield::generate_dataset(s->s, to_sim_config(*cfg)), {}};
    });
}

afield_status afield_dataset_load(const char* path, afield_dataset** out) {
    return guarded([&] {
        need(out, "out");
        std::istringstream in(read_file(path));
        auto parsed = afield::parse_trajectories(in);
        *out = new afield_dataset{std::move(parsed.trajectories), std::move(parsed.warnings)};
    });
}

afield_status afield_dataset_save(const afield_dataset* d, const char* path) {
    return guarded([&] {
        need(d, "dataset");
        std::ostringstream ss;
        afield::write_trajectories(ss, d->trajectories);
        write_file(path, ss.str());
    });
}

size_t afield_dataset_size(const afield_dataset* d) { return d ? d->trajectories.size() : 0; }

size_t afield_dataset_warning_count(const afield_dataset* d) { return d ? d->warnings.size() : 0; }

const char* afield_dataset_warning(const afield_dataset* d, size_t i) {
    return d && i < d->warnings.size() ? d->warnings[i].c_str() : nullptr;
}

void afield_dataset_free(afield_dataset* d) { delete d; }

afield_status afield_learn(const afield_dataset* d, const afield_learn_config* cfg, afield_learn_result** out) {
    return guarded([&] {
        need(d, "dataset");
        need(cfg, "config");
        need(out, "out");
        *out = new afield_learn_result{afield::learn(d->trajectories, to_learn_config(*cfg))};
    });
}

size_t afield_learn_segment_count(const afield_learn_result* r) { return r ? r->r.n_segments : 0; }

size_t afield_learn_chosen_k(const afield_learn_result* r) { return r ? r->r.chosen_k : 0; }

size_t afield_learn_warning_count(const afield_learn_result* r) { return r ? r->r.warnings.size() : 0; }

const char* afield_learn_warning(const afield_learn_result* r, size_t i) {
    return r && i < r->r.warnings.size() ? r->r.warnings[i].c_str() : nullptr;
}

afield_status afield_learn_atlas(const afield_learn_result* r, afield_atlas** out) {
    return guarded([&] {
        need(r, "result");
        need(out, "out");
        *out = new afield_atlas{r->r.atlas};
    });
}

afield_status afield_learn_write_traces(const afield_learn_result* r, const char* dir) {
    return guarded([&] {
        need(r, "result");
        need(dir, "dir");
        const std::string base = std::string(dir) + "/";
        for (const auto& t : r->r.traces) {
            std::ostringstream ss;
            afield::write_segmenter_trace(ss, t.segmenter);
            write_file((base + "segmenter_" + safe_name(t.traj_id) + ".csv").c_str(), ss.str());
        }
        if (r->r.traces.empty() && !r->r.estimates.empty())
            throw afield::ContractViolation("traces were not kept; set keep_traces before learning");
        for (const auto& e : r->r.estimates) {
            std::ostringstream ss;
            afield::write_fit_trace(ss, e.iterations);
            write_file((base + "fit_" + safe_name(e.traj_id) + "_" + std::to_string(e.segment) + ".csv").c_str(),
                       ss.str());
        }
    });
}

void afield_learn_result_free(afield_learn_result* r) { delete r; }

afield_status afield_atlas_from_json(const char* json_text, afield_atlas** out) {
    return guarded([&] {
        need(json_text, "json_text");
        need(out, "out");
        *out = new afield_atlas{afield::parse_atlas_json(json_text)};
    });
}

afield_status afield_atlas_load(const char* path, afield_atlas** out) {
    return guarded([&] {
        need(out, "out");
        *out = new afield_atlas{afield::parse_atlas_json(read_file(path))};
    });
}

afield_status afield_atlas_save(const afield_atlas* a, const char* path) {
    return guarded([&] {
        need(a, "atlas");
        write_file(path, afield::atlas_to_json(a->a));
    });
}

afield_status afield_atlas_to_json(const afield_atlas* a, char** out) {
    return guarded([&] {
        need(a, "atlas");
        need(out, "out");
        *out = dup_string(afield::atlas_to_json(a->a));
    });
}

size_t afield_atlas_dim(const afield_atlas* a) { return a ? a->a.dim : 0; }

size_t afield_atlas_letter_count(const afield_atlas* a) { return a ? a->a.letters.size() : 0; }

afield_status afield_atlas_letter(const afield_atlas* a, size_t i, afield_letter_info* info) {
    return guarded([&] {
        need(a, "atlas");
        need(info, "info");
        afield::detail::require(i < a->a.letters.size(), "letter index out of range");
        const auto& l = a->a.letters[i];
        info->id = l.id;
        info->beta = l.params.beta;
        info->alpha = l.params.alpha;
        info->sigma = l.params.sigma;
        info->mu_log = l.far.mu_log;
        info->sigma_far = l.far.sigma_far;
        info->r_switch = l.r_switch;
        info->support = l.support;
    });
}

afield_status afield_atlas_letter_center(const afield_atlas* a, size_t i, double* x0, size_t dim) {
    return guarded([&] {
        need(a, "atlas");
        need(x0, "x0");
        afield::detail::require(i < a->a.letters.size(), "letter index out of range");
        const auto& c = a->a.letters[i].params.x0;
        afield::detail::require(dim == static_cast<size_t>(c.size()), "center buffer size does not match atlas dim");
        for (size_t j = 0; j < dim; ++j) x0[j] = c[static_cast<Eigen::Index>(j)];
    });
}

void afield_atlas_free(afield_atlas* a) { delete a; }

afield_status afield_evaluate(const afield_atlas* const* atlases, size_t n_atlases, const afield_scenario* truth,
                              afield_evaluation** out) {
    return guarded([&] {
        need(truth, "scenario");
        need(out, "out");
        afield::detail::require(n_atlases == 0 || atlases != nullptr, "atlases must not be null");
        std::vector<afield::Atlas> list;
        list.reserve(n_atlases);
        for (size_t i = 0; i < n_atlases; ++i) {
            need(atlases[i], "atlas");
            list.push_back(atlases[i]->a);
        }
        *out = new afield_evaluation{afield::evaluate(list, truth->s)};
    });
}

size_t afield_evaluation_match_count(const afield_evaluation* e, size_t atlas) {
    return e && atlas < e->e.atlases.size() ? e->e.atlases[atlas].matches.size() : 0;
}

afield_status afield_evaluation_match(const afield_evaluation* e, size_t atlas, size_t i, afield_match_info* info) {
    return guarded([&] {
        need(e, "evaluation");
        need(info, "info");
        afield::detail::require(atlas < e->e.atlases.size(), "atlas index out of range");
        const auto& matches = e->e.atlases[atlas].matches;
        afield::detail::require(i < matches.size(), "match index out of range");
        const auto& m = matches[i];
        info->attractor = m.attractor;
        info->letter = m.letter;
        info->d_x0_norm = m.d_x0_norm;
        info->d_beta = m.d_beta;
        info->d_sigma2 = m.d_sigma2;
    });
}

size_t afield_evaluation_unmatched_count(const afield_evaluation* e, size_t atlas) {
    if (!e || atlas >= e->e.atlases.size()) return 0;
    const auto& a = e->e.atlases[atlas];
    return a.unmatched_attractors.size() + a.unmatched_letters.size();
}

size_t afield_evaluation_epsilon_count(const afield_evaluation* e) { return e ? e->e.epsilon.size() : 0; }

double afield_evaluation_epsilon(const afield_evaluation* e, size_t i) {
    return e && i < e->e.epsilon.size() ? e->e.epsilon[i] : std::numeric_limits<double>::quiet_NaN();
}

afield_status afield_evaluation_to_json(const afield_evaluation* e, char** out) {
    return guarded([&] {
        need(e, "evaluation");
        need(out, "out");
        *out = dup_string(afield::evaluation_to_json(e->e));
    });
}

void afield_evaluation_free(afield_evaluation* e) { delete e; }

afield_status afield_render(const afield_atlas* a, const afield_render_config* cfg, afield_raster** out) {
    return guarded([&] {
        need(a, "atlas");
        need(cfg, "config");
        need(out, "out");
        afield::Box box;
        box.lo = Eigen::Vector2d(cfg->lo[0], cfg->lo[1]);
        box.hi = Eigen::Vector2d(cfg->hi[0], cfg->hi[1]);
        *out = new afield_raster{afield::rasterize_field_map(a->a, box, cfg->resolution)};
    });
}

size_t afield_raster_resolution(const afield_raster* r) { return r ? r->r.resolution : 0; }

double afield_raster_value(const afield_raster* r, size_t row, size_t col) {
    if (!r || row >= r->r.resolution || col >= r->r.resolution) return std::numeric_limits<double>::quiet_NaN();
    return r->r.at(row, col);
}

afield_status afield_raster_save(const afield_raster* r, const char* path, const char* sidecar_path) {
    return guarded([&] {
        need(r, "raster");
        std::ostringstream ss;
        afield::write_raster_csv(ss, r->r);
        write_file(path, ss.str());
        if (sidecar_path) write_file(sidecar_path, afield::raster_sidecar_json(r->r));
    });
}

void afield_raster_free(afield_raster* r) { delete r; }

} // extern "C"
