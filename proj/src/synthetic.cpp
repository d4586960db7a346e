#include "afield/synthetic.hpp"

#include "afield/error.hpp"
#include "json_util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace afield {

using json = nlohmann::ordered_json;

bool Box::contains(const Point& p) const {
    return p.size() == lo.size() && (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
}

void Box::validate() const {
    detail::require(lo.size() >= 1 && lo.size() == hi.size(), "box corners must share a dimension >= 1");
    detail::require(lo.allFinite() && hi.allFinite() && (lo.array() < hi.array()).all(), "box must be non-degenerate");
}

void Scenario::validate() const {
    bounds.validate();
    detail::require(!attractors.empty(), "scenario needs at least one attractor");
    for (const auto& a : attractors) {
        a.validate();
        detail::require(a.near.x0.size() == bounds.lo.size(), "attractor dimension does not match bounds");
        detail::require(bounds.contains(a.near.x0), "attractor center outside scenario bounds");
    }
}

void SimConfig::validate() const {
    detail::require(snr > 0, "snr must be > 0");
    detail::require(n_trajectories >= 1, "n_trajectories must be >= 1");
    detail::require(max_steps >= 1, "max_steps must be >= 1");
    detail::require(arrival_radius > 0, "arrival_radius must be > 0");
}

SwitchingField make_attractor(const Point& x0, double beta, double sigma2) {
    detail::require(beta > 0 && sigma2 > 0, "attractor beta and sigma2 must be > 0");
    SwitchingField f;
    f.near = NearFieldParams{beta, beta, x0, std::sqrt(sigma2)};
    f.far = FarFieldParams{std::log(beta), 0.0};
    f.r_switch = 3.0 * f.near.sigma;
    return f;
}

Scenario default_scenario() {
    Scenario s;
    s.bounds = Box{Eigen::Vector2d(-1.0, -1.0), Eigen::Vector2d(1.0, 1.0)};
    s.seed = 7;
    s.attractors = {
        make_attractor(Eigen::Vector2d(0.0, 0.75), 0.09, 0.1),
        make_attractor(Eigen::Vector2d(-0.6, 0.25), 0.108, 0.2),
        make_attractor(Eigen::Vector2d(0.55, -0.7), 0.117, 0.3),
    };
    return s;
}

Scenario parse_scenario_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("scenario JSON: ") + e.what(), 0);
    }
    try {
        Scenario s;
        const auto& b = j.at("bounds");
        if (!b.is_array() || b.size() != 2) throw SchemaError("scenario bounds must be [[min...],[max...]]");
        s.bounds = Box{jsonio::to_point(b.at(0)), jsonio::to_point(b.at(1))};
        s.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& a : j.at("attractors"))
            s.attractors.push_back(
                make_attractor(jsonio::to_point(a.at("x0")), a.at("beta").get<double>(), a.at("sigma2").get<double>()));
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("scenario JSON: ") + e.what());
    } catch (const ContractViolation& e) {
        throw SchemaError(std::string("scenario JSON: ") + e.what());
    }
}

std::string scenario_to_json(const Scenario& s) {
    json j;
    j["bounds"] = json::array({jsonio::from_point(s.bounds.lo), jsonio::from_point(s.bounds.hi)});
    j["seed"] = s.seed;
    j["attractors"] = json::array();
    for (const auto& a : s.attractors)
        j["attractors"].push_back(
            {{"x0", jsonio::from_point(a.near.x0)}, {"beta", a.near.beta}, {"sigma2", a.near.sigma * a.near.sigma}});
    return j.dump(2) + "\n";
}

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

Point random_boundary_point(const Box& box, std::mt19937_64& rng) {
    const auto dim = box.dim();
    const auto axis = static_cast<Eigen::Index>(pick(rng, dim));
    const bool high = pick(rng, 2) == 1;
    Point p(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = uniform(rng, box.lo[i], box.hi[i]);
    p[axis] = high ? box.hi[axis] : box.lo[axis];
    return p;
}

// Speed law used for simulation: cruise at beta outside r_switch, near law inside.
Velocity simulated_velocity(const SwitchingField& f, const Point& z) {
    const Velocity toward = f.near.x0 - z;
    const double r = toward.norm();
    if (r == 0.0) return Velocity::Zero(z.size());
    const double speed = r <= f.r_switch ? eval_near_speed(f.near, r) : f.near.beta;
    return speed * toward / r;
}

} // namespace

SimulatedAgent simulate_agent(const Scenario& scenario, std::span<const std::size_t> goals, const SimConfig& cfg,
                              std::uint64_t rng_seed) {
    scenario.validate();
    cfg.validate();
    detail::require(!goals.empty(), "simulate_agent needs at least one goal");
    for (auto g : goals) detail::require(g < scenario.attractors.size(), "goal index out of range");

    std::mt19937_64 rng(rng_seed);
    SimulatedAgent out;
    Point z = random_boundary_point(scenario.bounds, rng);
    out.trajectory.observations.push_back({0, z});

    std::size_t g = 0;
    std::size_t step = 0;
    while (true) {
        while (g < goals.size() && (z - scenario.attractors[goals[g]].near.x0).norm() <= cfg.arrival_radius) ++g;
        if (g == goals.size()) break;
        if (step == cfg.max_steps) {
            out.truncated = true;
            break;
        }
        const Velocity v = simulated_velocity(scenario.attractors[goals[g]], z);
        const double b = v.norm() / cfg.snr;
        Point next = z + v;
        if (b > 0)
            for (Eigen::Index i = 0; i < next.size(); ++i) next[i] += uniform(rng, -b, b);
        z = std::move(next);
        ++step;
        out.trajectory.observations.push_back({static_cast<std::int64_t>(step), z});
    }
    return out;
}

std::vector<Trajectory> generate_dataset(const Scenario& scenario, const SimConfig& cfg) {
    scenario.validate();
    cfg.validate();
    const std::size_t m = scenario.attractors.size();
    std::vector<Trajectory> out;
    out.reserve(cfg.n_trajectories);
    for (std::size_t i = 0; i < cfg.n_trajectories; ++i) {
        std::mt19937_64 rng(scenario.seed + i);
        const std::size_t len = m == 1 ? 1 : 1 + pick(rng, 3);
        std::vector<std::size_t> goals;
        while (goals.size() < len) {
            const auto g = pick(rng, m);
            if (!goals.empty() && goals.back() == g) continue;
            goals.push_back(g);
        }
        auto agent = simulate_agent(scenario, goals, cfg, rng());
        agent.trajectory.id = std::to_string(i);
        out.push_back(std::move(agent.trajectory));
    }
    return out;
}

Trajectory trace_field(const SwitchingField& f, const Point& start, std::size_t steps, std::string id) {
    Trajectory t;
    t.id = std::move(id);
    Point z = start;
    t.observations.push_back({0, z});
    for (std::size_t k = 1; k <= steps; ++k) {
        z = z + eval_field(f, z);
        t.observations.push_back({static_cast<std::int64_t>(k), z});
    }
    return t;
}

std::vector<double> normalized_error(std::span<const Eigen::VectorXd> ground_truth,
                                     std::span<const std::vector<Eigen::VectorXd>> estimates) {
    detail::require(!ground_truth.empty() && !estimates.empty(), "normalized_error needs M >= 1 and T >= 1");
    const std::size_t T = estimates.size();

    // lambda_tau = sum over attractors of the componentwise absolute errors.
    std::vector<double> lambda(T, 0.0);
    for (std::size_t tau = 0; tau < T; ++tau) {
        detail::require(estimates[tau].size() == ground_truth.size(), "missing (attractor, noise level) cell");
        for (std::size_t m = 0; m < ground_truth.size(); ++m) {
            detail::require(estimates[tau][m].size() == ground_truth[m].size(), "parameter vector length mismatch");
            lambda[tau] += (ground_truth[m] - estimates[tau][m]).cwiseAbs().sum();
        }
    }
    const double gamma = *std::max_element(lambda.begin(), lambda.end());
    if (!(gamma > 0)) return std::vector<double>(T, 0.0);

    // vartheta_tau = lambda_tau / gamma; phi_tau is the sum over the (scalar)
    // vartheta_tau; epsilon_tau = phi_tau / max phi.
    std::vector<double> phi(T);
    for (std::size_t tau = 0; tau < T; ++tau) phi[tau] = lambda[tau] / gamma;
    const double phi_max = *std::max_element(phi.begin(), phi.end());
    std::vector<double> eps(T);
    for (std::size_t tau = 0; tau < T; ++tau) eps[tau] = phi[tau] / phi_max;
    return eps;
}

} // namespace afield
