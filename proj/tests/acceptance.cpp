// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.
#include "afield/atlas.hpp"
#include "afield/field_fitter.hpp"
#include "afield/pipeline.hpp"
#include "afield/rw_filter.hpp"
#include "afield/segmenter.hpp"
#include "afield/synthetic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace afield;

namespace {

int failures = 0;

void report(int n, bool ok, const std::string& detail) {
    std::printf("criterion %d: %s  %s\n", n, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

struct Run {
    LearnResult learned;
    AtlasEvaluation eval;
    double seconds = 0.0;
};

Run learn_scenario(std::uint64_t seed, double snr) {
    auto sc = default_scenario();
    sc.seed = seed;
    SimConfig sim;
    sim.snr = snr;
    sim.n_trajectories = 150;
    const auto t0 = std::chrono::steady_clock::now();
    const auto data = generate_dataset(sc, sim);
    Run r;
    r.learned = learn(data, LearnConfig{});
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.eval = match_atlas(r.learned.atlas, sc);
    return r;
}

const AttractorLetter& letter_by_id(const Atlas& a, std::size_t id) {
    return *std::find_if(a.letters.begin(), a.letters.end(), [&](const AttractorLetter& l) { return l.id == id; });
}

void criterion_1_and_6(const Run& r) {
    const auto truth = default_scenario();
    bool ok = r.eval.matches.size() == truth.attractors.size() && r.seconds < 60.0;
    double worst_x = 0, worst_b = 0, worst_s2 = 0;
    for (const auto& m : r.eval.matches) {
        worst_x = std::max(worst_x, m.d_x0.maxCoeff());
        worst_b = std::max(worst_b, m.d_beta);
        worst_s2 = std::max(worst_s2, m.d_sigma2);
    }
    ok = ok && worst_x <= 0.05 && worst_b <= 0.05 && worst_s2 <= 0.12;
    report(1, ok,
           "matched " + std::to_string(r.eval.matches.size()) + "/3, max|dx0| " + fmt("%.4f", worst_x) + " (<=0.05), max|dbeta| " +
               fmt("%.4f", worst_b) + " (<=0.05), max|dsigma2| " + fmt("%.4f", worst_s2) + " (<=0.12), " +
               fmt("%.1f", r.seconds) + " s (<60)");

    std::vector<std::size_t> hit;
    for (const auto& m : r.eval.matches) hit.push_back(m.attractor);
    std::sort(hit.begin(), hit.end());
    const bool distinct = std::adjacent_find(hit.begin(), hit.end()) == hit.end() && hit.size() == 3;
    report(6, r.learned.chosen_k == 3 && distinct && r.eval.unmatched_letters.empty(),
           "k = " + std::to_string(r.learned.chosen_k) + " (silhouette " +
               fmt("%.3f", r.learned.chosen_k < r.learned.silhouette.size() ? r.learned.silhouette[r.learned.chosen_k] : 0.0) +
               "), " + std::to_string(hit.size()) + " distinct attractors matched");
}

void criterion_2(const Run& seed7_snr10) {
    const std::vector<std::uint64_t> seeds{7, 1007, 2007, 3007, 4007};
    const std::vector<double> snrs{10.0, 6.0, 1.5};
    const auto truth = default_scenario();
    std::vector<double> eps_sum(snrs.size(), 0.0);
    bool complete = true;
    double worst_center = 0.0, rel_beta = 0.0, rel_sigma = 0.0;
    std::size_t n_rel = 0;
    for (auto seed : seeds) {
        std::vector<Atlas> atlases;
        for (double snr : snrs) {
            auto r = (seed == 7 && snr == 10.0) ? seed7_snr10 : learn_scenario(seed, snr);
            if (snr == 1.5) {
                if (r.eval.matches.size() != truth.attractors.size()) complete = false;
                for (const auto& m : r.eval.matches) {
                    const auto& gt = truth.attractors[m.attractor].near;
                    const auto& est = letter_by_id(r.learned.atlas, m.letter).params;
                    worst_center = std::max(worst_center, m.d_x0.maxCoeff());
                    rel_beta += std::abs(est.beta - gt.beta) / gt.beta;
                    rel_sigma += std::abs(est.sigma - gt.sigma) / gt.sigma;
                    ++n_rel;
                }
            }
            atlases.push_back(r.learned.atlas);
        }
        const auto rep = evaluate(atlases, truth);
        if (rep.epsilon.size() != snrs.size()) {
            complete = false;
            continue;
        }
        for (std::size_t i = 0; i < snrs.size(); ++i) eps_sum[i] += rep.epsilon[i];
    }
    std::vector<double> eps_mean(snrs.size());
    for (std::size_t i = 0; i < snrs.size(); ++i) eps_mean[i] = eps_sum[i] / static_cast<double>(seeds.size());
    const bool trend = complete && eps_mean[0] <= eps_mean[1] && eps_mean[1] <= eps_mean[2];
    rel_beta = n_rel ? rel_beta / static_cast<double>(n_rel) : 0.0;
    rel_sigma = n_rel ? rel_sigma / static_cast<double>(n_rel) : 0.0;
    const bool centers = complete && worst_center <= 0.08;
    const bool degraded = rel_beta >= 0.5 && rel_sigma >= 0.5;
    report(2, trend && centers && degraded,
           "mean eps (snr 10/6/1.5) " + fmt("%.3f", eps_mean[0]) + "/" + fmt("%.3f", eps_mean[1]) + "/" +
               fmt("%.3f", eps_mean[2]) + (trend ? " non-decreasing" : " NOT non-decreasing") +
               "; snr 1.5 max|dx0| " + fmt("%.4f", worst_center) + " (<=0.08)" +
               "; snr 1.5 mean rel err beta " + fmt("%.3f", rel_beta) + ", sigma " + fmt("%.3f", rel_sigma) +
               " (both >=0.5 required)");
}

void criterion_3() {
    std::mt19937_64 rng(303);
    std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.3, 1.5), spd(0.0, 1.0);
    const double h = 1e-6;
    double worst = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
        std::vector<ControlSample> s(5);
        for (auto& c : s) {
            c.z = Eigen::Vector2d(u(rng), u(rng));
            c.origin = c.z;
            c.u = Eigen::Vector2d(spd(rng), 0.0);
        }
        const FieldShape p{Eigen::Vector2d(u(rng), u(rng)), pos(rng)};
        const auto g = gradient(p, 1.0, 1.0, s);
        const auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); };
        const auto j = [&](const FieldShape& q) { return objective(q, 1.0, 1.0, s); };
        const double fd_s = (j({p.x0, p.sigma + h}) - j({p.x0, p.sigma - h})) / (2 * h);
        worst = std::max(worst, rel(g.d_sigma, fd_s));
        for (int i = 0; i < 2; ++i) {
            FieldShape a = p, b = p;
            a.x0[i] += h;
            b.x0[i] -= h;
            worst = std::max(worst, rel(g.d_x0[i], (j(a) - j(b)) / (2 * h)));
        }
    }
    report(3, worst < 1e-5, "max relative error " + fmt("%.2e", worst) + " over 100 draws (<1e-5)");
}

void criterion_4() {
    FilterConfig cfg;
    cfg.n = 2;
    const Eigen::Vector2d v(0.08, -0.05);
    Trajectory line;
    for (int k = 0; k < 30; ++k) line.observations.push_back({k, Eigen::Vector2d(0.3, 0.2) + k * v});
    const auto u = run_rw_pass(line, cfg);
    double worst_u = 0.0;
    for (std::size_t i = 2; i < u.size(); ++i) worst_u = std::max(worst_u, (u[i].u - v).norm() / v.norm());

    Atlas atlas;
    AttractorLetter l;
    l.params = NearFieldParams{0.108, 0.108, Eigen::Vector2d(-0.6, 0.25), std::sqrt(0.2)};
    l.far = FarFieldParams{std::log(0.108), 0.0};
    l.r_switch = 3 * l.params.sigma;
    l.support = 1;
    atlas.letters.push_back(l);
    auto moved = l;
    moved.id = 1;
    moved.params.x0 += Eigen::Vector2d(1.0, 0.0);
    atlas.letters.push_back(moved);
    const auto bank = build_filter_bank(atlas, cfg);
    const auto t = trace_field(l.field(), Eigen::Vector2d(0.4, 0.9), 60);
    const auto own = augmented_innovation(bank[0], t);
    const auto other = augmented_innovation(bank[1], t);
    double worst_inn = 0.0, mean_own = 0.0, mean_other = 0.0;
    for (std::size_t i = 0; i < own.size(); ++i) {
        if (i + 1 >= 5) worst_inn = std::max(worst_inn, own[i].y.norm());
        mean_own += own[i].y.norm();
        mean_other += other[i].y.norm();
    }
    mean_own /= static_cast<double>(own.size());
    mean_other /= static_cast<double>(other.size());
    report(4, worst_u <= 0.01 && worst_inn < 1e-6 && mean_other > mean_own,
           "(a) max |u-v|/|v| after 3 updates " + fmt("%.4f", worst_u) + " (<=0.01); (b) max innovation " +
               fmt("%.2e", worst_inn) + " (<1e-6), mean innovation matched " + fmt("%.2e", mean_own) + " vs displaced " +
               fmt("%.2e", mean_other));
}

void criterion_5() {
    const SegmenterConfig cfg;
    const double turn = 40.0 * std::numbers::pi / 180.0;
    std::vector<ControlSample> legs;
    Eigen::Vector2d z(0, 0);
    const std::int64_t turn_k = 30;
    for (std::int64_t k = 0; k < 60; ++k) {
        ControlSample c;
        c.k = k;
        const double a = k < turn_k ? 0.0 : turn;
        c.u = 0.05 * Eigen::Vector2d(std::cos(a), std::sin(a));
        c.origin = z;
        z += c.u;
        c.z = z;
        legs.push_back(c);
    }
    const auto segs = segment_stream(legs, cfg);
    const auto n = static_cast<std::int64_t>(cfg.n_theta);
    const bool two = segs.size() == 2 && std::abs(segs[0].i_end + 1 - turn_k) <= n && std::abs(segs[1].i_start - turn_k) <= n;

    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> dir(-std::numbers::pi, std::numbers::pi);
    std::vector<ControlSample> noise;
    for (std::int64_t k = 0; k < 300; ++k) {
        ControlSample c;
        c.k = k;
        const double a = dir(rng);
        c.u = 0.05 * Eigen::Vector2d(std::cos(a), std::sin(a));
        c.z = c.origin = Eigen::Vector2d(0, 0);
        noise.push_back(c);
    }
    const auto none = segment_stream(noise, cfg);
    std::string bounds = segs.size() == 2 ? " (end " + std::to_string(segs[0].i_end) + ", start " + std::to_string(segs[1].i_start) +
                                                ", turn " + std::to_string(turn_k) + ")"
                                          : "";
    report(5, two && none.empty(),
           "40 deg turn: " + std::to_string(segs.size()) + " segments" + bounds + "; uniform noise: " +
               std::to_string(none.size()) + " segments");
}

void criterion_7() {
    FitIteration a;
    a.n_samples = 12;
    a.j_value = 0.003;
    a.sigma_hat = 0.4;
    a.x0_hat = Eigen::Vector2d(0.1, -0.2);
    const std::vector<FitIteration> same(4, a);
    const auto f = fuse_estimates(same);
    bool ok = f.sigma == a.sigma_hat && f.x0 == a.x0_hat;

    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-1, 1), pos(1e-8, 1.0);
    std::uniform_int_distribution<std::size_t> n(3, 60), count(1, 10);
    for (int trial = 0; trial < 1000 && ok; ++trial) {
        std::vector<FitIteration> it(count(rng));
        for (auto& q : it) {
            q.n_samples = n(rng);
            q.j_value = pos(rng);
            q.sigma_hat = pos(rng);
            q.x0_hat = Eigen::Vector2d(u(rng), u(rng));
        }
        const auto g = fuse_estimates(it);
        for (Eigen::Index i = 0; i < 3; ++i) {
            double lo = 1e300, hi = -1e300;
            for (const auto& q : it) {
                const double v = i < 2 ? q.x0_hat[i] : q.sigma_hat;
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            const double v = i < 2 ? g.x0[i] : g.sigma;
            ok = ok && v >= lo - 1e-15 && v <= hi + 1e-15;
        }
    }
    report(7, ok, "identity fusion exact; 1000 random fusions inside member min/max");
}

void criterion_8() {
    std::mt19937_64 rng(88);
    std::uniform_real_distribution<double> u(-1, 1), c(0.01, 100);
    bool ok = true;
    for (int trial = 0; trial < 500 && ok; ++trial) {
        const std::size_t m = 1 + trial % 3, t = 1 + trial % 5;
        std::vector<Eigen::VectorXd> truth(m, Eigen::VectorXd::Zero(4));
        std::vector<std::vector<Eigen::VectorXd>> est(t, truth);
        for (auto& level : est)
            for (auto& v : level)
                for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = u(rng);
        const auto e = normalized_error(truth, est);
        const double k = c(rng);
        for (auto& level : est)
            for (auto& v : level) v *= k;
        const auto e2 = normalized_error(truth, est);
        double mx = 0;
        for (std::size_t i = 0; i < e.size(); ++i) {
            ok = ok && e[i] >= 0 && e[i] <= 1 && std::abs(e[i] - e2[i]) <= 1e-12;
            mx = std::max(mx, e[i]);
        }
        ok = ok && mx == 1.0;
    }
    const std::vector<Eigen::VectorXd> zero{Eigen::VectorXd::Zero(4)};
    const std::vector<std::vector<Eigen::VectorXd>> perfect{zero, zero};
    const auto ez = normalized_error(zero, perfect);
    ok = ok && ez[0] == 0.0 && ez[1] == 0.0;

    const std::vector<Eigen::VectorXd> one{Eigen::VectorXd::Zero(1)};
    const std::vector<std::vector<Eigen::VectorXd>> totals{{Eigen::VectorXd::Constant(1, 2.0)}, {Eigen::VectorXd::Constant(1, 4.0)}};
    const auto e24 = normalized_error(one, totals);
    ok = ok && std::abs(e24[0] - 0.5) < 1e-15 && std::abs(e24[1] - 1.0) < 1e-15;
    report(8, ok, "range, scale invariance and zero convention over 500 draws; totals {2,4} -> {" + fmt("%.3f", e24[0]) +
                      ", " + fmt("%.3f", e24[1]) + "}");
}

void criterion_9() {
    const auto sim_bytes = [] {
        SimConfig sim;
        sim.n_trajectories = 150;
        std::ostringstream out;
        write_trajectories(out, generate_dataset(default_scenario(), sim));
        return out.str();
    };
    const auto a = sim_bytes(), b = sim_bytes();

    Atlas atlas;
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& f = default_scenario().attractors[i];
        atlas.letters.push_back(AttractorLetter{i, f.near, f.far, f.r_switch, 1});
    }
    const Box box{Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1)};
    const auto render_bytes = [&] {
        std::ostringstream out;
        write_raster_csv(out, rasterize_field_map(atlas, box, 100));
        return out.str() + raster_sidecar_json(rasterize_field_map(atlas, box, 100));
    };
    const auto r1 = render_bytes(), r2 = render_bytes();
    report(9, a == b && r1 == r2,
           "simulate " + std::to_string(a.size()) + " bytes " + (a == b ? "identical" : "DIFFER") + "; render " +
               std::to_string(r1.size()) + " bytes " + (r1 == r2 ? "identical" : "DIFFER"));
}

} // namespace

int main() {
    const auto base = learn_scenario(7, 10.0);
    criterion_1_and_6(base);
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_2(base);
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
