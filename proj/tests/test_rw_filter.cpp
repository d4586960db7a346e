#include "afield/error.hpp"
#include "afield/rw_filter.hpp"

#include <doctest.h>

#include <random>

using namespace afield;

namespace {

FilterConfig cfg2() {
    FilterConfig c;
    c.n = 2;
    return c;
}

Trajectory line(const Eigen::Vector2d& start, const Eigen::Vector2d& v, int n) {
    Trajectory t;
    t.id = "line";
    for (int k = 0; k < n; ++k) t.observations.push_back({k, start + k * v});
    return t;
}

// Steady-state control of the random-walk filter for noiseless constant
// velocity v, iterating the scalar Riccati recursion per axis (axes decouple
// because every matrix is block diagonal). Independent of the library.
double steady_state_gain(const FilterConfig& c) {
    // Position variance after update, p; prediction adds q_pos. Velocity
    // block is reset to q_vel by F and does not feed back into position.
    double p = c.p0;
    for (int i = 0; i < 10000; ++i) {
        const double pp = p + c.q_pos;
        const double k = pp / (pp + c.r_meas);
        p = (1.0 - k) * pp;
    }
    const double pp = p + c.q_pos;
    return pp / (pp + c.r_meas);
}

} // namespace

TEST_CASE("predict zeroes velocity and keeps position") {
    const auto c = cfg2();
    FilterState s;
    s.mean = Eigen::Vector4d(3, 4, 1, 1);
    s.cov = Eigen::Matrix4d::Identity();
    const auto p = predict_rw(s, c);
    CHECK(p.mean == Eigen::Vector4d(3, 4, 0, 0));
}

TEST_CASE("predict from zero covariance is pure process noise") {
    const auto c = cfg2();
    FilterState s;
    s.mean = Eigen::Vector4d::Zero();
    s.cov = Eigen::Matrix4d::Zero();
    const auto p = predict_rw(s, c);
    Eigen::Matrix4d q = Eigen::Matrix4d::Zero();
    q.diagonal() << c.q_pos, c.q_pos, c.q_vel, c.q_vel;
    CHECK((p.cov - q).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("predict covariance matches an explicit F P F' + Q") {
    const auto c = cfg2();
    FilterState s;
    s.mean = Eigen::Vector4d::Zero();
    s.cov = Eigen::Matrix4d::Identity();
    const auto p = predict_rw(s, c);
    // Hand product: F = diag(1,1,0,0) so F I F' keeps the position block.
    double expected[4][4] = {};
    const double f[4] = {1, 1, 0, 0};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) expected[i][j] = (i == j ? f[i] * f[j] : 0.0);
    expected[0][0] += c.q_pos;
    expected[1][1] += c.q_pos;
    expected[2][2] += c.q_vel;
    expected[3][3] += c.q_vel;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) CHECK(p.cov(i, j) == doctest::Approx(expected[i][j]).epsilon(1e-15));
}

TEST_CASE("innovation") {
    auto c = cfg2();
    FilterState pred;
    pred.mean = Eigen::Vector4d::Zero();
    pred.cov = Eigen::Matrix4d::Identity();

    SUBCASE("perfect prediction") {
        const auto inn = innovate(pred, Eigen::Vector2d(0, 0), c);
        CHECK(inn.y.norm() == 0.0);
    }
    SUBCASE("direct subtraction") {
        const auto inn = innovate(pred, Eigen::Vector2d(0.2, 0), c);
        CHECK(inn.y == Eigen::Vector2d(0.2, 0));
    }
    SUBCASE("s_cov is H P H' + R") {
        c.r_meas = 0.01;
        const auto inn = innovate(pred, Eigen::Vector2d(0, 0), c);
        CHECK(inn.s_cov(0, 0) == doctest::Approx(1.01));
        CHECK(inn.s_cov(1, 1) == doctest::Approx(1.01));
        CHECK(inn.s_cov(0, 1) == 0.0);
    }
    SUBCASE("dimension mismatch") {
        CHECK_THROWS_AS(innovate(pred, Eigen::Vector3d(0, 0, 0), c), ContractViolation);
    }
}

TEST_CASE("update") {
    SUBCASE("zero innovation leaves the mean") {
        const auto c = cfg2();
        FilterState pred;
        pred.mean = Eigen::Vector4d(1, 2, 0, 0);
        pred.cov = Eigen::Matrix4d::Identity();
        const auto inn = innovate(pred, Eigen::Vector2d(1, 2), c);
        CHECK(update(pred, inn, c).mean == pred.mean);
    }
    SUBCASE("huge measurement noise keeps the prediction") {
        auto c = cfg2();
        c.r_meas = 1e12;
        FilterState pred;
        pred.mean = Eigen::Vector4d(1, 2, 0, 0);
        pred.cov = Eigen::Matrix4d::Identity();
        const auto inn = innovate(pred, Eigen::Vector2d(5, -3), c);
        CHECK((update(pred, inn, c).mean - pred.mean).norm() < 1e-10);
    }
    SUBCASE("scalar Kalman algebra") {
        FilterConfig c;
        c.n = 1;
        c.r_meas = 1.0;
        FilterState pred;
        pred.mean = Eigen::Vector2d(0, 0);
        pred.cov = Eigen::Matrix2d::Identity();
        const auto inn = innovate(pred, Eigen::VectorXd::Constant(1, 2.0), c);
        const auto post = update(pred, inn, c);
        // K = P / (P + R) = 0.5 on the position axis.
        CHECK(post.mean[0] == doctest::Approx(0.5 * 2.0));
        CHECK(post.cov(0, 0) == doctest::Approx(0.5));
    }
    SUBCASE("singular innovation covariance") {
        auto c = cfg2();
        FilterState pred;
        pred.mean = Eigen::Vector4d::Zero();
        pred.cov = Eigen::Matrix4d::Zero();
        Innovation inn;
        inn.y = Eigen::Vector2d(1, 0);
        inn.s_cov = Eigen::Matrix2d::Zero();
        CHECK_THROWS_AS(update(pred, inn, c), NumericalError);
    }
}

TEST_CASE("extract_control divides by the sample interval") {
    auto c = cfg2();
    Innovation inn;
    inn.y = Eigen::Vector2d(0, 0);
    CHECK(extract_control(inn, c) == Eigen::Vector2d(0, 0));
    inn.y = Eigen::Vector2d(0.3, -0.1);
    CHECK(extract_control(inn, c) == Eigen::Vector2d(0.3, -0.1));
    c.dk = 0.5;
    inn.y = Eigen::Vector2d(1, 2);
    CHECK(extract_control(inn, c) == Eigen::Vector2d(1 / 0.5, 2 / 0.5));
}

TEST_CASE("run_rw_pass structure and stationary agent") {
    const auto c = cfg2();
    const auto t = line(Eigen::Vector2d(0.3, -0.2), Eigen::Vector2d(0, 0), 30);
    const auto out = run_rw_pass(t, c);
    REQUIRE(out.size() == t.size() - 1);
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(out[i].k == t.observations[i + 1].k);
        CHECK(out[i].u.norm() < 1e-15);
        CHECK((out[i].origin - (out[i].z - c.dk * out[i].u)).norm() < 1e-15);
    }
}

TEST_CASE("constant velocity converges to the closed-form steady state") {
    const auto c = cfg2();
    const Eigen::Vector2d v(1, 0);
    const auto out = run_rw_pass(line(Eigen::Vector2d(0, 0), v, 60), c);
    // At steady state the innovation is v / K where K is the stationary gain.
    const double k_inf = steady_state_gain(c);
    const Eigen::Vector2d u_inf = v / k_inf;
    CHECK((out.back().u - u_inf).norm() < 1e-9);
    // Within 1% of the true velocity from the third update on.
    for (std::size_t i = 2; i < out.size(); ++i) CHECK((out[i].u - v).norm() < 0.01 * v.norm());
}

TEST_CASE("convergence of the control is monotone after three updates") {
    // The control approaches its stationary value u_inf = v / K monotonically;
    // u_inf itself sits (1/K - 1)|v| above v (under 1% with the defaults).
    const auto c = cfg2();
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> a(-3.14159, 3.14159), s(0.01, 2.0);
    const double k_inf = steady_state_gain(c);
    for (int trial = 0; trial < 25; ++trial) {
        const double th = a(rng), sp = s(rng);
        const Eigen::Vector2d v(sp * std::cos(th), sp * std::sin(th));
        const auto out = run_rw_pass(line(Eigen::Vector2d(a(rng), a(rng)), v, 40), c);
        const Eigen::Vector2d u_inf = v / k_inf;
        for (std::size_t i = 3; i < out.size(); ++i)
            CHECK((out[i].u - u_inf).norm() <= (out[i - 1].u - u_inf).norm() + 1e-12 * v.norm());
        CHECK((out.back().u - v).norm() < 0.01 * v.norm());
    }
}

TEST_CASE("covariance stays symmetric") {
    auto c = cfg2();
    std::mt19937_64 rng(23);
    std::normal_distribution<double> n(0.0, 1.0);
    Trajectory t;
    for (int k = 0; k < 200; ++k) t.observations.push_back({k, Eigen::Vector2d(n(rng), n(rng))});
    auto state = FilterState::initial(t.observations[0].z, c);
    for (std::size_t i = 1; i < t.size(); ++i) {
        const auto p = predict_rw(state, c);
        CHECK(max_asymmetry(p.cov) < 1e-9);
        state = update(p, innovate(p, t.observations[i].z, c), c);
        CHECK(max_asymmetry(state.cov) < 1e-9);
        CHECK(state.cov.diagonal().minCoeff() >= 0.0);
    }
}

TEST_CASE("control is linear in the measurement") {
    const auto c = cfg2();
    std::mt19937_64 rng(29);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        FilterState pred;
        pred.mean = Eigen::Vector4d(n(rng), n(rng), 0, 0);
        pred.cov = Eigen::Matrix4d::Identity();
        const Eigen::Vector2d z1(n(rng), n(rng)), z2(n(rng), n(rng));
        const auto u1 = extract_control(innovate(pred, z1, c), c);
        const auto u2 = extract_control(innovate(pred, z2, c), c);
        const auto um = extract_control(innovate(pred, 0.5 * (z1 + z2), c), c);
        CHECK((um - 0.5 * (u1 + u2)).norm() < 1e-12);
    }
}

TEST_CASE("config validation") {
    auto c = cfg2();
    c.r_meas = 0;
    CHECK_THROWS_AS(c.validate(), ContractViolation);
    c = cfg2();
    c.dk = -1;
    CHECK_THROWS_AS(c.validate(), ContractViolation);
    const auto t = line(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0), 1);
    CHECK_THROWS_AS(run_rw_pass(t, cfg2()), ContractViolation);
}
