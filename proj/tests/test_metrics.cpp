#include "afo/engine.hpp"
#include "afo/metrics.hpp"
#include "afo/oracle.hpp"

#include <doctest.h>

#include <memory>

using namespace afo;

namespace {

struct Setup {
    Problem problem;
    QuadraticEpoch epoch;
};

Setup scalar_setup(double lo = -10, double hi = 10) {
    const BlockLayout layout = BlockLayout::uniform(1, 1, 1);
    QuadraticEpoch e;
    e.Q = MatrixXd::Constant(1, 1, 1.0);
    e.q = VectorXd::Zero(1);
    e.P = MatrixXd::Constant(1, 1, 1.0);
    e.theta = VectorXd::Constant(1, 1.0);
    return {{layout, BoxSet::cube(1, lo, hi), OutputMap(MatrixXd::Constant(1, 1, 1.0), layout)}, e};
}

RunTrace synchronous_run(const Setup& s, double x0, double gamma, long ticks) {
    auto sched = std::make_shared<const EventSchedule>(
        generate_schedule(AsyncConfig::uniform(1, 1, 1.0, 1.0, 1.0, 0, 0), s.problem.layout, ticks));
    return run(s.problem, sched, EpochSchedule::uniform({s.epoch}, ticks, 1), VectorXd::Constant(1, x0),
               fixed_steps({gamma}));
}

}  // namespace

TEST_CASE("window sums") {
    std::vector<VectorXd> steps = {VectorXd::Constant(1, 5.0), VectorXd::Constant(1, 2.0), VectorXd::Constant(1, 1.0)};
    const auto beta = window_square_sums(steps, 2);
    REQUIRE(beta.size() == 4);
    CHECK(beta[0] == 0.0);
    CHECK(beta[1] == 25.0);
    CHECK(beta[3] == 5.0);
    const auto zero = window_square_sums(std::vector<VectorXd>(4, VectorXd::Zero(2)), 3);
    for (double b : zero) CHECK(b == 0.0);
}

TEST_CASE("tracking error vanishes at the minimizer") {
    const Setup s = scalar_setup();
    const RunTrace t = synchronous_run(s, 0.5, 0.3, 10);
    const MetricSeries m = compute_series(t);
    for (double a : m.alpha) CHECK(a == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(m.states() == 11);
}

TEST_CASE("hand-built synchronous trace") {
    const Setup s = scalar_setup();
    const RunTrace t = synchronous_run(s, 2.0, 0.5, 3);
    const MetricSeries m = compute_series(t);
    // x0 = 2, y0 = 2: g = 2 + 1 = 3, x1 = 0.5, s0 = −1.5; measuring x0 leaves y unchanged
    CHECK(t.x_true[1][0] == doctest::Approx(0.5));
    CHECK(m.beta[1] == doctest::Approx(2.25));
    CHECK(m.delta[1] == 0.0);
    CHECK(m.delta[1] <= 1.0 * 1.0 * 1.0 * m.beta[1]);
    // tick 1 measures x1, so q1 = 0.5 − 2
    CHECK(m.delta[2] == doctest::Approx(2.25));
    CHECK(m.alpha[0] > 0.0);
}

TEST_CASE("the per-tick output coupling can fail while the windowed form holds") {
    // the box stops the iterate after one step, so s(k−1) = 0 while q(k−1) still carries s(k−2)
    const Setup s = scalar_setup(0.0, 10.0);
    const RunTrace t = synchronous_run(s, 2.0, 0.9, 4);
    const MetricSeries m = compute_series(t);
    CHECK(t.x_true[1][0] == 0.0);
    CHECK(m.beta[2] == 0.0);
    CHECK(m.delta[2] > 0.0);
    const CheckReport r = check_trace_invariants(t, m);
    CHECK_FALSE(r.find("output_step_coupling")->ok());
    CHECK(r.find("output_step_window")->ok());
    CHECK(r.find("output_step_window")->informational);
}

TEST_CASE("invariants hold on an asynchronous run with snapshots") {
    const BlockLayout layout = BlockLayout::uniform(3, 2, 1);
    MatrixXd C(3, 6);
    C << 1, 0.2, 0, 0.5, 0, 0, 0, 0, 1, -0.3, 0.4, 0, 0.1, 0, 0, 0, 1, 1;
    const Problem p{layout, BoxSet::cube(6, -3, 3), OutputMap(C, layout)};
    QuadraticEpoch e;
    e.Q = MatrixXd::Identity(6, 6) * 1.5;
    e.q = VectorXd::LinSpaced(6, -2, 2);
    e.P = MatrixXd::Identity(3, 3);
    e.theta = VectorXd::Constant(3, 1.0);
    auto sched = std::make_shared<const EventSchedule>(
        generate_schedule(AsyncConfig::uniform(3, 4, 0.3, 0.3, 0.3, 3, 17), layout, 80));
    RunOptions opt;
    opt.snapshot_stride = 5;
    const RunTrace t = run(p, sched, EpochSchedule::uniform({e, e}, 40, 4), VectorXd::Zero(6), fixed_steps({0.05}), opt);
    const MetricSeries m = compute_series(t);
    const CheckReport r = check_trace_invariants(t, m);
    for (const char* name : {"schedule", "feasibility", "alpha_nonneg", "beta_cap", "input_staleness",
                             "output_staleness", "descent", "snapshot_replay"}) {
        const InequalityCheck* c = r.find(name);
        REQUIRE(c != nullptr);
        CHECK_MESSAGE(c->ok(), name);
        CHECK(c->checked > 0);
    }
    for (long k = 0; k < 80; k += 13)
        for (int i = 0; i < 3; ++i) {
            const AgentState a = reconstruct_agent(t, i, k);
            CHECK(a.x_local.size() == 6);
            CHECK(a.y_local.size() == 3);
        }
}

TEST_CASE("inequality recording") {
    InequalityCheck c{"demo"};
    c.record(0, 1.0, 2.0, 0.0);
    c.record(1, 2.0, 1.0, 0.5);
    c.record(2, 1.0, std::numeric_limits<double>::infinity(), 0.0);
    CHECK(c.checked == 3);
    CHECK(c.violations == 1);
    CHECK(c.first_violation == 1);
    CHECK(c.worst_margin == doctest::Approx(-0.5));
    c.record(3, std::nan(""), 1.0, 0.0);
    CHECK(c.violations == 2);
}

TEST_CASE("grid search agrees with the oracle") {
    const BlockLayout layout = BlockLayout::uniform(2, 1, 1);
    MatrixXd C(2, 2);
    C << 1, 0.5, -0.2, 1;
    const OutputMap map(C, layout);
    QuadraticEpoch e;
    e.Q = MatrixXd::Identity(2, 2);
    e.q = VectorXd::Constant(2, 0.4);
    e.P = MatrixXd::Identity(2, 2) * 2;
    e.theta = VectorXd::Constant(2, 3.0);
    const BoxSet set = BoxSet::cube(2, -1, 1);
    const VectorXd grid = grid_minimize(e, map, set, 1e-3);
    const VectorXd exact = solve_minimizer(e, map, set).x_star;
    CHECK((grid - exact).lpNorm<Eigen::Infinity>() < 2e-3);
    CHECK_THROWS(grid_minimize(e, map, BoxSet::cube(4, -1, 1), 0.1));
}
