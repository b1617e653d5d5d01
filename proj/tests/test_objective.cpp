#include "afo/objective.hpp"
#include "afo/oracle.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>

using namespace afo;

namespace {

QuadraticEpoch scalar_epoch(double Q, double q, double P, double theta) {
    QuadraticEpoch e;
    e.Q = MatrixXd::Constant(1, 1, Q);
    e.q = VectorXd::Constant(1, q);
    e.P = MatrixXd::Constant(1, 1, P);
    e.theta = VectorXd::Constant(1, theta);
    return e;
}

QuadraticEpoch diagonal_epoch(int n, double Q, double P) {
    QuadraticEpoch e;
    e.Q = Q * MatrixXd::Identity(n, n);
    e.q = VectorXd::Zero(n);
    e.P = P * MatrixXd::Identity(n, n);
    e.theta = VectorXd::Zero(n);
    return e;
}

}  // namespace

TEST_CASE("objective evaluation") {
    const QuadraticEpoch e = diagonal_epoch(2, 2.0, 2.0);
    const VectorXd ones = VectorXd::Ones(2);
    CHECK(eval_f(e, ones) == doctest::Approx(2.0));
    CHECK(eval_g(e, ones) == doctest::Approx(2.0));
    CHECK(eval_J(e, ones, ones) == doctest::Approx(4.0));

    QuadraticEpoch shifted = e;
    shifted.constant_offset = 7.5;
    CHECK(eval_J(shifted, VectorXd::Zero(2), VectorXd::Zero(2)) == 7.5);
    CHECK_THROWS_AS(eval_f(e, VectorXd::Ones(3)), std::invalid_argument);
}

TEST_CASE("grad_block") {
    const BlockLayout layout = BlockLayout::uniform(1, 1, 1);
    const OutputMap map(MatrixXd::Constant(1, 1, 1.0), layout);
    const QuadraticEpoch e = scalar_epoch(1.0, 0.0, 1.0, 1.0);
    CHECK(grad_block(e, map, layout, 0, VectorXd::Constant(1, 2.0), VectorXd::Zero(1))[0] == doctest::Approx(1.0));
    CHECK(grad_block(e, map, layout, 0, VectorXd::Constant(1, 0.5), VectorXd::Constant(1, 0.5))[0] ==
          doctest::Approx(0.0));
    CHECK_THROWS_AS(grad_block(e, map, layout, 1, VectorXd::Zero(1), VectorXd::Zero(1)), std::out_of_range);

    // with y at the target the output term vanishes and the gradient is Qx
    const BlockLayout two = BlockLayout::uniform(2, 1, 1);
    const OutputMap c2(MatrixXd::Identity(2, 2), two);
    QuadraticEpoch e2 = diagonal_epoch(2, 1.0, 1.0);
    VectorXd x(2);
    x << 0.3, -0.8;
    e2.theta = VectorXd::Constant(2, 4.0);
    CHECK(grad_block(e2, c2, two, 1, x, e2.theta)[0] == doctest::Approx(-0.8));
}

TEST_CASE("grad_block assembles the composite gradient") {
    const BlockLayout layout({1, 2}, {2, 1});
    MatrixXd C(3, 3);
    C << 1, 2, 0, -1, 0.5, 3, 0, 1, 1;
    const OutputMap map(C, layout);
    QuadraticEpoch e;
    e.Q = MatrixXd::Identity(3, 3) * 2;
    e.Q(0, 1) = e.Q(1, 0) = 0.5;
    e.q = VectorXd::LinSpaced(3, -1, 1);
    e.P = MatrixXd::Identity(3, 3);
    e.theta = VectorXd::Constant(3, 0.2);
    VectorXd x(3);
    x << 0.4, -0.1, 0.9;
    const VectorXd full = grad_composite(e, map, x);
    const VectorXd y = C * x;
    CHECK(grad_block(e, map, layout, 0, x, y)[0] == doctest::Approx(full[0]).epsilon(1e-14));
    CHECK(grad_block(e, map, layout, 1, x, y)[1] == doctest::Approx(full[2]).epsilon(1e-14));
}

TEST_CASE("epoch validation names the offending matrix") {
    const BlockLayout layout = BlockLayout::uniform(2, 1, 1);
    QuadraticEpoch e = diagonal_epoch(2, 1.0, 1.0);
    CHECK_NOTHROW(e.validate(layout));
    e.Q(0, 0) = -1.0;
    try {
        e.validate(layout);
        FAIL("expected an exception");
    } catch (const std::invalid_argument& err) {
        CHECK(std::string(err.what()).find("Q") != std::string::npos);
    }
    e = diagonal_epoch(2, 1.0, 1.0);
    e.P(1, 1) = 0.0;
    CHECK_THROWS_WITH_AS(e.validate(layout), doctest::Contains("P"), std::invalid_argument);
}

TEST_CASE("linear output cost conversion keeps J") {
    MatrixXd P(2, 2);
    P << 2, 0.3, 0.3, 1;
    VectorXd p(2);
    p << -1, 0.5;
    const QuadraticEpoch e =
        QuadraticEpoch::from_linear_output(0.0, MatrixXd::Identity(2, 2), VectorXd::Zero(2), P, p);
    VectorXd y(2);
    y << 0.7, -2.0;
    const double direct = 0.5 * y.dot(P * y) + p.dot(y);
    CHECK(eval_g(e, y) + e.constant_offset == doctest::Approx(direct).epsilon(1e-13));
}

TEST_CASE("epoch schedule boundaries") {
    const EpochSchedule s({diagonal_epoch(1, 1, 1), diagonal_epoch(1, 1, 1), diagonal_epoch(1, 1, 1)}, {4, 6, 2}, 2);
    CHECK(s.eta(0) == 4);
    CHECK(s.eta(2) == 12);
    CHECK(s.eta_before(0) == 0);
    CHECK(s.horizon() == 12);
    CHECK(s.r(1) == 3);
    CHECK(s.epoch_of_tick(3) == 0);
    CHECK(s.epoch_of_tick(4) == 1);
    CHECK(s.epoch_of_state(0) == 0);
    CHECK(s.epoch_of_state(4) == 0);
    CHECK(s.epoch_of_state(5) == 1);
    CHECK(s.epoch_of_state(12) == 2);
    CHECK_THROWS_AS(EpochSchedule({diagonal_epoch(1, 1, 1)}, {3}, 2), std::invalid_argument);
}

TEST_CASE("epoch constants") {
    const BlockLayout layout = BlockLayout::uniform(2, 1, 1);
    const OutputMap map(MatrixXd::Identity(2, 2), layout);
    const BoxSet set = BoxSet::cube(2, -1, 1);
    const QuadraticEpoch e = diagonal_epoch(2, 2.0, 2.0);
    const VectorXd x_star = VectorXd::Zero(2);
    ConstantsOptions opt;
    opt.lambda_eb = 1.0;
    const EpochConstants c = epoch_constants(e, x_star, nullptr, nullptr, set, map, layout, opt);
    CHECK(c.L_x == doctest::Approx(2.0));
    CHECK(c.L_y == doctest::Approx(2.0));
    CHECK(c.L == doctest::Approx(2.0 * std::sqrt(2.0)));
    CHECK(c.p_strong == doctest::Approx(2.0));

    const EpochConstants same = epoch_constants(e, x_star, &e, &x_star, set, map, layout, opt);
    CHECK(same.sigma == 0.0);
    CHECK(same.L_t == 0.0);

    const BlockLayout one = BlockLayout::uniform(1, 1, 1);
    const QuadraticEpoch s = scalar_epoch(1.0, 0.0, 1.0, 0.0);
    const EpochConstants m = epoch_constants(s, VectorXd::Zero(1), nullptr, nullptr, BoxSet::cube(1, -1, 1),
                                             OutputMap(MatrixXd::Constant(1, 1, 1.0), one), one, opt);
    CHECK(m.M_x == doctest::Approx(1.0));
}

TEST_CASE("empirical error bound constant") {
    const BlockLayout layout = BlockLayout::uniform(2, 1, 1);
    const OutputMap map(MatrixXd::Identity(2, 2), layout);
    const QuadraticEpoch e = diagonal_epoch(2, 1.0, 1.0);
    const BoxSet set = BoxSet::cube(2, -1, 1);
    const double lambda = estimate_error_bound(e, VectorXd::Zero(2), set, map, 500, 1.0, 9);
    // h = ‖x‖², so the unit-step residual is 2x on this symmetric box
    CHECK(lambda == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(estimate_error_bound(e, VectorXd::Zero(2), set, map, 500, 2.0, 9) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("minimizer oracle") {
    const BlockLayout layout = BlockLayout::uniform(1, 1, 1);
    const OutputMap unit(MatrixXd::Constant(1, 1, 1.0), layout);
    // h = ½(x − 3)²: split as f = ½x² − 3x, g = 0·(y − θ)² is not allowed, so use a tiny P
    QuadraticEpoch clamp = scalar_epoch(1.0, -3.0, 1e-12, 0.0);
    CHECK(solve_minimizer(clamp, unit, BoxSet::cube(1, -1, 1)).x_star[0] == doctest::Approx(1.0));

    const QuadraticEpoch e = scalar_epoch(1.0, 0.0, 1.0, 1.0);
    const MinimizerSolution sol = solve_minimizer(e, unit, BoxSet::cube(1, -10, 10));
    CHECK(sol.x_star[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(sol.y_star[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(sol.residual <= 1e-9);

    OracleOptions tight;
    tight.max_iterations = 1;
    tight.newton_interval = 0;
    MatrixXd Q(2, 2);
    Q << 1000, 0, 0, 1;
    QuadraticEpoch hard;
    hard.Q = Q;
    hard.q = VectorXd::Constant(2, 5.0);
    hard.P = MatrixXd::Identity(2, 2);
    hard.theta = VectorXd::Constant(2, 3.0);
    const BlockLayout two = BlockLayout::uniform(2, 1, 1);
    CHECK_THROWS_AS(solve_minimizer(hard, OutputMap(MatrixXd::Identity(2, 2), two), BoxSet::cube(2, -10, 10),
                                    nullptr, tight),
                    OracleError);
}
