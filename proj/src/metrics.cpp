#include "afo/metrics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace afo {

namespace {

double composite_value(const MatrixXd& hessian, const VectorXd& linear, const VectorXd& x) {
    return 0.5 * x.dot(hessian * x) + linear.dot(x);
}

// Newton step restricted to the coordinates that are not held at a bound,
// followed by projection. Returns false when it does not lower h.
bool free_newton_step(const MatrixXd& hessian, const VectorXd& linear, const BoxSet& set, VectorXd& x) {
    const VectorXd grad = hessian * x + linear;
    std::vector<int> free;
    for (int j = 0; j < x.size(); ++j) {
        const bool at_lower = x[j] <= set.lower()[j] && grad[j] > 0.0;
        const bool at_upper = x[j] >= set.upper()[j] && grad[j] < 0.0;
        if (!at_lower && !at_upper) free.push_back(j);
    }
    if (free.empty()) return false;
    const int f = static_cast<int>(free.size());
    MatrixXd h_ff(f, f);
    VectorXd g_f(f);
    for (int a = 0; a < f; ++a) {
        g_f[a] = grad[free[a]];
        for (int b = 0; b < f; ++b) h_ff(a, b) = hessian(free[a], free[b]);
    }
    const VectorXd d = h_ff.llt().solve(-g_f);
    VectorXd candidate = x;
    for (int a = 0; a < f; ++a) candidate[free[a]] += d[a];
    candidate = project_box(candidate, set);
    if (composite_value(hessian, linear, candidate) < composite_value(hessian, linear, x)) {
        x = candidate;
        return true;
    }
    return false;
}

}  // namespace

MinimizerSolution solve_minimizer(const QuadraticEpoch& epoch, const OutputMap& map, const BoxSet& set,
                                  const VectorXd* warm_start, const OracleOptions& options) {
    const MatrixXd& C = map.matrix();
    const MatrixXd hessian = epoch.Q + C.transpose() * epoch.P * C;
    const VectorXd linear = epoch.q - C.transpose() * (epoch.P * epoch.theta);
    const double lmax =
        Eigen::SelfAdjointEigenSolver<MatrixXd>(hessian, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    const double step = 1.0 / lmax;

    VectorXd x = warm_start ? project_box(*warm_start, set) : project_box(0.5 * (set.lower() + set.upper()), set);
    MinimizerSolution sol;
    for (long it = 0;; ++it) {
        const VectorXd grad = hessian * x + linear;
        const double residual = (x - project_box(x - grad, set)).norm();
        if (residual <= options.tolerance * (1.0 + grad.norm())) {
            sol.residual = residual;
            sol.iterations = it;
            break;
        }
        if (it >= options.max_iterations) {
            std::ostringstream msg;
            msg << "minimizer oracle did not converge in " << options.max_iterations
                << " iterations (residual " << residual << ")";
            throw OracleError(msg.str(), residual);
        }
        x = project_box(x - step * grad, set);
        if (options.newton_interval > 0 && it % options.newton_interval == 0)
            free_newton_step(hessian, linear, set, x);
    }
    sol.x_star = x;
    sol.y_star = C * x;
    return sol;
}

double oracle_slack(const QuadraticEpoch& epoch, const MinimizerSolution& solution) {
    const double scale = std::abs(eval_f(epoch, solution.x_star)) + std::abs(eval_g(epoch, solution.y_star)) +
                         std::abs(epoch.constant_offset);
    return 1e-9 * (1.0 + scale);
}

}  // namespace afo

namespace afo {

std::vector<double> window_square_sums(const std::vector<VectorXd>& steps, int B) {
    const long h = static_cast<long>(steps.size());
    std::vector<double> sq(static_cast<std::size_t>(h));
    for (long t = 0; t < h; ++t) sq[static_cast<std::size_t>(t)] = steps[static_cast<std::size_t>(t)].squaredNorm();
    std::vector<double> out(static_cast<std::size_t>(h) + 1, 0.0);
    for (long k = 0; k <= h; ++k) {
        double sum = 0.0;
        for (long t = std::max(0L, k - B); t < k; ++t) sum += sq[static_cast<std::size_t>(t)];
        out[static_cast<std::size_t>(k)] = sum;
    }
    return out;
}

MetricSeries compute_series(const RunTrace& trace) {
    MetricSeries series;
    for (std::size_t ell = 0; ell < trace.epochs.size(); ++ell) {
        const auto& sol = trace.minimizers[ell];
        series.j_star.push_back(eval_J(trace.epochs[ell], sol.x_star, sol.y_star));
        series.oracle_slack.push_back(oracle_slack(trace.epochs[ell], sol));
        series.eta.push_back(trace.eta(ell));
    }
    const MatrixXd& C = trace.problem.map.matrix();
    const long states = static_cast<long>(trace.x_true.size());
    series.alpha.resize(static_cast<std::size_t>(states));
    std::size_t ell = 0;
    for (long k = 0; k < states; ++k) {
        while (k > 0 && k > series.eta[ell]) ++ell;
        const VectorXd& x = trace.x_true[static_cast<std::size_t>(k)];
        series.alpha[static_cast<std::size_t>(k)] = eval_J(trace.epochs[ell], x, C * x) - series.j_star[ell];
    }
    series.beta = window_square_sums(trace.s, trace.B);
    series.delta = window_square_sums(trace.q, trace.B);
    return series;
}

void InequalityCheck::record(long tick, double lhs, double rhs, double slack) {
    ++checked;
    const double margin = rhs + slack - lhs;
    if (margin < worst_margin) {
        worst_margin = margin;
        worst_tick = tick;
    }
    if (margin < 0.0 || std::isnan(margin)) {
        if (violations == 0) first_violation = tick;
        ++violations;
    }
}

bool CheckReport::ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.informational || c.ok(); });
}

const InequalityCheck* CheckReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

std::string CheckReport::to_text() const {
    std::ostringstream out;
    out.precision(17);
    for (const auto& c : checks) {
        out << c.name << (c.informational ? " [info]" : "") << ": " << (c.ok() ? "pass" : "FAIL")
            << " checked=" << c.checked << " violations=" << c.violations;
        if (c.checked > 0) out << " worst_margin=" << c.worst_margin << " at=" << c.worst_tick;
        if (c.violations > 0) out << " first_violation=" << c.first_violation;
        out << '\n';
    }
    return out.str();
}

AgentState reconstruct_agent(const RunTrace& trace, int i, long k) {
    const EventSchedule& s = *trace.schedule;
    const BlockLayout& layout = trace.problem.layout;
    const OutputMap& map = trace.problem.map;
    AgentState a{VectorXd(layout.n()), VectorXd(layout.m())};
    for (int j = 0; j < layout.agents(); ++j) {
        const long tau = staleness_at(s, i, j, k);
        const long mu = i == j ? (k == 0 ? 0 : s.latest_measurement(i, k - 1)) : s.latest_measurement(j, tau);
        a.x_local.segment(layout.input_offset(j), layout.input_dim(j)) =
            trace.x_true[static_cast<std::size_t>(tau)].segment(layout.input_offset(j), layout.input_dim(j));
        a.y_local.segment(layout.output_offset(j), layout.output_dim(j)) =
            map.row_block(j) * trace.x_true[static_cast<std::size_t>(mu)];
    }
    return a;
}

CheckReport check_trace_invariants(const RunTrace& trace, const MetricSeries& series,
                                   const std::vector<EpochConstants>& constants, const InvariantOptions& options) {
    const Problem& pr = trace.problem;
    const BlockLayout& layout = pr.layout;
    const int B = trace.B;
    const int N = layout.agents();
    const double norm_c = pr.map.norm();
    const double diam = diameter(pr.set);
    const long horizon = trace.horizon();

    InequalityCheck schedule{"schedule"}, feasible{"feasibility"}, nonneg{"alpha_nonneg"}, qbound{"output_step_coupling"},
        qwindow{"output_step_window"}, beta_cap{"beta_cap"}, alpha_cap{"alpha_cap"}, out_of_date{"input_staleness"},
        meas{"output_staleness"}, descent{"descent"}, replay{"snapshot_replay"};
    qwindow.informational = true;

    const ScheduleVerdict verdict = verify_schedule(*trace.schedule);
    schedule.checked = 1;
    schedule.violations = static_cast<long>(verdict.violations.size());
    schedule.worst_margin = verdict.ok() ? 0.0 : -1.0;
    if (!verdict.ok()) schedule.first_violation = schedule.worst_tick = verdict.violations.front().tick;

    for (long k = 0; k <= horizon; ++k) {
        const VectorXd& x = trace.x_true[static_cast<std::size_t>(k)];
        const double excess = std::max((pr.set.lower() - x).maxCoeff(), (x - pr.set.upper()).maxCoeff());
        feasible.record(k, excess, 0.0);
        const std::size_t ell = trace.epoch_of_state(k);
        nonneg.record(k, -series.alpha[static_cast<std::size_t>(k)], series.oracle_slack[ell]);
    }

    const double q_factor = static_cast<double>(B) * B * layout.m() * norm_c * norm_c;
    const double beta_max = B * diam * diam;
    for (long k = 0; k <= horizon; ++k) {
        const double beta = series.beta[static_cast<std::size_t>(k)];
        const double delta = series.delta[static_cast<std::size_t>(k)];
        const double round = 1e-12 * (1.0 + delta);
        qbound.record(k, delta, q_factor * beta, round);
        double beta_sum = 0.0;
        for (long t = std::max(0L, k - B); t < k; ++t) beta_sum += series.beta[static_cast<std::size_t>(t)];
        qwindow.record(k, delta, static_cast<double>(B) * layout.m() * norm_c * norm_c * beta_sum, round);
        beta_cap.record(k, beta, beta_max, 1e-12 * (1.0 + beta_max));
    }

    if (!constants.empty()) {
        const double cap = constants.front().L_J * (1.0 + norm_c) * diam;
        for (long k : {0L, static_cast<long>(B)})
            if (k <= horizon) alpha_cap.record(k, series.alpha[static_cast<std::size_t>(k)], cap, series.oracle_slack[0]);
    }

    std::vector<double> step_norm(static_cast<std::size_t>(horizon));
    for (long t = 0; t < horizon; ++t) step_norm[static_cast<std::size_t>(t)] = trace.s[static_cast<std::size_t>(t)].norm();
    std::size_t snap = 0;
    for (long k = 0; k < horizon; ++k) {
        const VectorXd& x = trace.x_true[static_cast<std::size_t>(k)];
        const VectorXd y = pr.map.matrix() * x;
        double window = 0.0;
        for (long t = std::max(0L, k - B); t < k; ++t) window += step_norm[static_cast<std::size_t>(t)];
        const double slack = options.staleness_slack * (1.0 + x.norm());
        const std::size_t ell = trace.epoch_of_tick(k);
        const double gamma = trace.gammas[ell];
        const bool has_snap = snap < trace.snapshots.size() && trace.snapshots[snap].tick == k;
        for (int i = 0; i < N; ++i) {
            const AgentState a = reconstruct_agent(trace, i, k);
            out_of_date.record(k, (a.x_local - x).norm(), window, slack);
            meas.record(k, (a.y_local - y).norm(), N * norm_c * window, slack * (1.0 + norm_c));
            if (has_snap) {
                const AgentState& rec = trace.snapshots[snap].agents[static_cast<std::size_t>(i)];
                const double diff = std::max((rec.x_local - a.x_local).lpNorm<Eigen::Infinity>(),
                                             (rec.y_local - a.y_local).lpNorm<Eigen::Infinity>());
                replay.record(k, diff, 0.0);
            }
            if (trace.schedule->computes(i, k)) {
                const VectorXd si = trace.s[static_cast<std::size_t>(k)].segment(layout.input_offset(i),
                                                                                  layout.input_dim(i));
                const VectorXd g = grad_block(trace.epochs[ell], pr.map, layout, i, a.x_local, a.y_local);
                const double lhs = si.dot(g);
                const double rhs = -si.squaredNorm() / gamma;
                const double scale = g.norm() * (si.norm() + 1e-6 * x.segment(layout.input_offset(i), layout.input_dim(i)).norm());
                descent.record(k, lhs, rhs, options.descent_slack * (1.0 + scale + std::abs(rhs)));
            }
        }
        if (has_snap) ++snap;
    }

    CheckReport report;
    report.checks = {schedule, feasible, nonneg, qbound, qwindow, beta_cap, out_of_date, meas, descent};
    if (!constants.empty()) report.checks.push_back(alpha_cap);
    if (!trace.snapshots.empty()) report.checks.push_back(replay);
    return report;
}

VectorXd grid_minimize(const QuadraticEpoch& epoch, const OutputMap& map, const BoxSet& set, double spacing) {
    const int n = set.dim();
    if (n < 1 || n > 3) throw std::invalid_argument("grid_minimize: only 1 to 3 dimensions are supported");
    if (!(spacing > 0.0)) throw std::invalid_argument("grid_minimize: spacing must be positive");
    std::vector<long> counts(static_cast<std::size_t>(n));
    for (int d = 0; d < n; ++d)
        counts[static_cast<std::size_t>(d)] =
            static_cast<long>(std::floor((set.upper()[d] - set.lower()[d]) / spacing + 1e-9)) + 1;
    const MatrixXd& C = map.matrix();
    const MatrixXd hessian = epoch.Q + C.transpose() * epoch.P * C;
    const VectorXd linear = epoch.q - C.transpose() * (epoch.P * epoch.theta);
    VectorXd best = set.lower();
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<long> idx(static_cast<std::size_t>(n), 0);
    VectorXd x(n);
    while (true) {
        for (int d = 0; d < n; ++d)
            x[d] = std::min(set.upper()[d], set.lower()[d] + spacing * static_cast<double>(idx[static_cast<std::size_t>(d)]));
        const double v = 0.5 * x.dot(hessian * x) + linear.dot(x);
        if (v < best_val) {
            best_val = v;
            best = x;
        }
        int d = 0;
        while (d < n && ++idx[static_cast<std::size_t>(d)] == counts[static_cast<std::size_t>(d)]) {
            idx[static_cast<std::size_t>(d)] = 0;
            ++d;
        }
        if (d == n) break;
    }
    return best;
}

}  // namespace afo
