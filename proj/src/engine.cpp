#include "afo/engine.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace afo {

StepPolicy fixed_steps(std::vector<double> gammas) {
    if (gammas.empty()) throw std::invalid_argument("fixed_steps: no step sizes");
    for (double g : gammas)
        if (!(g > 0.0)) throw std::invalid_argument("fixed_steps: step sizes must be positive");
    return [gammas = std::move(gammas)](const StepContext& ctx) {
        return gammas.size() == 1 ? gammas.front() : gammas.at(ctx.epoch);
    };
}

long RunTrace::eta(std::size_t ell) const {
    long eta = 0;
    for (std::size_t i = 0; i <= ell; ++i) eta += kappa.at(i);
    return eta;
}

std::size_t RunTrace::epoch_of_tick(long k) const {
    long eta = 0;
    for (std::size_t ell = 0; ell < kappa.size(); ++ell) {
        eta += kappa[ell];
        if (k < eta) return ell;
    }
    throw std::out_of_range("tick " + std::to_string(k) + " outside trace");
}

std::size_t RunTrace::epoch_of_state(long k) const {
    if (k <= 0) return 0;
    long eta = 0;
    for (std::size_t ell = 0; ell < kappa.size(); ++ell) {
        eta += kappa[ell];
        if (k <= eta) return ell;
    }
    throw std::out_of_range("state " + std::to_string(k) + " outside trace");
}

GlobalState RunTrace::global(long k) const {
    const VectorXd& x = x_true.at(static_cast<std::size_t>(k));
    return {x, problem.map.matrix() * x};
}

VectorXd local_update(int i, AgentState& state, const QuadraticEpoch& epoch, const Problem& problem,
                      const BlockProjector& projector, double gamma) {
    const int off = problem.layout.input_offset(i);
    const int len = problem.layout.input_dim(i);
    const VectorXd grad = grad_block(epoch, problem.map, problem.layout, i, state.x_local, state.y_local);
    const VectorXd old = state.x_local.segment(off, len);
    const VectorXd next = projector(i, old - gamma * grad);
    state.x_local.segment(off, len) = next;
    return next - old;
}

VectorXd measure(int i, AgentState& state, const GlobalState& global, const Problem& problem) {
    const int off = problem.layout.output_offset(i);
    const int len = problem.layout.output_dim(i);
    const VectorXd fresh = problem.map.row_block(i) * global.x_true;
    const VectorXd delta = fresh - state.y_local.segment(off, len);
    state.y_local.segment(off, len) = fresh;
    return delta;
}

void receive(int i, int j, AgentState& state, const VectorXd& x_block, const VectorXd& y_block,
             const Problem& problem) {
    (void)i;
    state.x_local.segment(problem.layout.input_offset(j), problem.layout.input_dim(j)) = x_block;
    state.y_local.segment(problem.layout.output_offset(j), problem.layout.output_dim(j)) = y_block;
}

RunTrace run(const Problem& problem, std::shared_ptr<const EventSchedule> schedule,
             const EpochSchedule& epochs, const VectorXd& init, const StepPolicy& steps,
             const RunOptions& options) {
    const BlockLayout& layout = problem.layout;
    const int agents = layout.agents();
    if (!schedule) throw std::invalid_argument("run: no schedule");
    if (schedule->agents() != agents) throw std::invalid_argument("run: schedule agent count differs from layout");
    if (schedule->horizon() != epochs.horizon())
        throw std::invalid_argument("run: schedule horizon " + std::to_string(schedule->horizon()) +
                                    " differs from epoch horizon " + std::to_string(epochs.horizon()));
    if (init.size() != layout.n()) throw std::invalid_argument("run: init has wrong length");
    if (!problem.set.contains(init)) throw std::invalid_argument("run: initial point is not in the constraint set");

    const BlockProjector projector = options.projector ? options.projector : box_projector(problem.set, layout);
    const MatrixXd& C = problem.map.matrix();
    const long horizon = epochs.horizon();

    RunTrace trace;
    trace.problem = problem;
    trace.schedule = schedule;
    trace.B = epochs.B();
    for (std::size_t ell = 0; ell < epochs.count(); ++ell) trace.kappa.push_back(epochs.kappa(ell));
    trace.x_true.reserve(static_cast<std::size_t>(horizon) + 1);
    trace.s.reserve(static_cast<std::size_t>(horizon));
    trace.q.reserve(static_cast<std::size_t>(horizon));
    trace.x_true.push_back(init);

    std::vector<AgentState> agents_state(static_cast<std::size_t>(agents), AgentState{init, C * init});
    std::vector<std::size_t> cursor(static_cast<std::size_t>(agents * agents), 0);

    std::size_t ell = 0;
    for (long k = 0; k < horizon; ++k) {
        const VectorXd& x_now = trace.x_true.back();
        if (k == 0 || k == epochs.eta(ell)) {
            if (k != 0) ++ell;
            const EpochSource& src = epochs.source(ell);
            QuadraticEpoch epoch;
            if (const auto* fixed = std::get_if<QuadraticEpoch>(&src)) {
                epoch = *fixed;
            } else {
                std::vector<VectorXd> xs, ys;
                for (const auto& a : agents_state) {
                    xs.push_back(a.x_local);
                    ys.push_back(a.y_local);
                }
                BoundaryView view{ell, k, &layout, x_now, xs, ys};
                epoch = std::get<EpochGenerator>(src)(view);
            }
            epoch.validate(layout);
            const VectorXd* warm = trace.minimizers.empty() ? nullptr : &trace.minimizers.back().x_star;
            MinimizerSolution sol = solve_minimizer(epoch, problem.map, problem.set, warm, options.oracle);
            trace.epochs.push_back(std::move(epoch));
            trace.minimizers.push_back(std::move(sol));
            StepContext ctx{ell, &trace.epochs.back(), &trace.minimizers.back(),
                            ell ? &trace.epochs[ell - 1] : nullptr, ell ? &trace.minimizers[ell - 1] : nullptr};
            const double gamma = steps(ctx);
            if (!(gamma > 0.0)) throw std::invalid_argument("run: step size must be positive");
            trace.gammas.push_back(gamma);
        }
        const QuadraticEpoch& epoch = trace.epochs.back();
        const double gamma = trace.gammas.back();

        int n_comm = 0;
        for (int i = 0; i < agents; ++i) {
            for (int j = 0; j < agents; ++j) {
                if (i == j) continue;
                const auto& list = schedule->deliveries(j, i);
                auto& c = cursor[static_cast<std::size_t>(j * agents + i)];
                while (c < list.size() && list[c].receive <= k) {
                    const long origin = list[c].origin;
                    const VectorXd& x_origin = trace.x_true.at(static_cast<std::size_t>(origin));
                    const VectorXd& x_measured =
                        trace.x_true.at(static_cast<std::size_t>(schedule->latest_measurement(j, origin)));
                    receive(i, j, agents_state[static_cast<std::size_t>(i)],
                            x_origin.segment(layout.input_offset(j), layout.input_dim(j)),
                            problem.map.row_block(j) * x_measured, problem);
                    ++c;
                    ++n_comm;
                }
            }
        }
        if (options.snapshot_stride > 0 && k % options.snapshot_stride == 0)
            trace.snapshots.push_back({k, agents_state});

        VectorXd s_k = VectorXd::Zero(layout.n());
        VectorXd x_next = x_now;
        int n_upd = 0;
        for (int i = 0; i < agents; ++i) {
            if (!schedule->computes(i, k)) continue;
            auto& a = agents_state[static_cast<std::size_t>(i)];
            const int off = layout.input_offset(i);
            const int len = layout.input_dim(i);
            s_k.segment(off, len) = local_update(i, a, epoch, problem, projector, gamma);
            x_next.segment(off, len) = a.x_local.segment(off, len);
            ++n_upd;
        }

        VectorXd q_k = VectorXd::Zero(layout.m());
        const GlobalState now{x_now, VectorXd()};
        int n_meas = 0;
        for (int i = 0; i < agents; ++i) {
            if (!schedule->measures(i, k)) continue;
            q_k.segment(layout.output_offset(i), layout.output_dim(i)) =
                measure(i, agents_state[static_cast<std::size_t>(i)], now, problem);
            ++n_meas;
        }

        trace.s.push_back(std::move(s_k));
        trace.q.push_back(std::move(q_k));
        trace.events_u.push_back(n_upd);
        trace.events_m.push_back(n_meas);
        trace.events_c.push_back(n_comm);
        trace.x_true.push_back(std::move(x_next));
    }
    return trace;
}

}  // namespace afo
