#ifndef AFO_ENGINE_HPP
#define AFO_ENGINE_HPP

#include "afo/asynchrony.hpp"
#include "afo/core.hpp"
#include "afo/objective.hpp"
#include "afo/oracle.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace afo {

/// Agent i's onboard copies x^i and y^i.
struct AgentState {
    VectorXd x_local;
    VectorXd y_local;
    bool operator==(const AgentState& o) const { return x_local == o.x_local && y_local == o.y_local; }
};

/// The network's true state: every agent's own input block, and y = Cx.
struct GlobalState {
    VectorXd x_true;
    VectorXd y_true;
};

/// Problem data shared by a run and everything derived from it.
struct Problem {
    BlockLayout layout;
    BoxSet set;
    OutputMap map;
};

struct StepContext {
    std::size_t epoch = 0;
    const QuadraticEpoch* current = nullptr;
    const MinimizerSolution* current_solution = nullptr;
    const QuadraticEpoch* previous = nullptr;  // null for the first epoch
    const MinimizerSolution* previous_solution = nullptr;
};

/// Chooses γ_ℓ once at the start of each epoch.
using StepPolicy = std::function<double(const StepContext&)>;

/// γ_ℓ = gammas[ℓ]; a single entry applies to every epoch.
StepPolicy fixed_steps(std::vector<double> gammas);

struct RunOptions {
    long snapshot_stride = 0;  // 0: no agent snapshots; s: every s-th tick
    OracleOptions oracle;
    BlockProjector projector;  // defaults to the box projector
};

/// Everything a run produced. States are indexed 0..H, ticks 0..H−1.
struct RunTrace {
    Problem problem;
    std::shared_ptr<const EventSchedule> schedule;
    int B = 1;
    std::vector<long> kappa;                 // per epoch
    std::vector<QuadraticEpoch> epochs;      // realized objectives
    std::vector<MinimizerSolution> minimizers;
    std::vector<double> gammas;

    std::vector<VectorXd> x_true;            // H+1 states
    std::vector<VectorXd> s;                 // per tick, length n
    std::vector<VectorXd> q;                 // per tick, length m
    std::vector<int> events_u, events_m, events_c;

    struct Snapshot {
        long tick;
        std::vector<AgentState> agents;  // copies used by tick `tick`'s computations
    };
    std::vector<Snapshot> snapshots;

    long horizon() const { return static_cast<long>(s.size()); }
    long eta(std::size_t ell) const;
    long eta_before(std::size_t ell) const { return ell == 0 ? 0 : eta(ell - 1); }
    std::size_t epoch_of_tick(long k) const;
    std::size_t epoch_of_state(long k) const;
    GlobalState global(long k) const;
};

/// One computation: own block ← Π_{X_i}[own − γ·grad_block]. Returns s_i and
/// writes the new block into `state.x_local`.
VectorXd local_update(int i, AgentState& state, const QuadraticEpoch& epoch, const Problem& problem,
                      const BlockProjector& projector, double gamma);

/// One measurement: own output block ← C_{i*}·x_true. Returns q_i.
VectorXd measure(int i, AgentState& state, const GlobalState& global, const Problem& problem);

/// Overwrites agent i's copies of block j with the payload.
void receive(int i, int j, AgentState& state, const VectorXd& x_block, const VectorXd& y_block,
             const Problem& problem);

/// Executes the asynchronous block update law over the schedule. Per tick and
/// agent: deliveries due at k, then computation, then measurement; every
/// read of network state uses the state at the start of the tick.
RunTrace run(const Problem& problem, std::shared_ptr<const EventSchedule> schedule,
             const EpochSchedule& epochs, const VectorXd& init, const StepPolicy& steps,
             const RunOptions& options = {});

}  // namespace afo

#endif  // AFO_ENGINE_HPP
