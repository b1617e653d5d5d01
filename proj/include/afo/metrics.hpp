#ifndef AFO_METRICS_HPP
#define AFO_METRICS_HPP

#include "afo/engine.hpp"
#include "afo/objective.hpp"
#include "afo/oracle.hpp"

#include <limits>
#include <string>
#include <vector>

namespace afo {

/// Trace-derived series over states 0..H.
///  alpha(k) = J(x(k), Cx(k); t_ℓ) − J*(t_ℓ) with ℓ = epoch_of_state(k)
///  beta(k)  = Σ_{τ=k−B}^{k−1} ‖s(τ)‖²
///  delta(k) = Σ_{τ=k−B}^{k−1} ‖q(τ)‖²
/// with s(τ) = q(τ) = 0 for τ < 0.
struct MetricSeries {
    std::vector<double> alpha;
    std::vector<double> beta;
    std::vector<double> delta;
    std::vector<double> j_star;       // per epoch
    std::vector<double> oracle_slack; // per epoch
    std::vector<long> eta;            // per epoch

    long states() const { return static_cast<long>(alpha.size()); }
};

MetricSeries compute_series(const RunTrace& trace);

/// Trailing-window sum of squared norms, the building block of β and δ.
std::vector<double> window_square_sums(const std::vector<VectorXd>& steps, int B);

/// Outcome of one inequality family lhs ≤ rhs evaluated at many ticks.
struct InequalityCheck {
    std::string name;
    long checked = 0;
    long violations = 0;
    double worst_margin = std::numeric_limits<double>::infinity();  // min(rhs + slack − lhs)
    long worst_tick = -1;
    long first_violation = -1;
    bool informational = false;  // reported but excluded from ok()

    void record(long tick, double lhs, double rhs, double slack = 0.0);
    bool ok() const { return violations == 0; }
};

struct CheckReport {
    std::vector<InequalityCheck> checks;

    bool ok() const;
    /// Null when no check carries that name.
    const InequalityCheck* find(const std::string& name) const;
    std::string to_text() const;
};

struct InvariantOptions {
    double descent_slack = 1e-9;    // relative to ‖g‖(‖s‖ + 1e-6‖x_i‖) + |rhs|
    double staleness_slack = 1e-9;  // relative to 1 + ‖x(k)‖
};

/// Replays the trace and evaluates the trace invariants at every applicable
/// tick:
///  schedule              partial-asynchrony conditions on the event schedule
///  feasibility           x(k) ∈ 𝒳
///  alpha_nonneg          α(k) ≥ −ε_oracle
///  output_step_coupling  δ(k) ≤ B²m‖C‖²β(k)
///  output_step_window    δ(k) ≤ B·m·‖C‖²·Σ_{τ=k−B}^{k−1} β(τ) (informational)
///  beta_cap              β(k) ≤ B·diam(𝒳)²
///  alpha_cap             α(0), α(B) ≤ L_J(1+‖C‖)diam(𝒳), when constants are given
///  input_staleness       ‖x^i(k) − x(k)‖ ≤ Σ_{τ=k−B}^{k−1}‖s(τ)‖
///  output_staleness      ‖y^i(k) − y(k)‖ ≤ N‖C‖·Σ_{τ=k−B}^{k−1}‖s(τ)‖
///  descent               s_i(k)ᵀ∇_{x_i}J(x^i(k), y^i(k)) ≤ −‖s_i(k)‖²/γ_ℓ
///  snapshot_replay       recorded agent copies equal the schedule replay
/// Agent copies x^i(k), y^i(k) are reconstructed from the schedule and the
/// state history; snapshots, when present, are cross-checked against them.
CheckReport check_trace_invariants(const RunTrace& trace, const MetricSeries& series,
                                   const std::vector<EpochConstants>& constants = {},
                                   const InvariantOptions& options = {});

/// Agent i's copies as used by the computation at tick k, rebuilt from the
/// schedule and x(0..k).
AgentState reconstruct_agent(const RunTrace& trace, int i, long k);

/// Brute-force minimizer of h(x) = f(x) + g(Cx) on a regular grid of the box
/// with the given spacing. Only for n ≤ 3.
VectorXd grid_minimize(const QuadraticEpoch& epoch, const OutputMap& map, const BoxSet& set, double spacing);

}  // namespace afo

#endif  // AFO_METRICS_HPP
