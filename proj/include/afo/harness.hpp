#ifndef AFO_HARNESS_HPP
#define AFO_HARNESS_HPP

#include "afo/asynchrony.hpp"
#include "afo/config.hpp"
#include "afo/engine.hpp"
#include "afo/metrics.hpp"
#include "afo/objective.hpp"
#include "afo/theory.hpp"

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace afo {

/// Inputs of one engine run, materialized from a config.
struct Experiment {
    Problem problem;
    std::shared_ptr<const EventSchedule> schedule;
    EpochSchedule epochs;
    VectorXd init;
    StepPolicy steps;
    RunOptions options;
};

Experiment build_experiment(const SimConfig& cfg);

/// Random SPD instance: Q = AᵀA + I, P likewise, q and p standard normal,
/// drawn from the `problem` substream of (seed, ell + 1).
QuadraticEpoch random_qp_epoch(const BlockLayout& layout, std::uint64_t seed, std::size_t ell);
/// C with standard normal entries scaled by 1/√n, from substream (seed, 0).
MatrixXd random_output_matrix(const BlockLayout& layout, std::uint64_t seed);

/// Pieces of the aircraft formation problem.
namespace aircraft {
constexpr int kInputs = 5;   // velocity, angle of attack, pitch, pitch rate, altitude
constexpr int kOutputs = 2;  // acceleration, altitude
MatrixXd output_block();
VectorXd trim_state();
VectorXd state_lower();
VectorXd state_upper();
/// Altitude differences ξ_i − ξ_{i+1}, (N−1) × 5N.
MatrixXd separation_selector(int agents);
/// Desired altitude at epoch ell.
double desired_altitude(std::size_t ell, double sample_time);
/// f(x) = ½xᵀ(100I + SᵀRS)x − (SᵀRω)ᵀx and P; θ is filled in by the generator.
QuadraticEpoch base_epoch(int agents);
/// Builds epoch ell from the agents' local altitude copies at the boundary.
EpochGenerator generator(int agents, double sample_time, double accel_gain);
}  // namespace aircraft

struct ExperimentSummary {
    std::string config_hash;
    std::vector<double> alpha_at_eta;
    std::vector<double> alpha_post_change;
    double mean_alpha = 0.0;          // time average over states 0..H
    std::vector<double> final_output_error;  // per local output index, 2-norm across agents
    bool invariants_ok = false;
    std::optional<bool> bounds_ok;    // empty when the step size is outside (0, γ_max)
    std::string bounds_note;
    double wall_seconds = 0.0;
};

struct RunArtifacts {
    SimConfig config;
    RunTrace trace;
    MetricSeries series;
    TheoryReport theory;
    CheckReport invariants;
    std::optional<CheckReport> bounds;
    ExperimentSummary summary;
};

struct ExperimentOptions {
    bool check_invariants = true;
    bool evaluate_theory = true;
};

RunArtifacts run_experiment(const SimConfig& cfg, const ExperimentOptions& options = {});

/// Writes config.txt, schedule.txt, trace.csv, epochs.csv, constants.txt,
/// invariants.txt, bounds.txt, summary.json and trace.json into `dir`.
void write_artifacts(const RunArtifacts& run, const std::filesystem::path& dir);

/// One row per tick k = 0..H−1, or every `stride`-th tick.
void write_trace_csv(std::ostream& out, const RunTrace& trace, const MetricSeries& series, long stride = 1);
void write_epochs_csv(std::ostream& out, const RunTrace& trace, const MetricSeries& series);

/// Reloads a directory written by write_artifacts into a trace that the
/// metric and invariant checks accept.
RunTrace load_trace(const std::filesystem::path& dir);

struct SweepPoint {
    std::string value;
    std::vector<double> mean_alpha;  // one per seed
    double average() const;
};

/// Runs every (value, seed) combination concurrently. `key` is overridden with
/// each value and `seed` with base_seed + s. When `out` is set, each run writes
/// its artifacts to out/<key>=<value>/seed=<seed>.
std::vector<SweepPoint> sweep(const KeyValueConfig& base, const std::string& key,
                              const std::vector<std::string>& values, int seeds,
                              const std::optional<std::filesystem::path>& out = std::nullopt,
                              const ExperimentOptions& options = {false, false});

/// Default output root: $AFO_OUTPUT_ROOT, else ./afo-out.
std::filesystem::path default_output_root();

}  // namespace afo

#endif  // AFO_HARNESS_HPP
