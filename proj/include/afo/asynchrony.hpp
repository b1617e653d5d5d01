#ifndef AFO_ASYNCHRONY_HPP
#define AFO_ASYNCHRONY_HPP

#include "afo/core.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace afo {

/// A payload from agent j that agent i receives at `receive`; it carries j's
/// state as of tick `origin`.
struct Delivery {
    long receive = 0;
    long origin = 0;
    bool operator==(const Delivery&) const = default;
};

/// Which ticks each agent computes and measures on, and what it receives from
/// every other agent. Ticks run over [0, horizon).
///
/// Held-value conventions used throughout:
///  - τ^i_j(k): origin of the latest (j→i) delivery received at or before k,
///    0 before any delivery; τ^i_i(k) = k.
///  - μ^i_i(k): latest measurement tick of i at or before k (0 if none).
///  - μ^i_j(k): latest measurement tick of j at or before τ^i_j(k).
class EventSchedule {
public:
    EventSchedule() = default;
    EventSchedule(long horizon, int B, std::vector<std::vector<long>> compute_ticks,
                  std::vector<std::vector<long>> measure_ticks,
                  std::vector<std::vector<Delivery>> deliveries);

    long horizon() const { return horizon_; }
    int B() const { return B_; }
    int agents() const { return static_cast<int>(compute_.size()); }

    const std::vector<long>& compute_ticks(int i) const { return compute_.at(static_cast<std::size_t>(i)); }
    const std::vector<long>& measure_ticks(int i) const { return measure_.at(static_cast<std::size_t>(i)); }
    /// Deliveries on the ordered pair (from → to), sorted by receive tick.
    const std::vector<Delivery>& deliveries(int from, int to) const;

    bool computes(int i, long k) const;
    bool measures(int i, long k) const;
    /// Latest measurement tick of agent i that is ≤ k; 0 if there is none.
    long latest_measurement(int i, long k) const;

    bool operator==(const EventSchedule& other) const;

private:
    void build_index();

    long horizon_ = 0;
    int B_ = 1;
    std::vector<std::vector<long>> compute_;
    std::vector<std::vector<long>> measure_;
    std::vector<std::vector<Delivery>> deliveries_;  // index from * N + to
    std::vector<std::vector<char>> compute_flag_;
    std::vector<std::vector<char>> measure_flag_;
    std::vector<std::vector<long>> latest_measure_;
};

struct AsyncConfig {
    int B = 1;
    std::vector<double> p_update;
    std::vector<double> p_measure;
    std::vector<double> p_communicate;
    int delay_max = 0;
    std::uint64_t seed = 0;

    /// Same probabilities for every agent.
    static AsyncConfig uniform(int agents, int B, double p_update, double p_measure,
                               double p_communicate, int delay_max, std::uint64_t seed);

    /// Throws std::invalid_argument when a probability is outside [0, 1],
    /// delay_max is outside [0, B−1] or the per-agent lists have the wrong size.
    void validate(int agents) const;
};

/// Draws Bernoulli events per agent and tick from per-agent substreams, then
/// forces a compute (measure) at the last tick of any otherwise uncovered
/// B-window and a zero-delay delivery whenever a held copy would become
/// more than B−1 ticks stale.
EventSchedule generate_schedule(const AsyncConfig& cfg, const BlockLayout& layout, long horizon);

struct ScheduleViolation {
    enum class Kind { compute_window, measure_window, input_staleness, output_staleness, causality,
                      reordering, malformed };
    Kind kind;
    int agent = -1;  // receiving / owning agent
    int other = -1;  // sending agent for delivery-related findings
    long tick = -1;
    std::string detail;
};

const char* to_string(ScheduleViolation::Kind kind);

struct ScheduleVerdict {
    std::vector<ScheduleViolation> violations;
    bool ok() const { return violations.empty(); }
};

/// Independent checker: replays the delivery lists and reports every
/// window-coverage, freshness, causality and ordering violation.
ScheduleVerdict verify_schedule(const EventSchedule& s);

/// τ^i_j(k).
long staleness_at(const EventSchedule& s, int i, int j, long k);
/// μ^i_j(k).
long measurement_staleness_at(const EventSchedule& s, int i, int j, long k);

/// Line-oriented text form: a header followed by one event per line
/// (`compute i k`, `measure i k`, `deliver j i receive origin`).
void write_schedule(std::ostream& out, const EventSchedule& s);
EventSchedule read_schedule(std::istream& in);

}  // namespace afo

#endif  // AFO_ASYNCHRONY_HPP
