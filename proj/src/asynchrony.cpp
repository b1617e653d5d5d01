#include "afo/asynchrony.hpp"

#include "afo/rng.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace afo {

EventSchedule::EventSchedule(long horizon, int B, std::vector<std::vector<long>> compute_ticks,
                             std::vector<std::vector<long>> measure_ticks,
                             std::vector<std::vector<Delivery>> deliveries)
    : horizon_(horizon),
      B_(B),
      compute_(std::move(compute_ticks)),
      measure_(std::move(measure_ticks)),
      deliveries_(std::move(deliveries)) {
    if (horizon_ < 0 || B_ < 1) throw std::invalid_argument("EventSchedule: bad horizon or B");
    const std::size_t n = compute_.size();
    if (measure_.size() != n || deliveries_.size() != n * n)
        throw std::invalid_argument("EventSchedule: per-agent tables have inconsistent sizes");
    build_index();
}

// Malformed entries (out-of-range ticks) are kept in the raw lists so that
// verify_schedule can report them; the index simply ignores them.
void EventSchedule::build_index() {
    const auto h = static_cast<std::size_t>(horizon_);
    compute_flag_.assign(compute_.size(), std::vector<char>(h, 0));
    measure_flag_.assign(measure_.size(), std::vector<char>(h, 0));
    latest_measure_.assign(measure_.size(), std::vector<long>(h, 0));
    for (std::size_t i = 0; i < compute_.size(); ++i) {
        for (long k : compute_[i])
            if (k >= 0 && k < horizon_) compute_flag_[i][static_cast<std::size_t>(k)] = 1;
        for (long k : measure_[i])
            if (k >= 0 && k < horizon_) measure_flag_[i][static_cast<std::size_t>(k)] = 1;
        long last = 0;
        for (std::size_t k = 0; k < h; ++k) {
            if (measure_flag_[i][k]) last = static_cast<long>(k);
            latest_measure_[i][k] = last;
        }
    }
}

const std::vector<Delivery>& EventSchedule::deliveries(int from, int to) const {
    const int n = agents();
    if (from < 0 || from >= n || to < 0 || to >= n) throw std::out_of_range("deliveries: agent index");
    return deliveries_[static_cast<std::size_t>(from * n + to)];
}

bool EventSchedule::computes(int i, long k) const {
    return compute_flag_.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(k)) != 0;
}

bool EventSchedule::measures(int i, long k) const {
    return measure_flag_.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(k)) != 0;
}

long EventSchedule::latest_measurement(int i, long k) const {
    return latest_measure_.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(k));
}

bool EventSchedule::operator==(const EventSchedule& other) const {
    return horizon_ == other.horizon_ && B_ == other.B_ && compute_ == other.compute_ &&
           measure_ == other.measure_ && deliveries_ == other.deliveries_;
}

AsyncConfig AsyncConfig::uniform(int agents, int B, double p_update, double p_measure,
                                 double p_communicate, int delay_max, std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(agents);
    return AsyncConfig{B, std::vector<double>(n, p_update), std::vector<double>(n, p_measure),
                       std::vector<double>(n, p_communicate), delay_max, seed};
}

void AsyncConfig::validate(int agents) const {
    if (B < 1) throw std::invalid_argument("AsyncConfig: B must be a positive integer");
    if (delay_max < 0 || delay_max > B - 1)
        throw std::invalid_argument("AsyncConfig: delay_max must lie in [0, B-1]");
    const auto n = static_cast<std::size_t>(agents);
    for (const auto* probs : {&p_update, &p_measure, &p_communicate}) {
        if (probs->size() != n)
            throw std::invalid_argument("AsyncConfig: expected one probability per agent");
        for (double p : *probs)
            if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("AsyncConfig: probability outside [0,1]");
    }
}

namespace {

std::vector<long> draw_covered_ticks(double p, int B, long horizon, Rng rng) {
    std::vector<long> ticks;
    long last = -1;
    for (long k = 0; k < horizon; ++k) {
        const bool drawn = rng.bernoulli(p);
        if (drawn || k - last >= B) {
            ticks.push_back(k);
            last = k;
        }
    }
    return ticks;
}

}  // namespace

EventSchedule generate_schedule(const AsyncConfig& cfg, const BlockLayout& layout, long horizon) {
    const int n = layout.agents();
    cfg.validate(n);
    if (horizon < cfg.B)
        throw std::invalid_argument("generate_schedule: horizon " + std::to_string(horizon) +
                                    " is shorter than B=" + std::to_string(cfg.B));
    const int B = cfg.B;
    const auto un = static_cast<std::size_t>(n);

    std::vector<std::vector<long>> compute(un), measure(un);
    for (int i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        compute[ui] = draw_covered_ticks(cfg.p_update[ui], B, horizon, Rng(cfg.seed, ui, Stream::compute));
        measure[ui] = draw_covered_ticks(cfg.p_measure[ui], B, horizon, Rng(cfg.seed, ui, Stream::measure));
    }

    // latest measurement ≤ t for each sender, for the output-freshness rule.
    std::vector<std::vector<long>> latest(un, std::vector<long>(static_cast<std::size_t>(horizon), 0));
    for (std::size_t j = 0; j < un; ++j) {
        std::size_t next = 0;
        long last = 0;
        for (long t = 0; t < horizon; ++t) {
            if (next < measure[j].size() && measure[j][next] == t) {
                last = t;
                ++next;
            }
            latest[j][static_cast<std::size_t>(t)] = last;
        }
    }

    std::vector<std::vector<Delivery>> deliveries(un * un);
    for (int j = 0; j < n; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        Rng send_rng(cfg.seed, uj, Stream::communicate);
        Rng delay_rng(cfg.seed, uj, Stream::delay);
        // best origin arriving at each tick, per receiver
        std::vector<std::vector<long>> arriving(un, std::vector<long>(static_cast<std::size_t>(horizon), -1));
        for (long k = 0; k < horizon; ++k) {
            if (!send_rng.bernoulli(cfg.p_communicate[uj])) continue;
            for (int i = 0; i < n; ++i) {
                if (i == j) continue;
                const long receive = k + delay_rng.uniform_int(0, cfg.delay_max);
                if (receive >= horizon) continue;
                auto& slot = arriving[static_cast<std::size_t>(i)][static_cast<std::size_t>(receive)];
                slot = std::max(slot, k);
            }
        }
        for (int i = 0; i < n; ++i) {
            if (i == j) continue;
            auto& list = deliveries[uj * un + static_cast<std::size_t>(i)];
            const auto& arr = arriving[static_cast<std::size_t>(i)];
            long held = 0;
            for (long k = 0; k < horizon; ++k) {
                const long candidate = arr[static_cast<std::size_t>(k)];
                // A payload older than what is already held is discarded.
                if (candidate > held) {
                    list.push_back({k, candidate});
                    held = candidate;
                }
                const bool stale_input = k - held > B - 1;
                const bool stale_output = k - latest[uj][static_cast<std::size_t>(held)] > B - 1;
                if (stale_input || stale_output) {
                    if (!list.empty() && list.back().receive == k)
                        list.back().origin = k;
                    else
                        list.push_back({k, k});
                    held = k;
                }
            }
        }
    }
    return EventSchedule(horizon, B, std::move(compute), std::move(measure), std::move(deliveries));
}

const char* to_string(ScheduleViolation::Kind kind) {
    switch (kind) {
        case ScheduleViolation::Kind::compute_window: return "compute_window";
        case ScheduleViolation::Kind::measure_window: return "measure_window";
        case ScheduleViolation::Kind::input_staleness: return "input_staleness";
        case ScheduleViolation::Kind::output_staleness: return "output_staleness";
        case ScheduleViolation::Kind::causality: return "causality";
        case ScheduleViolation::Kind::reordering: return "reordering";
        case ScheduleViolation::Kind::malformed: return "malformed";
    }
    return "unknown";
}

namespace {

using Kind = ScheduleViolation::Kind;

void check_ticks(const std::vector<long>& ticks, int agent, long horizon, int B, Kind window_kind,
                 std::vector<ScheduleViolation>& out) {
    for (std::size_t idx = 0; idx < ticks.size(); ++idx) {
        if (ticks[idx] < 0 || ticks[idx] >= horizon)
            out.push_back({Kind::malformed, agent, -1, ticks[idx], "event tick outside horizon"});
        if (idx > 0 && ticks[idx] <= ticks[idx - 1])
            out.push_back({Kind::malformed, agent, -1, ticks[idx], "event ticks not strictly increasing"});
    }
    // Every window {k, …, k+B−1} with k+B−1 < horizon must contain an event.
    std::vector<char> present(static_cast<std::size_t>(horizon), 0);
    for (long t : ticks)
        if (t >= 0 && t < horizon) present[static_cast<std::size_t>(t)] = 1;
    for (long k = 0; k + B - 1 < horizon; ++k) {
        bool covered = false;
        for (long t = k; t < k + B && !covered; ++t) covered = present[static_cast<std::size_t>(t)] != 0;
        if (!covered) out.push_back({window_kind, agent, -1, k, "no event in window of length B"});
    }
}

}  // namespace

ScheduleVerdict verify_schedule(const EventSchedule& s) {
    ScheduleVerdict verdict;
    auto& out = verdict.violations;
    const int n = s.agents();
    const long h = s.horizon();
    const int B = s.B();

    for (int i = 0; i < n; ++i) {
        check_ticks(s.compute_ticks(i), i, h, B, Kind::compute_window, out);
        check_ticks(s.measure_ticks(i), i, h, B, Kind::measure_window, out);
    }

    // Own measurement freshness, replayed from the raw measurement list.
    for (int i = 0; i < n; ++i) {
        const auto& ticks = s.measure_ticks(i);
        std::size_t next = 0;
        long last = 0;
        for (long k = 0; k < h; ++k) {
            while (next < ticks.size() && ticks[next] <= k) last = std::max(last, ticks[next++]);
            if (last < std::max(0L, k - B + 1))
                out.push_back({Kind::output_staleness, i, i, k, "own measurement older than B-1 ticks"});
        }
    }

    for (int j = 0; j < n; ++j) {
        std::vector<long> meas = s.measure_ticks(j);
        std::sort(meas.begin(), meas.end());
        for (int i = 0; i < n; ++i) {
            if (i == j) continue;
            const auto& list = s.deliveries(j, i);
            for (std::size_t d = 0; d < list.size(); ++d) {
                if (list[d].origin > list[d].receive)
                    out.push_back({Kind::causality, i, j, list[d].receive,
                                   "payload origin " + std::to_string(list[d].origin) + " after receipt"});
                if (list[d].receive < 0 || list[d].receive >= h || list[d].origin < 0)
                    out.push_back({Kind::malformed, i, j, list[d].receive, "delivery tick outside horizon"});
                if (d > 0 && list[d].receive < list[d - 1].receive)
                    out.push_back({Kind::malformed, i, j, list[d].receive, "deliveries not sorted by receive tick"});
                if (d > 0 && list[d].origin < list[d - 1].origin)
                    out.push_back({Kind::reordering, i, j, list[d].receive, "payload origin decreased"});
            }
            // Forward replay of the held copy on (j → i).
            std::size_t next = 0;
            long held = 0;
            for (long k = 0; k < h; ++k) {
                while (next < list.size() && list[next].receive <= k) held = list[next++].origin;
                const long floor = std::max(0L, k - B + 1);
                if (held < floor || held > k)
                    out.push_back({Kind::input_staleness, i, j, k,
                                   "tau=" + std::to_string(held) + " outside [" + std::to_string(floor) +
                                       ", " + std::to_string(k) + "]"});
                const auto upto = std::upper_bound(meas.begin(), meas.end(), held);
                const long mu = upto == meas.begin() ? 0 : std::max(0L, *std::prev(upto));
                if (mu < floor || mu > k)
                    out.push_back({Kind::output_staleness, i, j, k,
                                   "mu=" + std::to_string(mu) + " outside [" + std::to_string(floor) + ", " +
                                       std::to_string(k) + "]"});
            }
        }
    }
    return verdict;
}

namespace {

void check_query(const EventSchedule& s, int i, int j, long k) {
    const int n = s.agents();
    if (i < 0 || i >= n || j < 0 || j >= n) throw std::out_of_range("staleness query: agent index");
    if (k < 0 || k >= s.horizon()) throw std::out_of_range("staleness query: tick outside horizon");
}

}  // namespace

long staleness_at(const EventSchedule& s, int i, int j, long k) {
    check_query(s, i, j, k);
    if (i == j) return k;
    const auto& list = s.deliveries(j, i);
    auto it = std::upper_bound(list.begin(), list.end(), k,
                               [](long tick, const Delivery& d) { return tick < d.receive; });
    return it == list.begin() ? 0 : std::prev(it)->origin;
}

long measurement_staleness_at(const EventSchedule& s, int i, int j, long k) {
    check_query(s, i, j, k);
    if (i == j) return s.latest_measurement(i, k);
    const long origin = staleness_at(s, i, j, k);
    return s.latest_measurement(j, origin);
}

void write_schedule(std::ostream& out, const EventSchedule& s) {
    out << "# afo event schedule v1\n";
    out << "horizon " << s.horizon() << "\nB " << s.B() << "\nagents " << s.agents() << "\n";
    for (int i = 0; i < s.agents(); ++i)
        for (long k : s.compute_ticks(i)) out << "compute " << i << ' ' << k << '\n';
    for (int i = 0; i < s.agents(); ++i)
        for (long k : s.measure_ticks(i)) out << "measure " << i << ' ' << k << '\n';
    for (int j = 0; j < s.agents(); ++j)
        for (int i = 0; i < s.agents(); ++i) {
            if (i == j) continue;
            for (const auto& d : s.deliveries(j, i))
                out << "deliver " << j << ' ' << i << ' ' << d.receive << ' ' << d.origin << '\n';
        }
}

EventSchedule read_schedule(std::istream& in) {
    long horizon = -1;
    int B = -1;
    int agents = -1;
    std::vector<std::vector<long>> compute, measure;
    std::vector<std::vector<Delivery>> deliveries;
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& why) {
        throw std::runtime_error("schedule line " + std::to_string(line_no) + ": " + why);
    };
    auto agent_ok = [&](long a) { return a >= 0 && a < agents; };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string kind;
        ls >> kind;
        if (kind == "horizon") {
            ls >> horizon;
        } else if (kind == "B") {
            ls >> B;
        } else if (kind == "agents") {
            ls >> agents;
            if (!ls || agents < 1) fail("bad agent count");
            const auto n = static_cast<std::size_t>(agents);
            compute.assign(n, {});
            measure.assign(n, {});
            deliveries.assign(n * n, {});
        } else if (kind == "compute" || kind == "measure") {
            long i = -1, k = -1;
            ls >> i >> k;
            if (!ls || !agent_ok(i)) fail("bad " + kind + " event");
            (kind == "compute" ? compute : measure)[static_cast<std::size_t>(i)].push_back(k);
        } else if (kind == "deliver") {
            long j = -1, i = -1;
            Delivery d;
            ls >> j >> i >> d.receive >> d.origin;
            if (!ls || !agent_ok(i) || !agent_ok(j) || i == j) fail("bad deliver event");
            deliveries[static_cast<std::size_t>(j * agents + i)].push_back(d);
        } else {
            fail("unknown record '" + kind + "'");
        }
        if (!ls && kind != "agents") fail("malformed record");
    }
    if (horizon < 0 || B < 1 || agents < 1) throw std::runtime_error("schedule: missing header fields");
    return EventSchedule(horizon, B, std::move(compute), std::move(measure), std::move(deliveries));
}

}  // namespace afo
