#include "afo/harness.hpp"

#include "afo/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <numbers>
#include <sstream>
#include <thread>

namespace afo {

using nlohmann::json;

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T>
std::vector<T> per_agent(const std::vector<T>& v, int agents) {
    return v.size() == 1 ? std::vector<T>(static_cast<std::size_t>(agents), v.front()) : v;
}

MatrixXd gaussian(Rng& rng, int rows, int cols) {
    MatrixXd m(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) m(r, c) = rng.normal();
    return m;
}

VectorXd gaussian(Rng& rng, int n) {
    VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.normal();
    return v;
}

json to_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const MatrixXd& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) rows.push_back(to_json(VectorXd(m.row(r).transpose())));
    return rows;
}

VectorXd vector_from(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const VectorXd>(v.data(), static_cast<long>(v.size()));
}

MatrixXd matrix_from(const json& j, long cols_if_empty = 0) {
    const long rows = static_cast<long>(j.size());
    const long cols = rows ? static_cast<long>(j[0].size()) : cols_if_empty;
    MatrixXd m(rows, cols);
    for (long r = 0; r < rows; ++r) m.row(r) = vector_from(j[static_cast<std::size_t>(r)]).transpose();
    return m;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace

QuadraticEpoch random_qp_epoch(const BlockLayout& layout, std::uint64_t seed, std::size_t ell) {
    Rng rng(seed, ell + 1, Stream::problem);
    const int n = layout.n(), m = layout.m();
    const MatrixXd A = gaussian(rng, n, n);
    const MatrixXd Ap = gaussian(rng, m, m);
    const VectorXd q = gaussian(rng, n);
    const VectorXd p = gaussian(rng, m);
    MatrixXd Q = A.transpose() * A + MatrixXd::Identity(n, n);
    MatrixXd P = Ap.transpose() * Ap + MatrixXd::Identity(m, m);
    Q = 0.5 * (Q + Q.transpose());
    P = 0.5 * (P + P.transpose());
    return QuadraticEpoch::from_linear_output(static_cast<double>(ell), std::move(Q), q, std::move(P), p);
}

MatrixXd random_output_matrix(const BlockLayout& layout, std::uint64_t seed) {
    Rng rng(seed, 0, Stream::problem);
    return gaussian(rng, layout.m(), layout.n()) / std::sqrt(static_cast<double>(layout.n()));
}

namespace aircraft {

MatrixXd output_block() {
    MatrixXd c(kOutputs, kInputs);
    c << -0.0133, -7.3259, -3.17, -1.1965, 0.0001,
         0, 0, 0, 0, 1;
    return c;
}

VectorXd trim_state() { return (VectorXd(kInputs) << 500.0, 0.0, 0.0, 0.0, 15000.0).finished(); }
VectorXd state_lower() { return (VectorXd(kInputs) << 443.7336, -13.0, -25.0, -60.0, 1000.0).finished(); }
VectorXd state_upper() { return (VectorXd(kInputs) << 556.2664, 1.5, 25.0, 60.0, 40000.0).finished(); }

MatrixXd separation_selector(int agents) {
    MatrixXd S = MatrixXd::Zero(agents - 1, kInputs * agents);
    for (int i = 0; i + 1 < agents; ++i) {
        S(i, kInputs * i + 4) = 1.0;
        S(i, kInputs * (i + 1) + 4) = -1.0;
    }
    return S;
}

double desired_altitude(std::size_t ell, double sample_time) {
    return 15000.0 + 1500.0 * std::sin(static_cast<double>(ell) * sample_time * std::numbers::pi / 24.0);
}

QuadraticEpoch base_epoch(int agents) {
    const int n = kInputs * agents;
    const MatrixXd S = separation_selector(agents);
    const double r = 1e6;
    const VectorXd omega = VectorXd::Constant(agents - 1, 1500.0);
    QuadraticEpoch e;
    e.Q = 100.0 * MatrixXd::Identity(n, n) + r * S.transpose() * S;
    e.q = -r * S.transpose() * omega;
    e.constant_offset = 0.5 * r * omega.squaredNorm();
    e.P = MatrixXd::Zero(kOutputs * agents, kOutputs * agents);
    for (int i = 0; i < agents; ++i) {
        e.P(kOutputs * i, kOutputs * i) = 1e3;
        e.P(kOutputs * i + 1, kOutputs * i + 1) = 5e4;
    }
    e.theta = VectorXd::Zero(kOutputs * agents);
    return e;
}

EpochGenerator generator(int agents, double sample_time, double accel_gain) {
    const QuadraticEpoch base = base_epoch(agents);
    return [base, agents, sample_time, accel_gain](const BoundaryView& view) {
        QuadraticEpoch e = base;
        e.t = static_cast<double>(view.epoch) * sample_time;
        const double phi = desired_altitude(view.epoch, sample_time);
        for (int i = 0; i < agents; ++i) {
            const VectorXd& copy = view.agent_inputs[static_cast<std::size_t>(i)];
            double mean = 0.0;
            for (int j = 0; j < agents; ++j) mean += copy[kInputs * j + 4];
            mean /= agents;
            e.theta[kOutputs * i] = accel_gain / sample_time * (phi - mean);
            e.theta[kOutputs * i + 1] = phi;
        }
        return e;
    };
}

}  // namespace aircraft

Experiment build_experiment(const SimConfig& cfg) {
    cfg.validate();
    const BlockLayout layout(cfg.input_dims, cfg.output_dims);
    const int N = layout.agents();
    const int n = layout.n();

    VectorXd lower = cfg.lower, upper = cfg.upper;
    if (lower.size() == 0) {
        if (cfg.kind == ProblemKind::aircraft) {
            lower = aircraft::state_lower().replicate(N, 1);
            upper = aircraft::state_upper().replicate(N, 1);
        } else {
            lower = VectorXd::Constant(n, -10.0);
            upper = VectorXd::Constant(n, 10.0);
        }
    }
    const BoxSet set(lower, upper);

    MatrixXd C;
    if (cfg.kind == ProblemKind::random_qp) {
        C = random_output_matrix(layout, cfg.seed);
    } else if (cfg.kind == ProblemKind::explicit_qp) {
        C = cfg.C;
    } else {
        C = MatrixXd::Zero(layout.m(), n);
        for (int i = 0; i < N; ++i)
            C.block(aircraft::kOutputs * i, aircraft::kInputs * i, aircraft::kOutputs, aircraft::kInputs) =
                aircraft::output_block();
    }
    Experiment ex{Problem{layout, set, OutputMap(C, layout)}, nullptr, {}, {}, {}, {}};

    std::vector<EpochSource> sources;
    std::vector<long> kappa;
    for (int ell = 0; ell < cfg.epochs; ++ell) {
        kappa.push_back(cfg.kappa_of(static_cast<std::size_t>(ell)));
        switch (cfg.kind) {
            case ProblemKind::random_qp:
                sources.emplace_back(random_qp_epoch(layout, cfg.seed, static_cast<std::size_t>(ell)));
                break;
            case ProblemKind::explicit_qp: {
                QuadraticEpoch e{static_cast<double>(ell), cfg.Q, cfg.q, cfg.P, cfg.theta, cfg.offset};
                sources.emplace_back(std::move(e));
                break;
            }
            case ProblemKind::aircraft:
                sources.emplace_back(aircraft::generator(N, cfg.sample_time, cfg.accel_gain));
                break;
        }
    }
    ex.epochs = EpochSchedule(std::move(sources), kappa, cfg.B);

    AsyncConfig ac;
    ac.B = cfg.B;
    ac.p_update = per_agent(cfg.p_update, N);
    ac.p_measure = per_agent(cfg.p_measure, N);
    ac.p_communicate = per_agent(cfg.p_communicate, N);
    ac.delay_max = cfg.effective_delay_max();
    ac.seed = cfg.seed;
    ex.schedule = std::make_shared<const EventSchedule>(generate_schedule(ac, layout, ex.epochs.horizon()));

    if (cfg.init.size())
        ex.init = cfg.init;
    else if (cfg.kind == ProblemKind::aircraft)
        ex.init = aircraft::trim_state().replicate(N, 1);
    else
        ex.init = project_box(VectorXd::Zero(n), set);

    ConstantsOptions co;
    co.lambda_eb = cfg.lambda_eb;
    co.seed = cfg.seed;
    if (cfg.auto_gamma) {
        std::vector<long> r;
        for (long k : kappa) r.push_back(k / cfg.B);
        ex.steps = auto_steps(ex.problem, cfg.B, r, co, cfg.auto_fraction);
    } else {
        ex.steps = fixed_steps(cfg.gamma);
    }
    ex.options.snapshot_stride = cfg.snapshot_stride;
    return ex;
}

RunArtifacts run_experiment(const SimConfig& cfg, const ExperimentOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    Experiment ex = build_experiment(cfg);
    RunArtifacts out{cfg, run(ex.problem, ex.schedule, ex.epochs, ex.init, ex.steps, ex.options), {}, {}, {}, {}, {}};
    out.series = compute_series(out.trace);

    ConstantsOptions co;
    co.lambda_eb = cfg.lambda_eb;
    co.seed = cfg.seed;
    if (options.evaluate_theory) out.theory = evaluate_theory(out.trace, co);
    if (options.check_invariants) out.invariants = check_trace_invariants(out.trace, out.series, out.theory.constants);

    ExperimentSummary& s = out.summary;
    s.config_hash = hash_hex(cfg.hash());
    const RunTrace& tr = out.trace;
    for (std::size_t ell = 0; ell < tr.epochs.size(); ++ell) {
        s.alpha_at_eta.push_back(out.series.alpha[static_cast<std::size_t>(tr.eta(ell))]);
        s.alpha_post_change.push_back(out.series.alpha[static_cast<std::size_t>(tr.eta_before(ell) + 1)]);
    }
    double total = 0.0;
    for (double a : out.series.alpha) total += a;
    s.mean_alpha = total / static_cast<double>(out.series.alpha.size());

    const long k_final = tr.horizon() - 1;
    const std::size_t ell_final = tr.epoch_of_state(k_final);
    const VectorXd y = tr.problem.map.matrix() * tr.x_true[static_cast<std::size_t>(k_final)];
    const VectorXd& y_star = tr.minimizers[ell_final].y_star;
    const BlockLayout& layout = tr.problem.layout;
    int max_m = 0;
    for (int i = 0; i < layout.agents(); ++i) max_m = std::max(max_m, layout.output_dim(i));
    s.final_output_error.assign(static_cast<std::size_t>(max_m), 0.0);
    for (int i = 0; i < layout.agents(); ++i)
        for (int c = 0; c < layout.output_dim(i); ++c) {
            const double d = y[layout.output_offset(i) + c] - y_star[layout.output_offset(i) + c];
            s.final_output_error[static_cast<std::size_t>(c)] += d * d;
        }
    for (double& e : s.final_output_error) e = std::sqrt(e);
    s.invariants_ok = !options.check_invariants || out.invariants.ok();

    if (options.evaluate_theory) {
        try {
            out.bounds = check_bounds_on_trace(tr, out.series, out.theory.ladder.epochs());
            s.bounds_ok = out.bounds->ok();
        } catch (const PreconditionError& e) {
            s.bounds_note = std::string("bound check skipped: ") + e.what();
        }
    }
    s.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

void write_trace_csv(std::ostream& out, const RunTrace& trace, const MetricSeries& series, long stride) {
    if (stride < 1) throw std::invalid_argument("write_trace_csv: stride must be positive");
    out << "k,ell,alpha,beta,delta,norm_s,norm_q,events_u,events_m,events_c\n";
    for (long k = 0; k < trace.horizon(); k += stride) {
        const auto i = static_cast<std::size_t>(k);
        out << k << ',' << trace.epoch_of_state(k) << ',' << num(series.alpha[i]) << ',' << num(series.beta[i]) << ','
            << num(series.delta[i]) << ',' << num(trace.s[i].norm()) << ',' << num(trace.q[i].norm()) << ','
            << trace.events_u[i] << ',' << trace.events_m[i] << ',' << trace.events_c[i] << '\n';
    }
}

void write_epochs_csv(std::ostream& out, const RunTrace& trace, const MetricSeries& series) {
    out << "ell,eta,alpha_at_eta,alpha_post_change";
    for (int j = 0; j < trace.problem.layout.n(); ++j) out << ",x_star_" << j;
    out << '\n';
    for (std::size_t ell = 0; ell < trace.epochs.size(); ++ell) {
        const long eta = trace.eta(ell);
        out << ell << ',' << eta << ',' << num(series.alpha[static_cast<std::size_t>(eta)]) << ','
            << num(series.alpha[static_cast<std::size_t>(trace.eta_before(ell) + 1)]);
        const VectorXd& xs = trace.minimizers[ell].x_star;
        for (int j = 0; j < xs.size(); ++j) out << ',' << num(xs[j]);
        out << '\n';
    }
}

void write_artifacts(const RunArtifacts& run, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const RunTrace& tr = run.trace;
    write_file(dir / "config.txt", run.config.to_text());
    {
        std::ostringstream s;
        write_schedule(s, *tr.schedule);
        write_file(dir / "schedule.txt", s.str());
    }
    {
        std::ostringstream s;
        write_trace_csv(s, tr, run.series, run.config.trace_stride);
        write_file(dir / "trace.csv", s.str());
    }
    {
        std::ostringstream s;
        write_epochs_csv(s, tr, run.series);
        write_file(dir / "epochs.csv", s.str());
    }
    const auto& ladder = run.theory.ladder.epochs();
    write_file(dir / "constants.txt", ladder.empty() ? std::string("# theory not evaluated\n")
                                                     : constants_report(ladder, run.theory.ladder.params()));
    write_file(dir / "invariants.txt", run.invariants.to_text());
    write_file(dir / "bounds.txt", run.bounds ? run.bounds->to_text() : run.summary.bounds_note + "\n");

    const ExperimentSummary& s = run.summary;
    json sum;
    sum["config_hash"] = s.config_hash;
    sum["mean_alpha"] = s.mean_alpha;
    sum["final_output_error"] = s.final_output_error;
    sum["invariants_ok"] = s.invariants_ok;
    sum["bounds_ok"] = s.bounds_ok ? json(*s.bounds_ok) : json(nullptr);
    sum["bounds_note"] = s.bounds_note;
    sum["wall_seconds"] = s.wall_seconds;
    json epochs = json::array();
    for (std::size_t ell = 0; ell < tr.epochs.size(); ++ell) {
        json e{{"ell", ell},
               {"eta", tr.eta(ell)},
               {"gamma", tr.gammas[ell]},
               {"alpha_at_eta", s.alpha_at_eta[ell]},
               {"alpha_post_change", s.alpha_post_change[ell]}};
        if (ell < ladder.size()) e["gamma_max"] = ladder[ell].gmax.value;
        epochs.push_back(e);
    }
    sum["epochs"] = epochs;
    write_file(dir / "summary.json", sum.dump(2) + "\n");

    json t;
    t["input_dims"] = tr.problem.layout.input_dims();
    t["output_dims"] = tr.problem.layout.output_dims();
    t["lower"] = to_json(tr.problem.set.lower());
    t["upper"] = to_json(tr.problem.set.upper());
    t["C"] = to_json(tr.problem.map.matrix());
    t["B"] = tr.B;
    t["kappa"] = tr.kappa;
    t["gammas"] = tr.gammas;
    json ep = json::array();
    for (std::size_t ell = 0; ell < tr.epochs.size(); ++ell) {
        const QuadraticEpoch& e = tr.epochs[ell];
        const MinimizerSolution& m = tr.minimizers[ell];
        ep.push_back({{"t", e.t},
                      {"Q", to_json(e.Q)},
                      {"q", to_json(e.q)},
                      {"P", to_json(e.P)},
                      {"theta", to_json(e.theta)},
                      {"offset", e.constant_offset},
                      {"x_star", to_json(m.x_star)},
                      {"residual", m.residual},
                      {"iterations", m.iterations}});
    }
    t["epochs"] = ep;
    json xs = json::array(), ss = json::array(), qs = json::array();
    for (const auto& x : tr.x_true) xs.push_back(to_json(x));
    for (const auto& v : tr.s) ss.push_back(to_json(v));
    for (const auto& v : tr.q) qs.push_back(to_json(v));
    t["x"] = xs;
    t["s"] = ss;
    t["q"] = qs;
    t["events_u"] = tr.events_u;
    t["events_m"] = tr.events_m;
    t["events_c"] = tr.events_c;
    json snaps = json::array();
    for (const auto& snap : tr.snapshots) {
        json agents = json::array();
        for (const auto& a : snap.agents) agents.push_back({{"x", to_json(a.x_local)}, {"y", to_json(a.y_local)}});
        snaps.push_back({{"tick", snap.tick}, {"agents", agents}});
    }
    t["snapshots"] = snaps;
    write_file(dir / "trace.json", t.dump() + "\n");
}

RunTrace load_trace(const std::filesystem::path& dir) {
    std::ifstream tin(dir / "trace.json");
    if (!tin) throw std::runtime_error("cannot open '" + (dir / "trace.json").string() + "'");
    const json t = json::parse(tin);
    std::ifstream sin(dir / "schedule.txt");
    if (!sin) throw std::runtime_error("cannot open '" + (dir / "schedule.txt").string() + "'");

    RunTrace tr;
    const BlockLayout layout(t.at("input_dims").get<std::vector<int>>(), t.at("output_dims").get<std::vector<int>>());
    tr.problem = Problem{layout, BoxSet(vector_from(t.at("lower")), vector_from(t.at("upper"))),
                         OutputMap(matrix_from(t.at("C"), layout.n()), layout)};
    tr.schedule = std::make_shared<const EventSchedule>(read_schedule(sin));
    tr.B = t.at("B").get<int>();
    tr.kappa = t.at("kappa").get<std::vector<long>>();
    tr.gammas = t.at("gammas").get<std::vector<double>>();
    for (const auto& e : t.at("epochs")) {
        QuadraticEpoch q{e.at("t").get<double>(), matrix_from(e.at("Q")), vector_from(e.at("q")),
                         matrix_from(e.at("P")), vector_from(e.at("theta")), e.at("offset").get<double>()};
        MinimizerSolution m;
        m.x_star = vector_from(e.at("x_star"));
        m.y_star = tr.problem.map.matrix() * m.x_star;
        m.residual = e.at("residual").get<double>();
        m.iterations = e.at("iterations").get<long>();
        tr.epochs.push_back(std::move(q));
        tr.minimizers.push_back(std::move(m));
    }
    for (const auto& x : t.at("x")) tr.x_true.push_back(vector_from(x));
    for (const auto& v : t.at("s")) tr.s.push_back(vector_from(v));
    for (const auto& v : t.at("q")) tr.q.push_back(vector_from(v));
    tr.events_u = t.at("events_u").get<std::vector<int>>();
    tr.events_m = t.at("events_m").get<std::vector<int>>();
    tr.events_c = t.at("events_c").get<std::vector<int>>();
    if (t.contains("snapshots"))
        for (const auto& snap : t.at("snapshots")) {
            RunTrace::Snapshot s{snap.at("tick").get<long>(), {}};
            for (const auto& a : snap.at("agents")) s.agents.push_back({vector_from(a.at("x")), vector_from(a.at("y"))});
            tr.snapshots.push_back(std::move(s));
        }

    long horizon = 0;
    for (long k : tr.kappa) horizon += k;
    if (tr.epochs.size() != tr.kappa.size() || tr.gammas.size() != tr.kappa.size())
        throw std::runtime_error("trace.json: epoch, kappa and gamma counts differ");
    if (static_cast<long>(tr.s.size()) != horizon || static_cast<long>(tr.q.size()) != horizon ||
        static_cast<long>(tr.x_true.size()) != horizon + 1)
        throw std::runtime_error("trace.json: state history does not match the epoch lengths");
    if (tr.schedule->horizon() != horizon || tr.schedule->agents() != layout.agents())
        throw std::runtime_error("schedule.txt does not match trace.json");
    return tr;
}

double SweepPoint::average() const {
    double s = 0.0;
    for (double v : mean_alpha) s += v;
    return mean_alpha.empty() ? 0.0 : s / static_cast<double>(mean_alpha.size());
}

std::vector<SweepPoint> sweep(const KeyValueConfig& base, const std::string& key,
                              const std::vector<std::string>& values, int seeds,
                              const std::optional<std::filesystem::path>& out, const ExperimentOptions& options) {
    if (seeds < 1) throw ConfigError("sweep needs at least one seed");
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    const long base_seed = base.get_int("seed", 0);

    std::vector<SimConfig> configs;
    for (const auto& v : values)
        for (int s = 0; s < seeds; ++s) {
            KeyValueConfig kv = base;
            kv.set(key, v);
            kv.set("seed", std::to_string(base_seed + s));
            configs.push_back(config_from(kv));
        }

    std::vector<double> results(configs.size());
    const std::size_t width = std::max(1u, std::thread::hardware_concurrency());
    for (std::size_t startx = 0; startx < configs.size(); startx += width) {
        std::vector<std::future<double>> batch;
        for (std::size_t i = startx; i < std::min(configs.size(), startx + width); ++i) {
            batch.push_back(std::async(std::launch::async, [&, i] {
                RunArtifacts run = run_experiment(configs[i], options);
                if (out) {
                    const std::size_t v = i / static_cast<std::size_t>(seeds);
                    write_artifacts(run, *out / (key + "=" + values[v]) / ("seed=" + std::to_string(configs[i].seed)));
                }
                return run.summary.mean_alpha;
            }));
        }
        for (std::size_t b = 0; b < batch.size(); ++b) results[startx + b] = batch[b].get();
    }

    std::vector<SweepPoint> points;
    for (std::size_t v = 0; v < values.size(); ++v) {
        SweepPoint p{values[v], {}};
        for (int s = 0; s < seeds; ++s) p.mean_alpha.push_back(results[v * static_cast<std::size_t>(seeds) + static_cast<std::size_t>(s)]);
        points.push_back(std::move(p));
    }
    return points;
}

std::filesystem::path default_output_root() {
    const char* env = std::getenv("AFO_OUTPUT_ROOT");
    return env && *env ? std::filesystem::path(env) : std::filesystem::path("afo-out");
}

}  // namespace afo
