// Command-line front end: single runs, presets, sweeps, constants reports,
// trace verification and operation-count requirements.

#include "afo/config.hpp"
#include "afo/harness.hpp"
#include "afo/metrics.hpp"
#include "afo/theory.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace afo;

constexpr int kValidationError = 1;
constexpr int kRuntimeError = 2;

std::filesystem::path output_dir(const std::string& given, const std::string& stem, const SimConfig& cfg) {
    if (!given.empty()) return given;
    return default_output_root() / (stem + "-" + hash_hex(cfg.hash()));
}

void print_summary(const RunArtifacts& run, const std::filesystem::path& dir) {
    const ExperimentSummary& s = run.summary;
    std::printf("config %s\n", s.config_hash.c_str());
    std::printf("epochs %zu, ticks %ld\n", run.trace.epochs.size(), run.trace.horizon());
    std::printf("mean alpha %.6g\n", s.mean_alpha);
    for (std::size_t c = 0; c < s.final_output_error.size(); ++c)
        std::printf("final output error [%zu] %.6g\n", c, s.final_output_error[c]);
    std::printf("invariants %s\n", s.invariants_ok ? "pass" : "FAIL");
    if (s.bounds_ok)
        std::printf("bounds %s\n", *s.bounds_ok ? "pass" : "FAIL");
    else
        std::printf("%s\n", s.bounds_note.c_str());
    std::printf("artifacts %s\n", dir.string().c_str());
    std::printf("wall %.3f s\n", s.wall_seconds);
}

int do_run(const SimConfig& cfg, const std::string& out, const std::string& stem) {
    const RunArtifacts run = run_experiment(cfg);
    const auto dir = output_dir(out, stem, cfg);
    write_artifacts(run, dir);
    print_summary(run, dir);
    return 0;
}

KeyValueConfig base_config(const std::string& path, const std::string& preset) {
    if (!path.empty()) return KeyValueConfig::load(path);
    KeyValueConfig kv;
    kv.set("preset", preset);
    return kv;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Asynchronous feedback optimization simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir, preset_name = "qp", trace_dir, mode = "asymptotic", param = "B";
    std::optional<long> seed;
    std::optional<int> B_opt, epochs_opt;
    std::optional<double> gamma_opt, V_opt, rho_opt;
    std::vector<std::string> values;
    int seeds = 10;
    double phi = 1.0;
    std::optional<long> T_opt;
    bool strict = false;

    auto* run_cmd = app.add_subcommand("run", "run the configuration in a key-value file");
    run_cmd->add_option("--config", config_path, "config file")->required();
    run_cmd->add_option("--seed", seed, "override the seed");
    run_cmd->add_option("--out", out_dir, "output directory");

    auto* preset_cmd = app.add_subcommand("preset", "run a built-in experiment");
    preset_cmd->add_option("name", preset_name, "qp or aircraft")->required()->check(CLI::IsMember({"qp", "aircraft"}));
    preset_cmd->add_option("--seed", seed, "seed");
    preset_cmd->add_option("--out", out_dir, "output directory");
    preset_cmd->add_option("--B", B_opt, "asynchrony bound");
    preset_cmd->add_option("--gamma", gamma_opt, "step size");
    preset_cmd->add_option("--epochs", epochs_opt, "number of epochs");

    auto* sweep_cmd = app.add_subcommand("sweep", "mean tracking error over a parameter grid and seeds");
    sweep_cmd->add_option("--config", config_path, "base config file (default: the qp preset)");
    sweep_cmd->add_option("--preset", preset_name, "base preset when no config is given")
        ->check(CLI::IsMember({"qp", "aircraft"}));
    sweep_cmd->add_option("--param", param, "config key to vary");
    sweep_cmd->add_option("--values", values, "comma-separated values")->required()->delimiter(',');
    sweep_cmd->add_option("--seeds", seeds, "seeds per value");
    sweep_cmd->add_option("--epochs", epochs_opt, "number of epochs");
    sweep_cmd->add_option("--out", out_dir, "write per-run artifacts below this directory");

    auto* constants_cmd = app.add_subcommand("constants", "print the constant ladder for a config");
    constants_cmd->add_option("--config", config_path, "config file")->required();

    auto* verify_cmd = app.add_subcommand("verify", "re-check a written trace directory");
    verify_cmd->add_option("--trace", trace_dir, "directory written by run or preset")->required();
    verify_cmd->add_flag("--strict", strict, "exit with status 1 when a check fails");

    auto* rmin_cmd = app.add_subcommand("rmin", "smallest r that guarantees alpha(eta) <= phi");
    rmin_cmd->add_option("--phi", phi, "target bound")->required();
    rmin_cmd->add_option("--mode", mode, "finite or asymptotic")->check(CLI::IsMember({"finite", "asymptotic"}));
    rmin_cmd->add_option("--config", config_path, "config whose ladder supplies V and rho");
    rmin_cmd->add_option("--V", V_opt, "use this V instead of a config");
    rmin_cmd->add_option("--rho", rho_opt, "use this rho instead of a config");
    rmin_cmd->add_option("--T", T_opt, "horizon for finite mode (default: epochs - 1)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kValidationError;
    }

    try {
        if (*run_cmd) {
            KeyValueConfig kv = KeyValueConfig::load(config_path);
            if (seed) kv.set("seed", std::to_string(*seed));
            if (out_dir.empty()) out_dir = kv.get_string("output_dir", "");
            return do_run(config_from(kv), out_dir, "run");
        }
        if (*preset_cmd) {
            KeyValueConfig kv;
            kv.set("preset", preset_name);
            if (seed) kv.set("seed", std::to_string(*seed));
            if (B_opt) kv.set("B", std::to_string(*B_opt));
            if (gamma_opt) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.17g", *gamma_opt);
                kv.set("gamma", buf);
            }
            if (epochs_opt) kv.set("epochs", std::to_string(*epochs_opt));
            return do_run(config_from(kv), out_dir, preset_name);
        }
        if (*sweep_cmd) {
            KeyValueConfig kv = base_config(config_path, preset_name);
            if (epochs_opt) kv.set("epochs", std::to_string(*epochs_opt));
            std::optional<std::filesystem::path> out;
            if (!out_dir.empty()) out = out_dir;
            const auto points = sweep(kv, param, values, seeds, out);
            std::printf("%s,mean_alpha,seeds\n", param.c_str());
            for (const auto& p : points) std::printf("%s,%.10g,%zu\n", p.value.c_str(), p.average(), p.mean_alpha.size());
            return 0;
        }
        if (*constants_cmd) {
            const SimConfig cfg = config_from(KeyValueConfig::load(config_path));
            const RunArtifacts run = run_experiment(cfg, {false, true});
            std::cout << constants_report(run.theory.ladder.epochs(), run.theory.ladder.params());
            return 0;
        }
        if (*verify_cmd) {
            const RunTrace trace = load_trace(trace_dir);
            const MetricSeries series = compute_series(trace);
            const CheckReport report = check_trace_invariants(trace, series);
            std::cout << report.to_text();
            std::cout << (report.ok() ? "verdict: ok\n" : "verdict: violations found\n");
            return strict && !report.ok() ? kValidationError : 0;
        }
        if (*rmin_cmd) {
            double V = 0.0, rho = 0.0;
            long T = T_opt.value_or(0);
            if (V_opt && rho_opt) {
                V = *V_opt;
                rho = *rho_opt;
            } else {
                if (config_path.empty()) throw ConfigError("rmin needs --config or both --V and --rho");
                const SimConfig cfg = config_from(KeyValueConfig::load(config_path));
                const RunArtifacts run = run_experiment(cfg, {false, true});
                const auto& ladder = run.theory.ladder.epochs();
                V = ladder.front().a;
                for (const auto& t : ladder) {
                    V = std::max(V, t.V);
                    rho = std::max(rho, t.rho);
                }
                if (!T_opt) T = static_cast<long>(ladder.size()) - 1;
            }
            const RminMode m = mode == "finite" ? RminMode::finite : RminMode::asymptotic;
            const long r = r_min(phi, m, V, rho, T);
            std::printf("V = %.17g\nrho = %.17g\nphi = %.17g\nmode = %s\n", V, rho, phi, mode.c_str());
            if (m == RminMode::finite) std::printf("T = %ld\n", T);
            std::printf("r_min = %ld\n", r);
            return 0;
        }
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kValidationError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kRuntimeError;
    }
    return 0;
}
