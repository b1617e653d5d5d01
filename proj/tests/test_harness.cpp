#include "afo/config.hpp"
#include "afo/harness.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace afo;

namespace {

KeyValueConfig parse(const std::string& text) {
    std::istringstream in(text);
    return KeyValueConfig::parse(in);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("afo-test-" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

const char* small_config = R"(
# small asynchronous instance
agents = 3
n_i = 2
m_i = 1
B = 3
epochs = 3
kappa = 30
p_update = 0.4
p_measure = 0.5
p_communicate = 0.3
gamma = 0.02
seed = 5
snapshot_stride = 4
)";

}  // namespace

TEST_CASE("key-value parsing") {
    const KeyValueConfig kv = parse("a = 1  # trailing\n\nb = 1, 2.5, 3\nm = 1, 2; 3, 4\n");
    CHECK(kv.get_int("a", 0) == 1);
    CHECK(kv.get_reals("b") == std::vector<double>{1, 2.5, 3});
    CHECK(kv.get_matrix("m")(1, 0) == 3.0);
    CHECK(kv.get_real("missing", 4.5) == 4.5);
    CHECK_THROWS_AS(parse("a = 1\na = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse("no equals sign\n"), ConfigError);
    CHECK_THROWS_AS(parse("a = x\n").get_int("a", 0), ConfigError);
    CHECK_THROWS_AS(config_from(parse("colour = blue\n")), ConfigError);
}

TEST_CASE("presets") {
    const SimConfig qp = preset_qp(0);
    CHECK(qp.agents() == 10);
    CHECK(qp.B == 5);
    CHECK(qp.kappa_of(3) == 1000);
    CHECK(qp.effective_delay_max() == 4);
    const SimConfig air = preset_aircraft(0);
    CHECK(air.agents() == 8);
    CHECK(air.epochs == 20);
    CHECK(preset_qp(3).hash() == preset_qp(3).hash());
    CHECK(preset_qp(3).hash() != preset_qp(4).hash());

    const SimConfig b20 = config_from(parse("preset = qp\nB = 20\n"));
    CHECK(b20.B == 20);
    CHECK(b20.effective_delay_max() == 19);
    CHECK_THROWS_AS(config_from(parse("preset = qp\nB = 3\n")), ConfigError);  // κ = 1000 is not a multiple of 3
}

TEST_CASE("canonical text round trip") {
    const SimConfig a = config_from(parse(small_config));
    const SimConfig b = config_from(parse(a.to_text()));
    CHECK(a.to_text() == b.to_text());
    CHECK(a.hash() == b.hash());
    const SimConfig air = preset_aircraft(2);
    CHECK(config_from(parse(air.to_text())).hash() == air.hash());
    const SimConfig aut = config_from(parse(std::string(small_config) + "auto_fraction = 0.5\n"));
    CHECK(config_from(parse(aut.to_text())).hash() == aut.hash());
}

TEST_CASE("values can be read from files") {
    const auto dir = scratch("at-file");
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "C.txt") << "1, 0; 0, 2\n";
    std::ofstream(dir / "run.cfg") << "problem = explicit\nagents = 2\nC = @C.txt\nQ = 1, 0; 0, 1\nP = 1, 0; 0, 1\n"
                                      "q = 0, 0\ntheta = 1, 1\nkappa = 4\n";
    const SimConfig c = config_from(KeyValueConfig::load((dir / "run.cfg").string()));
    CHECK(c.C(1, 1) == 2.0);
    CHECK(c.kind == ProblemKind::explicit_qp);
}

TEST_CASE("runs are reproducible and reloadable") {
    const SimConfig cfg = config_from(parse(small_config));
    const RunArtifacts a = run_experiment(cfg);
    const RunArtifacts b = run_experiment(cfg);
    std::ostringstream ca, cb;
    write_trace_csv(ca, a.trace, a.series);
    write_trace_csv(cb, b.trace, b.series);
    CHECK(ca.str() == cb.str());
    CHECK(a.summary.invariants_ok);
    CHECK(a.summary.config_hash == hash_hex(cfg.hash()));

    const std::string csv = ca.str();
    CHECK(csv.substr(0, csv.find('\n')) == "k,ell,alpha,beta,delta,norm_s,norm_q,events_u,events_m,events_c");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 91);

    const auto dir = scratch("artifacts");
    write_artifacts(a, dir);
    for (const char* f : {"config.txt", "schedule.txt", "trace.csv", "epochs.csv", "constants.txt", "invariants.txt",
                          "bounds.txt", "summary.json", "trace.json"})
        CHECK_MESSAGE(std::filesystem::exists(dir / f), f);
    CHECK(slurp(dir / "trace.csv") == csv);

    std::ostringstream thin;
    write_trace_csv(thin, a.trace, a.series, 10);
    const std::string tcsv = thin.str();
    CHECK(std::count(tcsv.begin(), tcsv.end(), '\n') == 10);
    CHECK(tcsv.find("\n10,") != std::string::npos);
    CHECK_THROWS(write_trace_csv(thin, a.trace, a.series, 0));

    const RunTrace back = load_trace(dir);
    REQUIRE(back.x_true.size() == a.trace.x_true.size());
    for (std::size_t k = 0; k < back.x_true.size(); ++k) CHECK(back.x_true[k] == a.trace.x_true[k]);
    const MetricSeries series = compute_series(back);
    CHECK(check_trace_invariants(back, series).to_text() == check_trace_invariants(a.trace, a.series).to_text());
}

TEST_CASE("aircraft pieces") {
    CHECK(aircraft::output_block().rows() == aircraft::kOutputs);
    CHECK(aircraft::output_block().cols() == aircraft::kInputs);
    CHECK(aircraft::trim_state()[4] == 15000.0);
    const MatrixXd S = aircraft::separation_selector(3);
    CHECK(S.rows() == 2);
    CHECK(S.cols() == 15);
    CHECK(S(0, 4) == 1.0);
    CHECK(S(0, 9) == -1.0);
    const QuadraticEpoch e = aircraft::base_epoch(3);
    CHECK(e.Q.rows() == 15);
    CHECK(e.P.rows() == 6);
}

TEST_CASE("sweeps aggregate per value") {
    KeyValueConfig base = parse(small_config);
    const auto points = sweep(base, "B", {"1", "3"}, 2);
    REQUIRE(points.size() == 2);
    CHECK(points[0].value == "1");
    CHECK(points[1].mean_alpha.size() == 2);
    CHECK(points[1].average() > 0.0);
    CHECK_THROWS_AS(sweep(base, "B", {"1"}, 0), ConfigError);
}

TEST_CASE("trace stride is parsed and validated") {
    KeyValueConfig kv;
    kv.set("preset", "qp");
    kv.set("trace_stride", "5");
    kv.set("output_dir", "somewhere");
    const SimConfig c = config_from(kv);
    CHECK(c.trace_stride == 5);
    CHECK(c.to_text().find("trace_stride = 5") != std::string::npos);
    kv.set("trace_stride", "0");
    CHECK_THROWS(config_from(kv));
}
