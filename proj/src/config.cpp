#include "afo/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace afo {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

double parse_real(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v))
        throw ConfigError("config key '" + key + "': '" + t + "' is not a finite real number");
    return v;
}

long parse_int(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    char* end = nullptr;
    errno = 0;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE)
        throw ConfigError("config key '" + key + "': '" + t + "' is not an integer");
    return v;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
    return s;
}

template <class T>
std::string fmt_ints(const std::vector<T>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
    return s;
}

std::string fmt_vector(const VectorXd& v) {
    return fmt_list(std::vector<double>(v.data(), v.data() + v.size()));
}

std::string fmt_matrix(const MatrixXd& m) {
    std::string s;
    for (int r = 0; r < m.rows(); ++r) {
        if (r) s += "; ";
        const VectorXd row = m.row(r).transpose();
        s += fmt_vector(row);
    }
    return s;
}

VectorXd to_vector(const std::vector<double>& v) { return Eigen::Map<const VectorXd>(v.data(), static_cast<long>(v.size())); }

VectorXd broadcast(const VectorXd& v, int n) {
    return v.size() == 1 && n > 1 ? VectorXd::Constant(n, v[0]) : v;
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "preset", "problem", "agents", "n_i", "m_i", "input_dims", "output_dims", "lower", "upper", "C", "Q", "q",
        "P", "theta", "offset", "sample_time", "accel_gain", "epochs", "kappa", "B", "p_update", "p_measure",
        "p_communicate", "delay_max", "gamma", "auto_fraction", "seed", "snapshot_stride", "trace_stride", "init", "lambda_eb", "output_dir"};
    return keys;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in, const std::string& source) {
    KeyValueConfig kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
        if (kv.has(key)) throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
        kv.entries_[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    KeyValueConfig kv = parse(in, path);
    kv.base_dir_ = std::filesystem::path(path).parent_path().string();
    return kv;
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    if (!it->second.empty() && it->second.front() == '@') {
        std::filesystem::path p = it->second.substr(1);
        if (p.is_relative() && !base_dir_.empty()) p = std::filesystem::path(base_dir_) / p;
        std::ifstream in(p);
        if (!in) throw ConfigError("config key '" + key + "': cannot open '" + p.string() + "'");
        std::string text, line;
        while (std::getline(in, line)) {
            const auto h = line.find('#');
            if (h != std::string::npos) line.erase(h);
            line = trim(line);
            if (line.empty()) continue;
            text += (text.empty() ? "" : "; ") + line;
        }
        return text;
    }
    return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    return get(key).value_or(fallback);
}

long KeyValueConfig::get_int(const std::string& key, long fallback) const {
    const auto v = get(key);
    return v ? parse_int(key, *v) : fallback;
}

double KeyValueConfig::get_real(const std::string& key, double fallback) const {
    const auto v = get(key);
    return v ? parse_real(key, *v) : fallback;
}

std::vector<double> KeyValueConfig::get_reals(const std::string& key) const {
    std::vector<double> out;
    const auto v = get(key);
    if (!v) return out;
    for (const auto& part : split(*v, ',')) out.push_back(parse_real(key, part));
    return out;
}

std::vector<long> KeyValueConfig::get_ints(const std::string& key) const {
    std::vector<long> out;
    const auto v = get(key);
    if (!v) return out;
    for (const auto& part : split(*v, ',')) out.push_back(parse_int(key, part));
    return out;
}

MatrixXd KeyValueConfig::get_matrix(const std::string& key) const {
    const auto v = get(key);
    if (!v) return {};
    std::vector<std::vector<double>> rows;
    for (const auto& row : split(*v, ';')) {
        if (row.empty()) continue;
        rows.emplace_back();
        for (const auto& part : split(row, ',')) rows.back().push_back(parse_real(key, part));
        if (rows.back().size() != rows.front().size())
            throw ConfigError("config key '" + key + "': matrix rows have different lengths");
    }
    if (rows.empty()) throw ConfigError("config key '" + key + "': empty matrix");
    MatrixXd m(static_cast<long>(rows.size()), static_cast<long>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<long>(r), static_cast<long>(c)) = rows[r][c];
    return m;
}

const char* to_string(ProblemKind kind) {
    switch (kind) {
        case ProblemKind::random_qp: return "random_qp";
        case ProblemKind::aircraft: return "aircraft";
        case ProblemKind::explicit_qp: return "explicit";
    }
    return "?";
}

void SimConfig::validate() const {
    const auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    const int N = agents();
    if (N < 1) fail("at least one agent is required");
    if (output_dims.size() != input_dims.size()) fail("input_dims and output_dims must have one entry per agent");
    for (int d : input_dims)
        if (d < 1) fail("every input dimension must be positive");
    for (int d : output_dims)
        if (d < 1) fail("every output dimension must be positive");
    int n = 0, m = 0;
    for (int d : input_dims) n += d;
    for (int d : output_dims) m += d;
    if (kind == ProblemKind::aircraft) {
        for (int d : input_dims)
            if (d != 5) fail("aircraft problems need 5 inputs per agent");
        for (int d : output_dims)
            if (d != 2) fail("aircraft problems need 2 outputs per agent");
        if (N < 2) fail("aircraft problems need at least two agents");
        if (!(sample_time > 0.0)) fail("sample_time must be positive");
    }
    if (lower.size() != upper.size()) fail("lower and upper must be given together");
    if (lower.size() != 0 && lower.size() != n) fail("lower/upper must have " + std::to_string(n) + " entries");
    if (lower.size() != 0 && (lower.array() > upper.array()).any()) fail("lower must not exceed upper");
    if (kind == ProblemKind::explicit_qp) {
        if (C.rows() != m || C.cols() != n) fail("C must be " + std::to_string(m) + "x" + std::to_string(n));
        if (Q.rows() != n || Q.cols() != n) fail("Q must be " + std::to_string(n) + "x" + std::to_string(n));
        if (P.rows() != m || P.cols() != m) fail("P must be " + std::to_string(m) + "x" + std::to_string(m));
        if (q.size() != n) fail("q must have " + std::to_string(n) + " entries");
        if (theta.size() != m) fail("theta must have " + std::to_string(m) + " entries");
    }
    if (epochs < 1) fail("epochs must be at least 1");
    if (B < 1) fail("B must be at least 1");
    if (kappa.size() != 1 && kappa.size() != static_cast<std::size_t>(epochs))
        fail("kappa needs one entry or one per epoch");
    for (long k : kappa)
        if (k < B || k % B != 0) fail("every kappa must be a positive multiple of B = " + std::to_string(B));
    const auto check_probs = [&](const std::vector<double>& p, const char* name) {
        if (p.size() != 1 && p.size() != static_cast<std::size_t>(N))
            fail(std::string(name) + " needs one entry or one per agent");
        for (double v : p)
            if (!(v >= 0.0 && v <= 1.0)) fail(std::string(name) + " entries must lie in [0, 1]");
    };
    check_probs(p_update, "p_update");
    check_probs(p_measure, "p_measure");
    check_probs(p_communicate, "p_communicate");
    if (effective_delay_max() > B - 1) fail("delay_max must not exceed B - 1");
    if (auto_gamma) {
        if (!(auto_fraction > 0.0 && auto_fraction < 1.0)) fail("auto_fraction must lie in (0, 1)");
    } else {
        if (gamma.size() != 1 && gamma.size() != static_cast<std::size_t>(epochs))
            fail("gamma needs one entry or one per epoch");
        for (double g : gamma)
            if (!(g > 0.0)) fail("gamma entries must be positive");
    }
    if (snapshot_stride < 0) fail("snapshot_stride must be non-negative");
    if (trace_stride < 1) fail("trace_stride must be positive");
    if (init.size() != 0 && init.size() != n) fail("init must have " + std::to_string(n) + " entries");
    if (lambda_eb && !(*lambda_eb > 0.0)) fail("lambda_eb must be positive");
}

std::string SimConfig::to_text() const {
    std::ostringstream out;
    out << "problem = " << to_string(kind) << '\n';
    out << "input_dims = " << fmt_ints(input_dims) << '\n';
    out << "output_dims = " << fmt_ints(output_dims) << '\n';
    if (lower.size()) out << "lower = " << fmt_vector(lower) << "\nupper = " << fmt_vector(upper) << '\n';
    if (kind == ProblemKind::explicit_qp) {
        out << "C = " << fmt_matrix(C) << "\nQ = " << fmt_matrix(Q) << "\nq = " << fmt_vector(q)
            << "\nP = " << fmt_matrix(P) << "\ntheta = " << fmt_vector(theta) << "\noffset = " << fmt(offset) << '\n';
    }
    if (kind == ProblemKind::aircraft)
        out << "sample_time = " << fmt(sample_time) << "\naccel_gain = " << fmt(accel_gain) << '\n';
    out << "epochs = " << epochs << '\n';
    out << "kappa = " << fmt_ints(kappa) << '\n';
    out << "B = " << B << '\n';
    out << "p_update = " << fmt_list(p_update) << '\n';
    out << "p_measure = " << fmt_list(p_measure) << '\n';
    out << "p_communicate = " << fmt_list(p_communicate) << '\n';
    out << "delay_max = " << effective_delay_max() << '\n';
    if (auto_gamma)
        out << "gamma = auto\nauto_fraction = " << fmt(auto_fraction) << '\n';
    else
        out << "gamma = " << fmt_list(gamma) << '\n';
    out << "seed = " << seed << '\n';
    out << "snapshot_stride = " << snapshot_stride << '\n';
    out << "trace_stride = " << trace_stride << '\n';
    if (init.size()) out << "init = " << fmt_vector(init) << '\n';
    if (lambda_eb) out << "lambda_eb = " << fmt(*lambda_eb) << '\n';
    return out.str();
}

std::uint64_t SimConfig::hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : to_text()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

SimConfig preset_qp(std::uint64_t seed) {
    SimConfig c;
    c.kind = ProblemKind::random_qp;
    c.input_dims.assign(10, 2);
    c.output_dims.assign(10, 1);
    c.epochs = 10;
    c.kappa = {1000};
    c.B = 5;
    c.p_update = c.p_measure = c.p_communicate = {0.01};
    c.gamma = {0.001};
    c.seed = seed;
    return c;
}

SimConfig preset_aircraft(std::uint64_t seed) {
    SimConfig c;
    c.kind = ProblemKind::aircraft;
    c.input_dims.assign(8, 5);
    c.output_dims.assign(8, 2);
    c.epochs = 20;
    c.kappa = {500};
    c.B = 50;
    c.p_update = c.p_measure = c.p_communicate = {0.5};
    c.gamma = {5e-7};
    c.seed = seed;
    return c;
}

SimConfig config_from(const KeyValueConfig& kv) {
    for (const auto& [key, value] : kv.entries())
        if (!known_keys().count(key)) throw ConfigError("unknown config key '" + key + "'");

    SimConfig c;
    const std::string preset = kv.get_string("preset", "");
    const std::uint64_t seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
    if (preset == "qp")
        c = preset_qp(seed);
    else if (preset == "aircraft")
        c = preset_aircraft(seed);
    else if (!preset.empty())
        throw ConfigError("unknown preset '" + preset + "' (expected qp or aircraft)");
    c.seed = seed;

    if (const auto p = kv.get("problem")) {
        if (*p == "random_qp") c.kind = ProblemKind::random_qp;
        else if (*p == "aircraft") c.kind = ProblemKind::aircraft;
        else if (*p == "explicit") c.kind = ProblemKind::explicit_qp;
        else throw ConfigError("unknown problem kind '" + *p + "'");
    }
    const auto to_int_list = [](const std::vector<long>& v) { return std::vector<int>(v.begin(), v.end()); };
    if (kv.has("input_dims")) c.input_dims = to_int_list(kv.get_ints("input_dims"));
    if (kv.has("output_dims")) c.output_dims = to_int_list(kv.get_ints("output_dims"));
    if (kv.has("agents") || kv.has("n_i") || kv.has("m_i")) {
        if (kv.has("input_dims") || kv.has("output_dims"))
            throw ConfigError("give either agents/n_i/m_i or input_dims/output_dims, not both");
        const long N = kv.get_int("agents", c.agents());
        const long n_i = kv.get_int("n_i", c.input_dims.empty() ? 1 : c.input_dims.front());
        const long m_i = kv.get_int("m_i", c.output_dims.empty() ? 1 : c.output_dims.front());
        if (N < 1 || n_i < 1 || m_i < 1) throw ConfigError("agents, n_i and m_i must be positive");
        c.input_dims.assign(static_cast<std::size_t>(N), static_cast<int>(n_i));
        c.output_dims.assign(static_cast<std::size_t>(N), static_cast<int>(m_i));
    }
    int n = 0;
    for (int d : c.input_dims) n += d;
    if (kv.has("lower")) c.lower = broadcast(to_vector(kv.get_reals("lower")), n);
    if (kv.has("upper")) c.upper = broadcast(to_vector(kv.get_reals("upper")), n);
    if (kv.has("C")) c.C = kv.get_matrix("C");
    if (kv.has("Q")) c.Q = kv.get_matrix("Q");
    if (kv.has("P")) c.P = kv.get_matrix("P");
    if (kv.has("q")) c.q = to_vector(kv.get_reals("q"));
    if (kv.has("theta")) c.theta = to_vector(kv.get_reals("theta"));
    c.offset = kv.get_real("offset", c.offset);
    c.sample_time = kv.get_real("sample_time", c.sample_time);
    c.accel_gain = kv.get_real("accel_gain", c.accel_gain);
    c.epochs = static_cast<int>(kv.get_int("epochs", c.epochs));
    if (kv.has("kappa")) c.kappa = kv.get_ints("kappa");
    c.B = static_cast<int>(kv.get_int("B", c.B));
    if (kv.has("p_update")) c.p_update = kv.get_reals("p_update");
    if (kv.has("p_measure")) c.p_measure = kv.get_reals("p_measure");
    if (kv.has("p_communicate")) c.p_communicate = kv.get_reals("p_communicate");
    if (kv.has("delay_max")) c.delay_max = static_cast<int>(kv.get_int("delay_max", -1));
    else if (kv.has("B")) c.delay_max = -1;
    if (const auto g = kv.get("gamma")) {
        if (trim(*g) == "auto") {
            c.auto_gamma = true;
        } else {
            c.auto_gamma = false;
            c.gamma = kv.get_reals("gamma");
        }
    }
    c.auto_fraction = kv.get_real("auto_fraction", c.auto_fraction);
    c.snapshot_stride = kv.get_int("snapshot_stride", c.snapshot_stride);
    c.trace_stride = kv.get_int("trace_stride", c.trace_stride);
    if (kv.has("init")) c.init = broadcast(to_vector(kv.get_reals("init")), n);
    if (kv.has("lambda_eb")) c.lambda_eb = kv.get_real("lambda_eb", 0.0);
    c.validate();
    return c;
}

}  // namespace afo
