#ifndef AFO_CONFIG_HPP
#define AFO_CONFIG_HPP

#include "afo/core.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace afo {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Flat `key = value` text. `#` starts a comment; blank lines are skipped.
/// Vectors are comma separated (`1, 2, 3`); matrices are rows of vectors
/// separated by `;`. A value of the form `@path` reads the value from a file.
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::istream& in, const std::string& source = "<input>");
    static KeyValueConfig load(const std::string& path);

    void set(const std::string& key, const std::string& value) { entries_[key] = value; }
    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    std::optional<std::string> get(const std::string& key) const;
    const std::map<std::string, std::string>& entries() const { return entries_; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    long get_int(const std::string& key, long fallback) const;
    double get_real(const std::string& key, double fallback) const;
    std::vector<double> get_reals(const std::string& key) const;
    std::vector<long> get_ints(const std::string& key) const;
    MatrixXd get_matrix(const std::string& key) const;

private:
    std::map<std::string, std::string> entries_;
    std::string base_dir_;
};

enum class ProblemKind { random_qp, aircraft, explicit_qp };

const char* to_string(ProblemKind kind);

/// Everything needed to reproduce one run.
struct SimConfig {
    ProblemKind kind = ProblemKind::random_qp;
    std::vector<int> input_dims{1};
    std::vector<int> output_dims{1};
    VectorXd lower;  // empty: kind default
    VectorXd upper;

    // explicit_qp: one static epoch repeated for every epoch
    MatrixXd C, Q, P;
    VectorXd q, theta;
    double offset = 0.0;

    // aircraft
    double sample_time = 5.0;
    double accel_gain = 0.1;

    int epochs = 1;
    std::vector<long> kappa{1};  // one entry applies to every epoch
    int B = 1;
    std::vector<double> p_update{1.0}, p_measure{1.0}, p_communicate{1.0};  // one entry: all agents
    int delay_max = -1;  // −1: B − 1
    std::vector<double> gamma{0.001};
    bool auto_gamma = false;
    double auto_fraction = 0.9;
    std::uint64_t seed = 0;
    long snapshot_stride = 0;
    long trace_stride = 1;  // trace.csv keeps every s-th row
    VectorXd init;  // empty: kind default
    std::optional<double> lambda_eb;

    int agents() const { return static_cast<int>(input_dims.size()); }
    long kappa_of(std::size_t ell) const { return kappa.size() == 1 ? kappa.front() : kappa.at(ell); }
    int effective_delay_max() const { return delay_max < 0 ? B - 1 : delay_max; }

    /// Throws ConfigError describing the first inconsistency.
    void validate() const;

    /// Canonical `key = value` text; parsing it gives back an equal config.
    std::string to_text() const;
    /// FNV-1a of the canonical text.
    std::uint64_t hash() const;
};

/// Builds a config from key-value text. A `preset` key (qp | aircraft)
/// starts from that preset; every other key overrides a field. Unknown keys
/// are rejected. `output_dir` is accepted but belongs to the caller, not the
/// config, so it does not enter the hash.
SimConfig config_from(const KeyValueConfig& kv);

SimConfig preset_qp(std::uint64_t seed);
SimConfig preset_aircraft(std::uint64_t seed);

std::string hash_hex(std::uint64_t h);

}  // namespace afo

#endif  // AFO_CONFIG_HPP
