#pragma once
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace lerwlab {

struct ExperimentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigInvalid : ExperimentError {
    using ExperimentError::ExperimentError;
};
struct ArtifactIncomplete : ExperimentError {
    std::vector<std::string> missing;
    explicit ArtifactIncomplete(std::vector<std::string> m);
};

// Flat key=value configuration; round-trips bit-exactly through save/load.
struct ExperimentConfig {
    std::map<std::string, std::string> kv;

    bool has(const std::string& key) const { return kv.count(key) > 0; }
    std::string get(const std::string& key, const std::string& def = "") const;
    int64_t get_int(const std::string& key, int64_t def) const;
    double get_double(const std::string& key, double def) const;
    std::vector<int> n_list() const;            // "N = 50,100,200"
    std::vector<std::string> batteries() const; // "batteries = driving,couple"

    void set(const std::string& key, const std::string& value) { kv[key] = value; }
    void apply_override(const std::string& key_eq_value);  // "key=value"

    static ExperimentConfig load(const std::string& path);
    void save(const std::string& path) const;
    std::string canonical() const;  // sorted key=value lines
    std::string hash() const;       // FNV-1a hex of canonical()
    void validate() const;          // N >= 8 each, trials >= 1
};

// Runs the configured batteries into config["out"]; per-path seeds derive
// from (seed, path index) so the numeric tables do not depend on the worker
// count.  An interrupted run leaves per-battery partial tables plus a RESUME
// marker and continues from the completed row count on the next invocation.
int run_experiment(const ExperimentConfig& config);

// Aggregates a finished artifact directory into report.json: battery
// presence, CSV checksum verification, per-battery summaries, and the
// median-rho-vs-N monotonicity verdict when a sweep is present.
std::string emit_report(const std::string& dir);

// FNV-1a over a file's bytes, hex encoded; used for table integrity.
std::string file_checksum(const std::string& path);

}  // namespace lerwlab
