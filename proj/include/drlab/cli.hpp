#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "drlab/errors.hpp"
#include "drlab/experiments.hpp"

namespace drlab {

/// Usage or configuration error; the message names the offending key.
class ConfigError : public Error {
public:
    ConfigError(const std::string& key, const std::string& what) : Error(key + ": " + what), key_(key) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

inline constexpr int kExitPass = 0;
inline constexpr int kExitViolation = 1;
inline constexpr int kExitConfig = 2;

/// Flat key = value configuration. Unset optionals take command defaults in
/// resolve().
struct RunConfig {
    std::string command;
    // Field spec.
    std::optional<int> dimension;
    int k_min = 1;
    std::optional<int> k_max;
    std::optional<bool> doubling;
    std::optional<int> fill;
    std::uint64_t seed = 1;
    std::vector<std::uint64_t> seeds;  // certify-range: range density seeds
    // Polynomials.
    std::string p1 = "n^2";
    std::string p2 = "n^3";
    // Gaussian.
    std::string model = "power";  // power | white
    std::optional<double> delta;
    std::optional<double> C;
    double budget = 1e6;
    // Shared experiment parameters.
    std::optional<int> k;
    std::int64_t c = 1;
    std::int64_t d = 1;
    std::int64_t M = 5;
    std::optional<std::int64_t> H;
    std::optional<std::int64_t> samples;
    std::optional<std::int64_t> pilot;
    std::optional<std::int64_t> points;
    std::vector<std::int64_t> n_grid;
    std::int64_t certify_N = 8;
    std::optional<std::int64_t> certify_C;
    std::optional<int> certify_k_max;
    // Output.
    std::string out = "drlab-out";
    bool emit_plot_data = false;

    /// Fills command defaults and checks module preconditions; throws ConfigError.
    void resolve();
    /// Every key except out with its resolved value, in the config file syntax.
    /// Reports embed this, so runs differing only in out are byte-identical.
    std::vector<std::pair<std::string, std::string>> entries() const;
};

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"lclt", "recur2", "recur3", "gauss", "mixing", "certify-range"};
    return names;
}

/// Applies one key = value assignment; throws ConfigError on unknown keys or
/// malformed values.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// Reads a config file ('#' starts a comment). Throws ConfigError when the
/// file is missing or a line is malformed.
RunConfig read_config_file(const std::string& path);

/// Parses argv: [command] [--config PATH] [--seed U64] [--out DIR]
/// [--samples N] [--horizon H] [--emit-plot-data]. Flags override file values.
/// The result is resolved.
RunConfig parse_config(const std::vector<std::string>& args);

/// Runs the configured command and writes report.json and decay.csv (plus
/// plot_*.csv on request) into config.out. Returns the exit code.
int dispatch(const RunConfig& config, std::ostream& log);

/// Full front end: parse, dispatch, map errors to exit codes.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace drlab
