#ifndef MSRDS_CLI_CONFIG_HPP
#define MSRDS_CLI_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "msrds/moment_dynamics.hpp"

namespace msrds::cli {

inline constexpr const char* kToolVersion = "msrds 0.1.0";

// Fully validated run configuration. Defaults are filled in during
// parsing; `effective_json` is the canonical serialization (sorted keys)
// that the provenance hash is computed from.
struct RunConfig {
    enum class ModelKind { kLinear, kPitchfork };

    ModelKind kind = ModelKind::kPitchfork;
    std::optional<moment_dynamics::CoefficientSystem> coeffs;  // linear models
    double alpha = 0.0;                                        // pitchfork models
    double beta = 1.0;
    std::size_t dimension = 1;

    struct SpectrumParams {
        std::string method = "both";  // eigen-lift | finite-time | both
        double horizon = 50.0;
        std::size_t samples = 64;
        double cluster_width = 0.05;
    } spectrum;

    struct SimulateParams {
        double t0 = 0.0;
        double t1 = 1.0;
        double dt = 1e-3;
        std::size_t particles = 10000;
        std::size_t output_every = 100;
        moment_dynamics::Vector mean;      // defaults to zero vector
        numerics::Matrix second_moment;    // defaults to identity
    } simulate;

    struct PullbackParams {
        double end_time = 0.0;
        std::vector<double> start_times = {-10.0, -20.0, -40.0};
        double x = 1.0;
        double y = 1.0;
    } pullback;

    struct BifurcateParams {
        std::vector<double> alpha_grid = {-1.5, -1.25, -1.0, -0.75, -0.6};
        double x = 1.0;
        double y = 1.0;
        double depth = 40.0;
    } bifurcate;

    std::uint64_t seed = 12345;
    std::string out_dir = "./out";
    std::vector<std::string> formats = {"csv"};

    std::string effective_json;
    std::string config_hash;  // 16 hex digits (FNV-1a 64 of effective_json)
};

// Parses and validates a config document. Unknown keys are rejected;
// defaults are filled and reflected in effective_json. Throws ConfigError
// with line/column information on parse errors and with the offending key
// on schema violations.
RunConfig parse_config(const std::string& text);

// parse_config on the contents of `path`; a missing or unreadable file is
// a ConfigError.
RunConfig load_config(const std::string& path);

// Recomputes effective_json and config_hash after command-line overrides.
void refresh_hash(RunConfig& config);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace msrds::cli

#endif
