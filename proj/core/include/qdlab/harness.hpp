#pragma once

#include "qdlab/builtins.hpp"
#include "qdlab/table.hpp"
#include "qdlab/types.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qdlab {

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitSchema = 2, kExitAssumption = 3, kExitRuntime = 4 };

/// Schema violation with a JSON pointer to the offending key.
class ConfigError : public Error {
public:
    ConfigError(std::string pointer, const std::string& message)
        : Error(ErrorCode::SchemaViolation, pointer + ": " + message), pointer_(std::move(pointer)) {}
    [[nodiscard]] const std::string& pointer() const noexcept { return pointer_; }

private:
    std::string pointer_;
};

struct DomainSpec {
    std::string type = "ball";  ///< ball, ellipsoid or smoothed_box
    Vec center;
    double radius = 1.0;
    Vec semi_axes;
};

struct ConditionSpec {
    std::string name = "zero";  ///< zero or constant
    Vec rho;
    double m = 0.0;
    std::vector<Mat> q_basis;
};

/// One requested experiment. Fields irrelevant to `kind` are ignored.
struct EstimatorSpec {
    std::string kind;
    std::string label;
    Vec x0;
    Vec xi;
    Vec eta0;
    Vec outer;                      ///< far end of a start-point ladder
    std::string policy;             ///< control label, "sup", "oracle", or empty for the default
    std::string provider = "closed_form";
    std::string barrier = "boundary";
    double eps = 0.05;
    double h = 0.02;
    double normal_bound = 0.0;
    double psi_hi = 0.0;
    double psi_lo = 0.0;
    std::vector<double> checkpoints;
    std::size_t n_paths = 0;        ///< 0 uses the experiment default
    std::size_t n_seeds = 16;
    std::size_t points = 10;
};

struct ExperimentParams {
    double delta = 1e-4;
    double lambda = 0.25;
    std::optional<double> k1;
    std::vector<double> eps{0.1, 0.05, 0.025};
    double dt0 = 1e-3;
    double horizon = 100.0;
    std::size_t n_paths = 10000;
    std::uint64_t seed = 1;
    std::string recipe = "switched";
};

struct ExperimentConfig {
    std::string problem;
    ParamMap problem_params;
    std::optional<CoefficientTable> table;  ///< set when problem is "table"
    std::optional<DomainSpec> domain;
    std::optional<ConditionSpec> condition;
    ExperimentParams params;
    std::vector<EstimatorSpec> estimators;
    std::string output;
    std::string canonical;  ///< normalized JSON text used for the config hash
};

/// Parses and validates a JSON config. A top-level "builtin" key expands a named preset.
[[nodiscard]] ExperimentConfig parse_config(std::string_view text);
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

/// Named ready-to-run experiment presets.
[[nodiscard]] std::vector<BuiltinInfo> builtin_experiments();
[[nodiscard]] std::string builtin_experiment_text(std::string_view name);

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    int threads = 1;
    std::optional<std::filesystem::path> out;
};

struct RunResult {
    int exit_code = kExitOk;
    std::string message;
    std::string results_json;  ///< payload written to results.json
    std::vector<std::string> files;
};

/// Runs every estimator; writes results.json, tables/*.csv and manifest.json when an output directory is set.
[[nodiscard]] RunResult run_experiment(const ExperimentConfig& config, const RunOverrides& overrides);

/// Assumption checks only.
[[nodiscard]] RunResult check_experiment(const ExperimentConfig& config, const RunOverrides& overrides);

/// Catalog of problems, domains and experiment presets.
void list_catalog(std::ostream& out);

[[nodiscard]] std::uint64_t fnv1a64(std::string_view bytes) noexcept;

}  // namespace qdlab
