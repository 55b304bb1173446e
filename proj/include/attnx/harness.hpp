#pragma once

// Experiment plumbing behind the CLI: model files, seeded instance
// generation, extraction runs with truth comparison, manifests and sweeps.

#include "attnx/error.hpp"
#include "attnx/model.hpp"
#include "attnx/oracle.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace attnx::harness {

using json = nlohmann::json;

// Exit-code contract of the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInvalidInput = 2;
inline constexpr int kExitNonIdentifiable = 3;
inline constexpr int kExitToleranceUnsatisfiable = 4;
inline constexpr int kExitSolverNonConvergence = 5;
inline constexpr int kExitLearnerFailure = 6;
inline constexpr int kExitConstraintInfeasible = 7;
inline constexpr int kExitNumerical = 8;
inline constexpr int kExitMismatch = 9;

int exit_code_for(ErrorKind kind);

json model_to_json(const ModelParams& model);
/// Validates kind, declared d and shapes; throws InvalidInput / Shape.
ModelParams model_from_json(const json& doc);
void write_json(const std::filesystem::path& path, const json& doc);
json read_json(const std::filesystem::path& path);

struct GenOptions {
    std::string kind = "attention"; // attention | transformer | multihead
    std::size_t dim = 4;
    std::size_t hidden = 0; // transformer width m (0 means d)
    std::size_t heads = 2;
    std::optional<std::size_t> rank;
    std::optional<double> norm_bound;
    std::optional<double> margin;
    double entry_bound = 2.0;
    bool zero_value = false;
    std::uint64_t seed = 0;

    json to_json() const;
};

/// Builds an instance satisfying the requested constraints. Throws
/// ConstraintInfeasible (e.g. margin * sqrt(d) > 1 with ||v|| <= 1).
ModelParams generate_model(const GenOptions& options);
/// Norms, rank and margin of a model.
json model_summary(const ModelParams& model);

struct ExtractOptions {
    std::string algorithm = "exact"; // exact | lowrank | robust | transformer
    std::uint64_t seed = 0;
    std::string probe_scheme = "deterministic";
    // low-rank
    std::size_t rank = 1;
    double oversampling = 3.0;
    std::optional<double> lowrank_norm_bound;
    int max_iters = 5000;
    // robust
    double norm_bound = 2.0;
    double margin = 0.1;
    double eps_v = 0.1;
    double eps_w = 0.1;
    std::string noise_policy = "quantize";
    double tau_scale = 1.0;
    double floor_tolerance = 0.0;
    // transformer
    std::string ffn_learner = "reference";
    // report content
    bool include_params = false;
    bool include_truth = false;
    std::size_t check_samples = 200;

    json to_json() const;
    static ExtractOptions from_json(const json& doc);
};

struct ExtractOutcome {
    json report;
    int exit_code = kExitOk;
    double elapsed_ms = 0.0;
};

/// Runs one extraction against an oracle session over `truth`. Never throws
/// for algorithm failures; they become a status in the report plus an exit code.
ExtractOutcome run_extract(const ModelParams& truth, const ExtractOptions& options);

/// Pretty-printed, deterministic serialization used for report files.
std::string dump_report(const json& report);

/// Fields: command, options, seeds, model/report paths, version, timestamp.
json make_manifest(const std::string& model_path, const std::string& report_path, const ExtractOptions& options,
                   double elapsed_ms);

/// Compares a recovered-parameter report against the truth model.
json verify_report(const ModelParams& truth, const json& report, std::size_t samples, std::uint64_t seed);

struct SweepSpec {
    std::string algorithm = "exact";
    std::vector<std::size_t> dims;
    std::vector<std::size_t> ranks{1};
    std::vector<double> oversampling{3.0};
    std::vector<double> tau_scales{1.0};
    std::size_t seeds = 1;
    std::uint64_t base_seed = 0;
    std::string noise_policy = "quantize";
};

inline constexpr const char* kBenchHeader =
    "algorithm,d,r,m,C,tau_scale,queries,frob_error,vec_error,success,elapsed_ms";

/// One CSV row per (cell, seed); header only for an empty grid.
void run_bench(const SweepSpec& sweep, std::ostream& csv);

} // namespace attnx::harness
