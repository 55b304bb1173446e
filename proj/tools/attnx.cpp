// attnx command-line front end.

#include "attnx/harness.hpp"
#include "attnx/multihead_analysis.hpp"
#include "attnx/random.hpp"
#include "attnx/version.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace attnx;
using harness::json;

namespace {

fs::path default_report_dir() {
    if (const char* dir = std::getenv("ATTNX_REPORT_DIR"); dir && *dir) return dir;
    return "reports";
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

int fail(const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return harness::exit_code_for(e.kind());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parameter extraction for single-head attention models from value queries"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    // gen-model
    harness::GenOptions gen;
    std::string gen_out;
    std::size_t gen_rank = 0;
    double gen_norm = 0.0, gen_margin = 0.0;
    auto* gen_cmd = app.add_subcommand("gen-model", "Generate a seeded ground-truth model file");
    gen_cmd->add_option("--kind", gen.kind, "attention | transformer | multihead")
        ->check(CLI::IsMember({"attention", "transformer", "multihead"}));
    gen_cmd->add_option("-d,--dim", gen.dim, "Token dimension")->required()->check(CLI::PositiveNumber);
    gen_cmd->add_option("-m,--hidden", gen.hidden, "FFN width (transformer; default d)");
    gen_cmd->add_option("-H,--heads", gen.heads, "Number of heads (multihead)");
    auto* rank_opt = gen_cmd->add_option("-r,--rank", gen_rank, "Rank of W via W = L R^T / d");
    auto* norm_opt = gen_cmd->add_option("--norm-bound", gen_norm, "Rescale so that ||W||_F <= bound");
    auto* margin_opt = gen_cmd->add_option("--margin", gen_margin, "Require min_i |v_i| >= margin with ||v|| = 1");
    gen_cmd->add_option("--entry-bound", gen.entry_bound, "W entries uniform in [-b, b]");
    gen_cmd->add_flag("--zero-value", gen.zero_value, "v = 0 (attention) or A w_o = 0 (transformer)");
    gen_cmd->add_option("--seed", gen.seed, "Base seed");
    gen_cmd->add_option("-o,--out", gen_out, "Model file")->required();

    // extract
    harness::ExtractOptions ex;
    std::string ex_model, ex_out;
    double ex_lowrank_norm = 0.0;
    auto* ex_cmd = app.add_subcommand("extract", "Run an extraction algorithm against a model oracle");
    ex_cmd->add_option("-a,--algorithm", ex.algorithm, "exact | lowrank | robust | transformer")
        ->required()
        ->check(CLI::IsMember({"exact", "lowrank", "robust", "transformer"}));
    ex_cmd->add_option("--model", ex_model, "Model file")->required()->check(CLI::ExistingFile);
    ex_cmd->add_option("-o,--out", ex_out, "Report file (default: $ATTNX_REPORT_DIR/<algorithm>-<seed>.json)");
    ex_cmd->add_option("--seed", ex.seed, "Base seed for probe, noise and check streams");
    ex_cmd->add_option("--probe-scheme", ex.probe_scheme, "deterministic | gaussian")
        ->check(CLI::IsMember({"deterministic", "gaussian"}));
    ex_cmd->add_option("-r,--rank", ex.rank, "Rank bound (lowrank)");
    ex_cmd->add_option("-C,--oversampling", ex.oversampling, "m = ceil(C r 2d) (lowrank)");
    auto* lr_norm_opt = ex_cmd->add_option("--lowrank-norm-bound", ex_lowrank_norm,
                                           "Known ||W||_F bound used to avoid sigmoid saturation (lowrank)");
    ex_cmd->add_option("--max-iters", ex.max_iters, "ADMM iteration cap (lowrank)");
    ex_cmd->add_option("--norm-bound", ex.norm_bound, "W with ||W*||_F <= W (robust)");
    ex_cmd->add_option("--margin", ex.margin, "mu with min |v*_i| >= mu (robust)");
    ex_cmd->add_option("--eps-v", ex.eps_v, "Target value-vector error (robust)");
    ex_cmd->add_option("--eps-w", ex.eps_w, "Target score-matrix error (robust)");
    ex_cmd->add_option("--noise-policy", ex.noise_policy, "quantize | hashsign | zero (robust)");
    ex_cmd->add_option("--tau-scale", ex.tau_scale, "Multiplier on the scheduled tolerances (robust)");
    ex_cmd->add_option("--floor-tolerance", ex.floor_tolerance, "Smallest tolerance the oracle honours (robust)");
    ex_cmd->add_option("--ffn-learner", ex.ffn_learner, "reference | none (transformer)")
        ->check(CLI::IsMember({"reference", "none"}));
    ex_cmd->add_flag("--include-params", ex.include_params, "Write recovered parameters into the report");
    ex_cmd->add_flag("--include-truth", ex.include_truth, "Write ground-truth parameters into the report");
    ex_cmd->add_option("--check-samples", ex.check_samples, "Random inputs for the functional check");

    // verify
    std::string ver_model, ver_report;
    std::size_t ver_samples = 1000;
    std::uint64_t ver_seed = 0;
    double ver_tol = 1e-6;
    auto* ver_cmd = app.add_subcommand("verify", "Compare a report's recovered parameters against a model");
    ver_cmd->add_option("--model", ver_model, "Truth model file")->required()->check(CLI::ExistingFile);
    ver_cmd->add_option("--report", ver_report, "Report written with --include-params")->required()->check(CLI::ExistingFile);
    ver_cmd->add_option("--samples", ver_samples, "Random inputs");
    ver_cmd->add_option("--seed", ver_seed, "Sampling seed");
    ver_cmd->add_option("--tol", ver_tol, "Max allowed |f - f_hat|");

    // demo-multihead
    std::size_t demo_heads = 2, demo_dim = 4, demo_samples = 1000;
    std::uint64_t demo_seed = 0;
    auto* demo_cmd = app.add_subcommand("demo-multihead", "Two multi-head parameterizations of one function");
    demo_cmd->add_option("-H,--heads", demo_heads, "Heads (>= 2)")->check(CLI::Range(2, 1 << 16));
    demo_cmd->add_option("-d,--dim", demo_dim, "Token dimension")->check(CLI::PositiveNumber);
    demo_cmd->add_option("--seed", demo_seed, "Seed");
    demo_cmd->add_option("--samples", demo_samples, "Random inputs for the equality check");

    // bench
    harness::SweepSpec sweep;
    std::string bench_out;
    auto* bench_cmd = app.add_subcommand("bench", "Seeded sweep, one CSV row per (cell, seed)");
    bench_cmd->add_option("-a,--algorithm", sweep.algorithm, "exact | lowrank | robust | transformer")
        ->check(CLI::IsMember({"exact", "lowrank", "robust", "transformer"}));
    bench_cmd->add_option("--dims", sweep.dims, "Dimensions")->delimiter(',');
    bench_cmd->add_option("--ranks", sweep.ranks, "Ranks (lowrank) or FFN widths (transformer)")->delimiter(',');
    bench_cmd->add_option("--oversampling", sweep.oversampling, "C values (lowrank)")->delimiter(',');
    bench_cmd->add_option("--tau-scales", sweep.tau_scales, "Tolerance multipliers (robust)")->delimiter(',');
    bench_cmd->add_option("--seeds", sweep.seeds, "Seeds per cell");
    bench_cmd->add_option("--base-seed", sweep.base_seed, "Base seed");
    bench_cmd->add_option("--noise-policy", sweep.noise_policy, "quantize | hashsign | zero (robust)");
    bench_cmd->add_option("-o,--out", bench_out, "CSV file (default: stdout)");

    // replay
    std::string replay_manifest;
    auto* replay_cmd = app.add_subcommand("replay", "Re-run a manifest and compare with its report byte for byte");
    replay_cmd->add_option("manifest", replay_manifest, "Manifest file")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? harness::kExitOk : harness::kExitUsage;
    }

    try {
        if (*gen_cmd) {
            if (*rank_opt) gen.rank = gen_rank;
            if (*norm_opt) gen.norm_bound = gen_norm;
            if (*margin_opt) gen.margin = gen_margin;
            const ModelParams model = harness::generate_model(gen);
            harness::write_json(gen_out, harness::model_to_json(model));
            json summary = harness::model_summary(model);
            summary["file"] = gen_out;
            summary["generator"] = gen.to_json();
            std::cout << summary.dump(2) << '\n';
            return harness::kExitOk;
        }

        if (*ex_cmd) {
            if (*lr_norm_opt) ex.lowrank_norm_bound = ex_lowrank_norm;
            const ModelParams model = harness::model_from_json(harness::read_json(ex_model));
            fs::path out = ex_out.empty() ? default_report_dir() / (ex.algorithm + "-" + std::to_string(ex.seed) + ".json")
                                          : fs::path(ex_out);
            if (out.has_parent_path()) fs::create_directories(out.parent_path());
            const harness::ExtractOutcome outcome = harness::run_extract(model, ex);
            harness::write_json(out, outcome.report);
            fs::path manifest_path = out;
            manifest_path.replace_extension(".manifest.json");
            harness::write_json(manifest_path,
                                harness::make_manifest(fs::absolute(ex_model).string(), fs::absolute(out).string(), ex,
                                                       outcome.elapsed_ms));
            json summary{{"status", outcome.report["status"]},
                         {"queries_used", outcome.report["queries_used"]},
                         {"report", out.string()},
                         {"manifest", manifest_path.string()},
                         {"elapsed_ms", outcome.elapsed_ms}};
            for (const char* key : {"frobenius_error", "relative_frobenius_error", "vector_error", "error"})
                if (outcome.report.contains(key)) summary[key] = outcome.report[key];
            std::cout << summary.dump(2) << '\n';
            return outcome.exit_code;
        }

        if (*ver_cmd) {
            const ModelParams truth = harness::model_from_json(harness::read_json(ver_model));
            json result = harness::verify_report(truth, harness::read_json(ver_report), ver_samples, ver_seed);
            const bool ok = result["function_max_abs_diff"].get<double>() <= ver_tol;
            result["tolerance"] = ver_tol;
            result["match"] = ok;
            std::cout << result.dump(2) << '\n';
            return ok ? harness::kExitOk : harness::kExitMismatch;
        }

        if (*demo_cmd) {
            Rng rng(derive_seed(demo_seed, "demo"));
            const auto d = static_cast<Eigen::Index>(demo_dim);
            const auto h = static_cast<Eigen::Index>(demo_heads);
            const Matrix a = uniform_matrix(rng, d, d, -2.0, 2.0);
            const Vector b = unit_vector(rng, d);
            const Vector spread = Vector::Constant(h, 1.0 / static_cast<double>(h));
            const Vector first = Vector::Unit(h, 0);
            const auto [lhs, rhs] = multihead::build_equivalent_pair(a, b, spread, first);
            const multihead::EqualityReport eq =
                multihead::functional_equality_test(lhs, rhs, demo_samples, 8, 1e-12, derive_seed(demo_seed, "check"));
            json out;
            for (const auto* p : {&lhs, &rhs}) {
                json heads = json::array();
                for (const auto& head : p->heads)
                    heads.push_back({{"W", matrix_json(head.score_matrix)},
                                     {"v", std::vector<double>(head.value_vector.data(),
                                                               head.value_vector.data() + head.value_vector.size())}});
                out[p == &lhs ? "first" : "second"] = heads;
            }
            out["parameter_distance"] = multihead::parameter_distance(lhs, rhs);
            out["max_abs_diff"] = eq.max_abs_diff;
            out["agree"] = eq.agree;
            out["samples"] = eq.samples;
            out["seed"] = eq.seed;
            out["disclaimer"] = eq.disclaimer;
            std::cout << out.dump(2) << '\n';
            return harness::kExitOk;
        }

        if (*bench_cmd) {
            if (bench_out.empty()) {
                harness::run_bench(sweep, std::cout);
            } else {
                std::ofstream csv(bench_out);
                if (!csv) throw Error(ErrorKind::InvalidInput, "cannot open " + bench_out);
                harness::run_bench(sweep, csv);
            }
            return harness::kExitOk;
        }

        if (*replay_cmd) {
            const json manifest = harness::read_json(replay_manifest);
            const auto options = harness::ExtractOptions::from_json(manifest.at("options"));
            const ModelParams model =
                harness::model_from_json(harness::read_json(manifest.at("model_path").get<std::string>()));
            const std::string report_path = manifest.at("report_path").get<std::string>();
            const std::string fresh = harness::dump_report(harness::run_extract(model, options).report);
            const bool identical = fresh == slurp(report_path);
            std::cout << json{{"report", report_path}, {"identical", identical}}.dump(2) << '\n';
            return identical ? harness::kExitOk : harness::kExitMismatch;
        }
    } catch (const Error& e) {
        return fail(e);
    } catch (const json::exception& e) {
        std::cerr << "error: malformed JSON: " << e.what() << '\n';
        return harness::kExitInvalidInput;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return harness::kExitInvalidInput;
    }
    return harness::kExitUsage;
}
