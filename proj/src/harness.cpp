#include "attnx/harness.hpp"

#include "attnx/exact_recovery.hpp"
#include "attnx/lowrank_recovery.hpp"
#include "attnx/matrix_sensing.hpp"
#include "attnx/random.hpp"
#include "attnx/report.hpp"
#include "attnx/robust_recovery.hpp"
#include "attnx/transformer_recovery.hpp"
#include "attnx/version.hpp"

#include <Eigen/SVD>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

namespace attnx::harness {

namespace {

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json vector_to_json(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

double finite_number(const json& value, const char* field) {
    if (!value.is_number()) throw Error(ErrorKind::InvalidInput, std::string(field) + " must hold numbers");
    const double x = value.get<double>();
    if (!std::isfinite(x)) throw Error(ErrorKind::InvalidInput, std::string(field) + " must hold finite numbers");
    return x;
}

Matrix matrix_from_json(const json& doc, const char* field, Eigen::Index rows, Eigen::Index cols) {
    if (!doc.is_array() || static_cast<Eigen::Index>(doc.size()) != rows)
        throw Error(ErrorKind::Shape, std::string(field) + " must have " + std::to_string(rows) + " rows");
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const json& row = doc[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw Error(ErrorKind::Shape, std::string(field) + " rows must have " + std::to_string(cols) + " entries");
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = finite_number(row[static_cast<std::size_t>(j)], field);
    }
    return m;
}

Vector vector_from_json(const json& doc, const char* field, Eigen::Index size) {
    if (!doc.is_array() || static_cast<Eigen::Index>(doc.size()) != size)
        throw Error(ErrorKind::Shape, std::string(field) + " must have " + std::to_string(size) + " entries");
    Vector v(size);
    for (Eigen::Index i = 0; i < size; ++i) v(i) = finite_number(doc[static_cast<std::size_t>(i)], field);
    return v;
}

const json& field(const json& doc, const char* name) {
    if (!doc.is_object() || !doc.contains(name))
        throw Error(ErrorKind::InvalidInput, std::string("missing field '") + name + "'");
    return doc.at(name);
}

std::size_t positive_size(const json& doc, const char* name) {
    const json& value = field(doc, name);
    if (!value.is_number_integer() || value.get<long long>() < 1)
        throw Error(ErrorKind::InvalidInput, std::string(name) + " must be a positive integer");
    return value.get<std::size_t>();
}

Matrix random_score_matrix(Rng& rng, const GenOptions& options) {
    const auto d = static_cast<Eigen::Index>(options.dim);
    Matrix w;
    if (options.rank) {
        const auto r = static_cast<Eigen::Index>(*options.rank);
        w = gaussian_matrix(rng, d, r) * gaussian_matrix(rng, d, r).transpose() / static_cast<double>(d);
    } else {
        w = uniform_matrix(rng, d, d, -options.entry_bound, options.entry_bound);
    }
    if (options.norm_bound && w.norm() > *options.norm_bound) w *= *options.norm_bound / w.norm();
    return w;
}

// Unit-norm v with min_i |v_i| >= margin: v_i = sign(g_i) (margin + k |g_i|).
Vector margin_vector(Rng& rng, std::size_t dim, double margin) {
    const double d = static_cast<double>(dim);
    if (margin * std::sqrt(d) > 1.0)
        throw Error(ErrorKind::ConstraintInfeasible, "margin * sqrt(d) > 1 is incompatible with ||v|| <= 1");
    const Vector g = gaussian_vector(rng, static_cast<Eigen::Index>(dim));
    const double s1 = g.cwiseAbs().sum();
    const double s2 = g.squaredNorm();
    const double k = (-margin * s1 + std::sqrt(margin * margin * s1 * s1 - s2 * (d * margin * margin - 1.0))) / s2;
    Vector v(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) v(i) = (g(i) < 0 ? -1.0 : 1.0) * (margin + k * std::abs(g(i)));
    return v;
}

Vector value_vector(Rng& rng, const GenOptions& options) {
    const auto d = static_cast<Eigen::Index>(options.dim);
    if (options.zero_value) return Vector::Zero(d);
    if (options.margin) return margin_vector(rng, options.dim, *options.margin);
    return unit_vector(rng, d);
}

Matrix separated_columns(Rng& rng, Eigen::Index d, Eigen::Index m) {
    Matrix a;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        a = gaussian_matrix(rng, d, m);
        bool separated = true;
        for (Eigen::Index i = 0; i < m && separated; ++i)
            for (Eigen::Index j = i + 1; j < m && separated; ++j)
                separated = std::abs(a.col(i).normalized().dot(a.col(j).normalized())) < 0.9;
        if (separated) return a;
    }
    return a;
}

std::string iso_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm utc{};
    gmtime_r(&now, &utc);
    std::ostringstream os;
    os << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

double max_function_gap(const ModelParams& lhs, const ModelParams& rhs, std::size_t samples, std::size_t max_len,
                        std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> length(1, max_len);
    double gap = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        const SequenceInput x = gaussian_sequence(rng, length(rng), model_dim(lhs));
        gap = std::max(gap, std::abs(forward(lhs, x) - forward(rhs, x)));
    }
    return gap;
}

json diagnostics_to_json(const std::map<std::string, double>& diagnostics) {
    json out = json::object();
    for (const auto& [key, value] : diagnostics) out[key] = std::isfinite(value) ? json(value) : json(nullptr);
    return out;
}

} // namespace

int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidInput:
    case ErrorKind::Shape:
    case ErrorKind::Protocol:
    case ErrorKind::UnsupportedConfiguration: return kExitInvalidInput;
    case ErrorKind::NonIdentifiable: return kExitNonIdentifiable;
    case ErrorKind::ToleranceUnsatisfiable: return kExitToleranceUnsatisfiable;
    case ErrorKind::LearnerFailure: return kExitLearnerFailure;
    case ErrorKind::ConstraintInfeasible: return kExitConstraintInfeasible;
    case ErrorKind::ProbeConstruction:
    case ErrorKind::ProbeRejected:
    case ErrorKind::OracleInconsistency:
    case ErrorKind::IllConditioned:
    case ErrorKind::Numerical: return kExitNumerical;
    }
    return kExitUsage;
}

json model_to_json(const ModelParams& model) {
    return std::visit(
        [](const auto& p) -> json {
            using T = std::decay_t<decltype(p)>;
            json doc;
            if constexpr (std::is_same_v<T, AttentionParams>) {
                doc["kind"] = "attention";
                doc["d"] = p.dim();
                doc["W"] = matrix_to_json(p.score_matrix);
                doc["v"] = vector_to_json(p.value_vector);
            } else if constexpr (std::is_same_v<T, TransformerParams>) {
                doc["kind"] = "transformer";
                doc["d"] = p.dim();
                doc["m"] = p.hidden();
                doc["W"] = matrix_to_json(p.score_matrix);
                doc["A"] = matrix_to_json(p.hidden_matrix);
                doc["w_o"] = vector_to_json(p.output_vector);
            } else {
                doc["kind"] = "multihead";
                doc["d"] = p.dim();
                doc["heads"] = json::array();
                for (const auto& head : p.heads)
                    doc["heads"].push_back({{"W", matrix_to_json(head.score_matrix)},
                                            {"v", vector_to_json(head.value_vector)}});
            }
            return doc;
        },
        model);
}

ModelParams model_from_json(const json& doc) {
    const json& kind_field = field(doc, "kind");
    if (!kind_field.is_string()) throw Error(ErrorKind::InvalidInput, "kind must be a string");
    const std::string kind = kind_field.get<std::string>();
    const auto d = static_cast<Eigen::Index>(positive_size(doc, "d"));

    if (kind == "attention") {
        AttentionParams p{matrix_from_json(field(doc, "W"), "W", d, d), vector_from_json(field(doc, "v"), "v", d)};
        p.validate();
        return p;
    }
    if (kind == "transformer") {
        const auto m = static_cast<Eigen::Index>(positive_size(doc, "m"));
        TransformerParams p{matrix_from_json(field(doc, "W"), "W", d, d), matrix_from_json(field(doc, "A"), "A", d, m),
                            vector_from_json(field(doc, "w_o"), "w_o", m)};
        p.validate();
        return p;
    }
    if (kind == "multihead") {
        const json& heads = field(doc, "heads");
        if (!heads.is_array()) throw Error(ErrorKind::InvalidInput, "heads must be an array");
        MultiHeadParams p;
        for (const json& head : heads)
            p.heads.push_back({matrix_from_json(field(head, "W"), "W", d, d), vector_from_json(field(head, "v"), "v", d)});
        p.validate();
        return p;
    }
    throw Error(ErrorKind::InvalidInput, "unknown model kind '" + kind + "'");
}

void write_json(const std::filesystem::path& path, const json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::InvalidInput, "cannot open " + path.string() + " for writing");
    out << dump_report(doc);
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::InvalidInput, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::InvalidInput, path.string() + ": " + e.what());
    }
}

std::string dump_report(const json& report) { return report.dump(2) + "\n"; }

json GenOptions::to_json() const {
    json doc{{"kind", kind}, {"d", dim}, {"hidden", hidden}, {"heads", heads}, {"entry_bound", entry_bound},
             {"zero_value", zero_value}, {"seed", seed}};
    doc["rank"] = rank ? json(*rank) : json(nullptr);
    doc["norm_bound"] = norm_bound ? json(*norm_bound) : json(nullptr);
    doc["margin"] = margin ? json(*margin) : json(nullptr);
    return doc;
}

ModelParams generate_model(const GenOptions& options) {
    if (options.dim < 1) throw Error(ErrorKind::InvalidInput, "d must be >= 1");
    if (options.rank && (*options.rank < 1 || *options.rank > options.dim))
        throw Error(ErrorKind::ConstraintInfeasible, "rank must lie in [1, d]");
    if (options.norm_bound && !(*options.norm_bound > 0.0))
        throw Error(ErrorKind::ConstraintInfeasible, "norm bound must be positive");
    if (options.margin && !(*options.margin > 0.0))
        throw Error(ErrorKind::ConstraintInfeasible, "margin must be positive");
    if (options.margin && options.zero_value)
        throw Error(ErrorKind::ConstraintInfeasible, "a positive margin contradicts a zero value vector");

    Rng rng(derive_seed(options.seed, "model"));
    const auto d = static_cast<Eigen::Index>(options.dim);

    if (options.kind == "attention") {
        Matrix w = random_score_matrix(rng, options);
        return AttentionParams{std::move(w), value_vector(rng, options)};
    }
    if (options.kind == "transformer") {
        const auto m = static_cast<Eigen::Index>(options.hidden == 0 ? options.dim : options.hidden);
        TransformerParams p;
        p.score_matrix = random_score_matrix(rng, options);
        p.hidden_matrix = separated_columns(rng, d, m);
        std::uniform_real_distribution<double> magnitude(0.5, 1.5);
        std::bernoulli_distribution coin(0.5);
        p.output_vector.resize(m);
        for (Eigen::Index j = 0; j < m; ++j) p.output_vector(j) = (coin(rng) ? 1.0 : -1.0) * magnitude(rng);
        if (options.zero_value) {
            // Last column cancels the rest so that A w_o = 0 with w_o != 0.
            if (m < 2) throw Error(ErrorKind::ConstraintInfeasible, "A w_o = 0 with w_o != 0 needs m >= 2");
            const Vector partial = p.hidden_matrix.leftCols(m - 1) * p.output_vector.head(m - 1);
            p.hidden_matrix.col(m - 1) = -partial / p.output_vector(m - 1);
        }
        return p;
    }
    if (options.kind == "multihead") {
        if (options.heads < 1) throw Error(ErrorKind::InvalidInput, "heads must be >= 1");
        MultiHeadParams p;
        for (std::size_t h = 0; h < options.heads; ++h) {
            Matrix w = random_score_matrix(rng, options);
            p.heads.push_back({std::move(w), value_vector(rng, options)});
        }
        return p;
    }
    throw Error(ErrorKind::InvalidInput, "unknown model kind '" + options.kind + "'");
}

json model_summary(const ModelParams& model) {
    auto attention_summary = [](const Matrix& w, const Vector& v) {
        json s;
        s["score_frobenius_norm"] = w.norm();
        s["score_numerical_rank"] = sensing::numerical_rank(w);
        s["value_norm"] = v.norm();
        s["value_margin"] = v.size() ? v.cwiseAbs().minCoeff() : 0.0;
        return s;
    };
    return std::visit(
        [&](const auto& p) -> json {
            using T = std::decay_t<decltype(p)>;
            json s;
            if constexpr (std::is_same_v<T, AttentionParams>) {
                s = attention_summary(p.score_matrix, p.value_vector);
                s["kind"] = "attention";
            } else if constexpr (std::is_same_v<T, TransformerParams>) {
                s = attention_summary(p.score_matrix, p.merged_value());
                s["kind"] = "transformer";
                s["hidden"] = p.hidden();
            } else {
                s["kind"] = "multihead";
                s["heads"] = json::array();
                for (const auto& head : p.heads) s["heads"].push_back(attention_summary(head.score_matrix, head.value_vector));
            }
            s["d"] = p.dim();
            return s;
        },
        model);
}

json ExtractOptions::to_json() const {
    json doc{{"algorithm", algorithm},
             {"seed", seed},
             {"probe_scheme", probe_scheme},
             {"rank", rank},
             {"oversampling", oversampling},
             {"max_iters", max_iters},
             {"norm_bound", norm_bound},
             {"margin", margin},
             {"eps_v", eps_v},
             {"eps_w", eps_w},
             {"noise_policy", noise_policy},
             {"tau_scale", tau_scale},
             {"floor_tolerance", floor_tolerance},
             {"ffn_learner", ffn_learner},
             {"include_params", include_params},
             {"include_truth", include_truth},
             {"check_samples", check_samples}};
    doc["lowrank_norm_bound"] = lowrank_norm_bound ? json(*lowrank_norm_bound) : json(nullptr);
    return doc;
}

ExtractOptions ExtractOptions::from_json(const json& doc) {
    ExtractOptions o;
    try {
        o.algorithm = doc.at("algorithm").get<std::string>();
        o.seed = doc.at("seed").get<std::uint64_t>();
        o.probe_scheme = doc.value("probe_scheme", o.probe_scheme);
        o.rank = doc.value("rank", o.rank);
        o.oversampling = doc.value("oversampling", o.oversampling);
        o.max_iters = doc.value("max_iters", o.max_iters);
        o.norm_bound = doc.value("norm_bound", o.norm_bound);
        o.margin = doc.value("margin", o.margin);
        o.eps_v = doc.value("eps_v", o.eps_v);
        o.eps_w = doc.value("eps_w", o.eps_w);
        o.noise_policy = doc.value("noise_policy", o.noise_policy);
        o.tau_scale = doc.value("tau_scale", o.tau_scale);
        o.floor_tolerance = doc.value("floor_tolerance", o.floor_tolerance);
        o.ffn_learner = doc.value("ffn_learner", o.ffn_learner);
        o.include_params = doc.value("include_params", o.include_params);
        o.include_truth = doc.value("include_truth", o.include_truth);
        o.check_samples = doc.value("check_samples", o.check_samples);
        if (doc.contains("lowrank_norm_bound") && !doc["lowrank_norm_bound"].is_null())
            o.lowrank_norm_bound = doc["lowrank_norm_bound"].get<double>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidInput, std::string("malformed extract options: ") + e.what());
    }
    return o;
}

ExtractOutcome run_extract(const ModelParams& truth, const ExtractOptions& options) {
    ExtractOutcome outcome;
    json& rep = outcome.report;
    rep["toolkit_version"] = kVersion;
    rep["algorithm"] = options.algorithm;
    rep["d"] = model_dim(truth);
    rep["seed"] = options.seed;
    const std::uint64_t probe_seed = derive_seed(options.seed, "probe");
    const std::uint64_t noise_seed = derive_seed(options.seed, "noise");
    const std::uint64_t check_seed = derive_seed(options.seed, "check");
    rep["sub_seeds"] = {{"probe", probe_seed}, {"noise", noise_seed}, {"check", check_seed}};

    const auto start = std::chrono::steady_clock::now();
    std::unique_ptr<OracleSession> session;
    try {
        const bool wants_attention = options.algorithm != "transformer";
        if (options.algorithm != "exact" && options.algorithm != "lowrank" && options.algorithm != "robust" &&
            options.algorithm != "transformer")
            throw Error(ErrorKind::InvalidInput, "unknown algorithm '" + options.algorithm + "'");
        if (wants_attention && !std::holds_alternative<AttentionParams>(truth))
            throw Error(ErrorKind::InvalidInput, options.algorithm + " extraction needs an attention model");
        if (!wants_attention && !std::holds_alternative<TransformerParams>(truth))
            throw Error(ErrorKind::InvalidInput, "transformer extraction needs a transformer model");

        RecoveryReport report;
        if (options.algorithm == "robust") {
            NoisePolicy policy{parse_noise_variant(options.noise_policy), noise_seed};
            session = std::make_unique<OracleSession>(OracleSession::approximate(truth, policy, options.floor_tolerance));
            robust::RobustConfig config{options.norm_bound, options.margin, options.eps_v, options.eps_w, options.tau_scale};
            report = robust::recover_robust(*session, config);
        } else {
            session = std::make_unique<OracleSession>(OracleSession::exact(truth));
            exact::ExactConfig exact_config;
            if (options.probe_scheme == "gaussian") exact_config.scheme = exact::ProbeScheme::Gaussian;
            else if (options.probe_scheme != "deterministic")
                throw Error(ErrorKind::InvalidInput, "unknown probe scheme '" + options.probe_scheme + "'");
            exact_config.probe_seed = probe_seed;

            if (options.algorithm == "exact") {
                report = exact::recover(*session, exact_config);
            } else if (options.algorithm == "lowrank") {
                lowrank::LowRankConfig config;
                config.rank_bound = options.rank;
                config.oversampling = options.oversampling;
                config.rng_seed = probe_seed;
                config.norm_bound = options.lowrank_norm_bound;
                config.solver.max_iters = options.max_iters;
                report = lowrank::recover_lowrank(*session, config);
            } else {
                const auto& tf = std::get<TransformerParams>(truth);
                std::unique_ptr<transformer::FfnLearner> learner;
                if (options.ffn_learner == "reference") {
                    transformer::ReferenceLearnerConfig learner_config;
                    learner_config.seed = derive_seed(options.seed, "ffn");
                    learner = std::make_unique<transformer::ReferenceFfnLearner>(learner_config);
                } else if (options.ffn_learner != "none") {
                    throw Error(ErrorKind::InvalidInput, "unknown FFN learner '" + options.ffn_learner + "'");
                }
                report = transformer::recover_transformer(*session, learner.get(), tf.hidden(), exact_config);
            }
        }

        rep["status"] = report.converged ? "ok" : "solver-non-convergence";
        outcome.exit_code = report.converged ? kExitOk : kExitSolverNonConvergence;
        rep["queries_used"] = report.queries_used;
        rep["converged"] = report.converged;
        rep["diagnostics"] = diagnostics_to_json(report.diagnostics);

        AttentionParams reference;
        if (const auto* att = std::get_if<AttentionParams>(&truth)) reference = *att;
        else {
            const auto& tf = std::get<TransformerParams>(truth);
            reference = {tf.score_matrix, tf.merged_value()};
        }
        report.compare_with(reference);
        rep["frobenius_error"] = *report.frobenius_error;
        const double truth_norm = reference.score_matrix.norm();
        rep["relative_frobenius_error"] = truth_norm > 0 ? *report.frobenius_error / truth_norm : *report.frobenius_error;
        rep["vector_error"] = *report.vector_error;

        if (options.algorithm == "robust")
            rep["within_targets"] = *report.vector_error <= options.eps_v && *report.frobenius_error <= options.eps_w;

        json recovered;
        if (const auto* tf = std::get_if<TransformerParams>(&truth)) {
            if (report.hidden_matrix) {
                const TransformerParams learned{report.score_matrix, *report.hidden_matrix, *report.output_vector};
                rep["function_max_abs_diff"] = max_function_gap(truth, learned, options.check_samples, 4, check_seed);
                recovered = model_to_json(learned);
            } else {
                recovered = {{"kind", "attention"},
                             {"d", tf->dim()},
                             {"W", matrix_to_json(report.score_matrix)},
                             {"v", vector_to_json(report.value_vector)}};
            }
        } else {
            rep["function_max_abs_diff"] =
                max_function_gap(truth, report.attention(), options.check_samples, 5, check_seed);
            recovered = model_to_json(report.attention());
        }
        if (options.include_params) rep["recovered"] = std::move(recovered);
    } catch (const Error& e) {
        rep["status"] = std::string(to_string(e.kind()));
        rep["error"] = e.what();
        rep["queries_used"] = session ? session->query_count() : 0;
        outcome.exit_code = exit_code_for(e.kind());
    }
    if (options.include_truth) rep["truth"] = model_to_json(truth);
    outcome.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return outcome;
}

json make_manifest(const std::string& model_path, const std::string& report_path, const ExtractOptions& options,
                   double elapsed_ms) {
    return {{"command", "extract"},
            {"toolkit_version", kVersion},
            {"timestamp", iso_timestamp()},
            {"model_path", model_path},
            {"report_path", report_path},
            {"options", options.to_json()},
            {"seeds",
             {{"base", options.seed},
              {"probe", derive_seed(options.seed, "probe")},
              {"noise", derive_seed(options.seed, "noise")},
              {"check", derive_seed(options.seed, "check")}}},
            {"elapsed_ms", elapsed_ms}};
}

json verify_report(const ModelParams& truth, const json& report, std::size_t samples, std::uint64_t seed) {
    if (!report.contains("recovered"))
        throw Error(ErrorKind::InvalidInput, "report has no recovered parameters (rerun extract with --include-params)");
    const ModelParams recovered = model_from_json(report.at("recovered"));
    json out;
    out["samples"] = samples;
    out["seed"] = seed;

    AttentionParams reference;
    if (const auto* att = std::get_if<AttentionParams>(&truth)) reference = *att;
    else if (const auto* tf = std::get_if<TransformerParams>(&truth)) reference = {tf->score_matrix, tf->merged_value()};
    else throw Error(ErrorKind::InvalidInput, "verify supports attention and transformer models");

    const Matrix* w = nullptr;
    Vector v;
    if (const auto* att = std::get_if<AttentionParams>(&recovered)) {
        w = &att->score_matrix;
        v = att->value_vector;
    } else if (const auto* tf = std::get_if<TransformerParams>(&recovered)) {
        w = &tf->score_matrix;
        v = tf->merged_value();
    } else {
        throw Error(ErrorKind::InvalidInput, "recovered model kind is not supported");
    }
    if (w->rows() != reference.score_matrix.rows() || v.size() != reference.value_vector.size())
        throw Error(ErrorKind::Shape, "recovered parameters do not match the truth model's d");
    out["frobenius_error"] = (*w - reference.score_matrix).norm();
    out["vector_error"] = (v - reference.value_vector).norm();

    const bool comparable = truth.index() == recovered.index();
    if (comparable) out["function_max_abs_diff"] = max_function_gap(truth, recovered, samples, 5, seed);
    else out["function_max_abs_diff"] = max_function_gap(ModelParams(reference), AttentionParams{*w, v}, samples, 5, seed);
    return out;
}

void run_bench(const SweepSpec& sweep, std::ostream& csv) {
    csv << kBenchHeader << '\n';
    const bool uses_rank = sweep.algorithm == "lowrank" || sweep.algorithm == "transformer";
    const std::vector<std::size_t> ranks = uses_rank ? sweep.ranks : std::vector<std::size_t>{0};
    const std::vector<double> factors = sweep.algorithm == "lowrank" ? sweep.oversampling : std::vector<double>{0.0};
    const std::vector<double> taus = sweep.algorithm == "robust" ? sweep.tau_scales : std::vector<double>{1.0};

    for (std::size_t d : sweep.dims)
        for (std::size_t r : ranks)
            for (double c : factors)
                for (double tau : taus)
                    for (std::size_t s = 0; s < sweep.seeds; ++s) {
                        const std::uint64_t seed = derive_seed(sweep.base_seed, "bench-" + std::to_string(s));
                        GenOptions gen;
                        gen.dim = d;
                        gen.seed = seed;
                        ExtractOptions opts;
                        opts.algorithm = sweep.algorithm;
                        opts.seed = seed;
                        opts.check_samples = 0;
                        std::size_t m = 0;
                        if (sweep.algorithm == "exact" || sweep.algorithm == "lowrank" || sweep.algorithm == "robust") {
                            gen.kind = "attention";
                        } else {
                            gen.kind = "transformer";
                            gen.hidden = std::min(r, d);
                            m = gen.hidden;
                        }
                        if (sweep.algorithm == "lowrank") {
                            gen.rank = r;
                            opts.rank = r;
                            opts.oversampling = c;
                            lowrank::LowRankConfig lc;
                            lc.rank_bound = r;
                            lc.oversampling = c;
                            m = lowrank::measurement_count(d, lc);
                        } else if (sweep.algorithm == "robust") {
                            gen.norm_bound = opts.norm_bound;
                            gen.margin = opts.margin;
                            opts.noise_policy = sweep.noise_policy;
                            opts.tau_scale = tau;
                        }

                        bool success = false;
                        double frob = NAN, vec = NAN, elapsed = 0.0;
                        std::size_t queries = 0;
                        try {
                            const ModelParams model = generate_model(gen);
                            const ExtractOutcome out = run_extract(model, opts);
                            elapsed = out.elapsed_ms;
                            const json& rep = out.report;
                            queries = rep.value("queries_used", std::size_t{0});
                            if (out.exit_code == kExitOk) {
                                frob = sweep.algorithm == "robust" ? rep["frobenius_error"].get<double>()
                                                                  : rep["relative_frobenius_error"].get<double>();
                                vec = rep["vector_error"].get<double>();
                                if (sweep.algorithm == "exact") success = frob <= 1e-7 && vec <= 1e-12;
                                else if (sweep.algorithm == "lowrank") success = frob <= 1e-4;
                                else if (sweep.algorithm == "robust") success = rep["within_targets"].get<bool>();
                                else success = frob <= 1e-8;
                            }
                        } catch (const Error&) {
                            success = false;
                        }
                        std::ostringstream row;
                        row << std::setprecision(10) << sweep.algorithm << ',' << d << ',' << r << ',' << m << ','
                            << c << ',' << tau << ',' << queries << ',' << frob << ',' << vec << ','
                            << (success ? 1 : 0) << ',' << elapsed;
                        csv << row.str() << '\n';
                    }
}

} // namespace attnx::harness
