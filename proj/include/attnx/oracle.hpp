#pragma once

// Black-box query access to a hidden model. Recovery algorithms only ever hold
// a ValueOracle (or an OracleSession for tolerance queries), never parameters.

#include "attnx/model.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace attnx {

/// Exact value-query interface consumed by the exact and low-rank learners.
class ValueOracle {
public:
    virtual ~ValueOracle() = default;
    virtual double value(const SequenceInput& x) = 0;
    virtual std::size_t query_count() const = 0;
    /// Token dimension d of the hidden model (public by assumption).
    virtual std::size_t dim() const = 0;
};

enum class OracleMode { Exact, Approximate };

struct NoisePolicy {
    enum class Variant { Quantize, HashSign, Zero };
    Variant variant = Variant::Quantize;
    std::uint64_t seed = 0; // HashSign only

    static NoisePolicy quantize() { return {Variant::Quantize, 0}; }
    static NoisePolicy hash_sign(std::uint64_t seed) { return {Variant::HashSign, seed}; }
    static NoisePolicy zero() { return {Variant::Zero, 0}; }
};

std::string to_string(NoisePolicy::Variant variant);
/// Parses "quantize" | "hashsign" | "zero"; throws InvalidInput otherwise.
NoisePolicy::Variant parse_noise_variant(const std::string& name);

/// Exact bit-pattern serialization of an input (and an optional tolerance),
/// used as the determinism/cache key.
std::string canonical_bytes(const SequenceInput& x);

class OracleSession : public ValueOracle {
public:
    static OracleSession exact(ModelParams model);
    /// `floor_tolerance` is the smallest tau the session will honour.
    static OracleSession approximate(ModelParams model, NoisePolicy policy, double floor_tolerance);

    /// Exact value query. Throws Protocol on an approximate session.
    double vq(const SequenceInput& x);
    /// Approximate value query within +-tau of the true output. Throws
    /// Protocol on an exact session, ToleranceUnsatisfiable if tau < floor.
    double avq(const SequenceInput& x, double tau);

    double value(const SequenceInput& x) override { return vq(x); }
    std::size_t query_count() const override { return query_count_; }
    std::size_t dim() const override { return model_dim(model_); }

    OracleMode mode() const { return mode_; }
    double floor_tolerance() const { return floor_; }
    const NoisePolicy& policy() const { return policy_; }
    const char* model_kind() const;

private:
    OracleSession(ModelParams model, OracleMode mode, NoisePolicy policy, double floor);

    double perturb(double truth, double tau, const std::string& key) const;

    ModelParams model_;
    OracleMode mode_;
    NoisePolicy policy_;
    double floor_;
    std::size_t query_count_ = 0;
    std::unordered_map<std::string, double> cache_;
};

/// Forwards to another oracle and keeps the full query transcript.
class RecordingOracle : public ValueOracle {
public:
    explicit RecordingOracle(ValueOracle& inner) : inner_(inner) {}

    double value(const SequenceInput& x) override;
    std::size_t query_count() const override { return inner_.query_count(); }
    std::size_t dim() const override { return inner_.dim(); }

    const std::vector<std::pair<Matrix, double>>& transcript() const { return transcript_; }

private:
    ValueOracle& inner_;
    std::vector<std::pair<Matrix, double>> transcript_;
};

} // namespace attnx
