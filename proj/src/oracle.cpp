#include "attnx/oracle.hpp"

#include "attnx/error.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace attnx {

namespace {

void append_raw(std::string& out, const void* data, std::size_t n) {
    out.append(static_cast<const char*>(data), n);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::uint64_t h, const std::string& bytes) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace

std::string to_string(NoisePolicy::Variant variant) {
    switch (variant) {
    case NoisePolicy::Variant::Quantize: return "quantize";
    case NoisePolicy::Variant::HashSign: return "hashsign";
    case NoisePolicy::Variant::Zero: return "zero";
    }
    return "unknown";
}

NoisePolicy::Variant parse_noise_variant(const std::string& name) {
    if (name == "quantize") return NoisePolicy::Variant::Quantize;
    if (name == "hashsign" || name == "hash-sign") return NoisePolicy::Variant::HashSign;
    if (name == "zero") return NoisePolicy::Variant::Zero;
    throw Error(ErrorKind::InvalidInput, "unknown noise policy '" + name + "'");
}

std::string canonical_bytes(const SequenceInput& x) {
    std::string out;
    const std::uint64_t n = x.length(), d = x.dim();
    out.reserve(16 + 8 * n * d);
    append_raw(out, &n, sizeof n);
    append_raw(out, &d, sizeof d);
    const Matrix& rows = x.rows();
    for (Eigen::Index i = 0; i < rows.rows(); ++i)
        for (Eigen::Index j = 0; j < rows.cols(); ++j) {
            std::uint64_t bits;
            const double value = rows(i, j);
            std::memcpy(&bits, &value, sizeof bits);
            append_raw(out, &bits, sizeof bits);
        }
    return out;
}

OracleSession::OracleSession(ModelParams model, OracleMode mode, NoisePolicy policy, double floor)
    : model_(std::move(model)), mode_(mode), policy_(policy), floor_(floor) {
    std::visit([](const auto& p) { p.validate(); }, model_);
}

OracleSession OracleSession::exact(ModelParams model) {
    return OracleSession(std::move(model), OracleMode::Exact, NoisePolicy::zero(), 0.0);
}

OracleSession OracleSession::approximate(ModelParams model, NoisePolicy policy, double floor_tolerance) {
    if (!(floor_tolerance >= 0.0) || !std::isfinite(floor_tolerance))
        throw Error(ErrorKind::InvalidInput, "floor tolerance must be a finite nonnegative number");
    return OracleSession(std::move(model), OracleMode::Approximate, policy, floor_tolerance);
}

const char* OracleSession::model_kind() const {
    switch (model_.index()) {
    case 0: return "attention";
    case 1: return "transformer";
    default: return "multihead";
    }
}

double OracleSession::vq(const SequenceInput& x) {
    if (mode_ != OracleMode::Exact)
        throw Error(ErrorKind::Protocol, "vq called on an approximate-query session");
    ++query_count_;
    return forward(model_, x);
}

double OracleSession::avq(const SequenceInput& x, double tau) {
    if (mode_ != OracleMode::Approximate)
        throw Error(ErrorKind::Protocol, "avq called on an exact-query session");
    if (!std::isfinite(tau) || tau < floor_) {
        std::ostringstream os;
        os << "requested tolerance " << tau << " is below the session floor " << floor_;
        throw Error(ErrorKind::ToleranceUnsatisfiable, os.str());
    }
    ++query_count_;
    std::string key = canonical_bytes(x);
    append_raw(key, &tau, sizeof tau);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    const double answer = perturb(forward(model_, x), tau, key);
    cache_.emplace(std::move(key), answer);
    return answer;
}

double OracleSession::perturb(double truth, double tau, const std::string& key) const {
    if (tau == 0.0) return truth;
    switch (policy_.variant) {
    case NoisePolicy::Variant::Zero: return truth;
    case NoisePolicy::Variant::Quantize: {
        const double rounded = std::nearbyint(truth / tau) * tau;
        return std::abs(rounded - truth) <= tau ? rounded : truth;
    }
    case NoisePolicy::Variant::HashSign: {
        const std::uint64_t h = fnv1a(splitmix64(policy_.seed) ^ 0xcbf29ce484222325ULL, key);
        const double sign = (splitmix64(h) >> 63) ? 1.0 : -1.0;
        // Just inside the band, so an evaluator differing by a few ulps still
        // sees the contract hold.
        const double reach = tau * (1.0 - 0x1p-16);
        double noisy = truth + sign * reach;
        while (std::abs(noisy - truth) > reach) noisy = std::nextafter(noisy, truth);
        return noisy;
    }
    }
    return truth;
}

double RecordingOracle::value(const SequenceInput& x) {
    const double y = inner_.value(x);
    transcript_.emplace_back(x.rows(), y);
    return y;
}

} // namespace attnx
