#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace adapterlab {

using TokenId = std::uint32_t;

// Canonical log-space representation of "probability zero".
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

/// Vocabulary over which distributions are defined. The token set always
/// includes a reserved end-of-string token at `eos_id`.
struct Vocab {
    std::vector<std::string> tokens;
    TokenId eos_id = 0;

    std::size_t size() const { return tokens.size(); }

    /// FNV-1a over the surface strings; identifies a vocabulary in file
    /// headers without shipping the token list.
    std::uint64_t hash() const;

    void validate() const;  // throws std::invalid_argument on violation
};

/// A dense conditional distribution over the extended vocabulary, stored in
/// log space (nats). Immutable after construction; zero probability is the
/// exact -inf sentinel, never a tiny float.
class CondDist {
public:
    /// Wraps an already-normalized log-probability vector. Verifies that the
    /// exp-sum is 1 within 1e-9 and that no entry is positive.
    static CondDist from_logp(std::vector<double> logp);

    /// Convenience for already-normalized linear probabilities.
    static CondDist from_probs(std::span<const double> probs);

    std::size_t size() const { return logp_.size(); }
    std::size_t support_size() const { return support_size_; }

    double logp(TokenId y) const { return logp_[y]; }
    double prob(TokenId y) const;

    const std::vector<double>& log_probs() const { return logp_; }
    std::vector<double> probs() const;

    bool operator==(const CondDist& other) const { return logp_ == other.logp_; }

private:
    CondDist(std::vector<double> logp, std::size_t support);

    std::vector<double> logp_;
    std::size_t support_size_ = 0;
};

/// Normalizes non-negative linear weights into a distribution via a
/// log-sum-exp path. Throws std::invalid_argument on negative/NaN input or
/// when every weight is zero.
CondDist normalize(std::span<const double> weights);

/// Normalizes log-weights (entries may be -inf). Throws when no entry is
/// finite or any entry is NaN/+inf.
CondDist normalize_log(std::span<const double> log_weights);

/// Shannon entropy in nats, with 0 * log 0 := 0.
double entropy(const CondDist& p);

/// (p(y) + eps) / (1 + |V|*eps) for every token. Throws on eps <= 0.
CondDist epsilon_smooth(const CondDist& p, double eps);

/// Indicator distribution on a single token.
CondDist one_hot(std::size_t n, TokenId y);

}  // namespace adapterlab
