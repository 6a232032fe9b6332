#include "adapterlab/dist.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace adapterlab {

std::uint64_t Vocab::hash() const {
    // FNV-1a, 64-bit, with a 0x1f separator between tokens.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](unsigned char c) {
        h ^= c;
        h *= 0x100000001b3ULL;
    };
    for (const auto& tok : tokens) {
        for (char c : tok) mix(static_cast<unsigned char>(c));
        mix(0x1f);
    }
    mix(static_cast<unsigned char>(eos_id & 0xff));
    mix(static_cast<unsigned char>((eos_id >> 8) & 0xff));
    return h;
}

void Vocab::validate() const {
    if (tokens.size() < 2) {
        throw std::invalid_argument("vocab must contain at least 2 tokens");
    }
    if (eos_id >= tokens.size()) {
        throw std::invalid_argument("eos_id out of range");
    }
    std::unordered_set<std::string> seen;
    for (const auto& tok : tokens) {
        if (!seen.insert(tok).second) {
            throw std::invalid_argument("duplicate surface string in vocab: " + tok);
        }
    }
}

CondDist::CondDist(std::vector<double> logp, std::size_t support)
    : logp_(std::move(logp)), support_size_(support) {}

CondDist CondDist::from_logp(std::vector<double> logp) {
    if (logp.empty()) throw std::invalid_argument("empty distribution");
    double sum = 0.0;
    std::size_t support = 0;
    for (double lp : logp) {
        if (std::isnan(lp) || lp > 0.0) {
            throw std::invalid_argument("log-probability must be <= 0 and not NaN");
        }
        if (lp != kLogZero) {
            sum += std::exp(lp);
            ++support;
        }
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("distribution does not sum to 1 (got " +
                                    std::to_string(sum) + ")");
    }
    return CondDist(std::move(logp), support);
}

CondDist CondDist::from_probs(std::span<const double> probs) {
    std::vector<double> logp(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        double p = probs[i];
        if (std::isnan(p) || p < 0.0) {
            throw std::invalid_argument("probability must be non-negative");
        }
        logp[i] = p > 0.0 ? std::log(p) : kLogZero;
    }
    return from_logp(std::move(logp));
}

double CondDist::prob(TokenId y) const {
    double lp = logp_[y];
    return lp == kLogZero ? 0.0 : std::exp(lp);
}

std::vector<double> CondDist::probs() const {
    std::vector<double> out(logp_.size());
    for (std::size_t i = 0; i < logp_.size(); ++i) out[i] = prob(static_cast<TokenId>(i));
    return out;
}

CondDist normalize(std::span<const double> weights) {
    std::vector<double> logw(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
        double w = weights[i];
        if (std::isnan(w) || w < 0.0) {
            throw std::invalid_argument("weights must be non-negative and not NaN");
        }
        logw[i] = w > 0.0 ? std::log(w) : kLogZero;
    }
    return normalize_log(logw);
}

CondDist normalize_log(std::span<const double> log_weights) {
    if (log_weights.empty()) throw std::invalid_argument("empty weight vector");
    double max_lw = kLogZero;
    for (double lw : log_weights) {
        if (std::isnan(lw) || lw == std::numeric_limits<double>::infinity()) {
            throw std::invalid_argument("log-weights must be finite or -inf");
        }
        max_lw = std::max(max_lw, lw);
    }
    if (max_lw == kLogZero) {
        throw std::invalid_argument("all weights are zero");
    }
    double sum = 0.0;
    for (double lw : log_weights) {
        if (lw != kLogZero) sum += std::exp(lw - max_lw);
    }
    const double lse = max_lw + std::log(sum);
    std::vector<double> logp(log_weights.size());
    std::size_t support = 0;
    for (std::size_t i = 0; i < log_weights.size(); ++i) {
        if (log_weights[i] == kLogZero) {
            logp[i] = kLogZero;
        } else {
            logp[i] = std::min(log_weights[i] - lse, 0.0);
            ++support;
        }
    }
    return CondDist::from_logp(std::move(logp));
}

double entropy(const CondDist& p) {
    double h = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double lp = p.logp(static_cast<TokenId>(i));
        if (lp != kLogZero) h -= std::exp(lp) * lp;
    }
    return std::max(h, 0.0);
}

CondDist epsilon_smooth(const CondDist& p, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("smoothing epsilon must be > 0");
    const double denom = 1.0 + static_cast<double>(p.size()) * eps;
    std::vector<double> logp(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        logp[i] = std::log((p.prob(static_cast<TokenId>(i)) + eps) / denom);
    }
    return CondDist::from_logp(std::move(logp));
}

CondDist one_hot(std::size_t n, TokenId y) {
    if (y >= n) throw std::invalid_argument("one_hot token out of range");
    std::vector<double> logp(n, kLogZero);
    logp[y] = 0.0;
    return CondDist::from_logp(std::move(logp));
}

}  // namespace adapterlab
