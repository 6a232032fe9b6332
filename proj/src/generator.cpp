#include "adapterlab/generator.hpp"

#include <cmath>
#include <stdexcept>

namespace adapterlab {

namespace {

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

SplitMix64 SplitMix64::for_stream(std::uint64_t seed, std::uint64_t stream) {
    return SplitMix64(mix64(seed) ^ mix64(stream * 0x9e3779b97f4a7c15ULL + 1));
}

std::uint64_t SplitMix64::next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double SplitMix64::next_uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

void GenConfig::validate() const {
    if (prompt_len >= max_len) throw std::invalid_argument("prompt_len must be < max_len");
    if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
    if (seeds.empty()) throw std::invalid_argument("seeds must be non-empty");
}

TokenId sample_token(const CondDist& p, SplitMix64& rng) {
    const double u = rng.next_uniform();
    double cum = 0.0;
    TokenId last_positive = 0;
    bool any = false;
    for (TokenId y = 0; y < p.size(); ++y) {
        const double prob = p.prob(y);
        if (prob <= 0.0) continue;
        last_positive = y;
        any = true;
        cum += prob;
        if (u < cum) return y;
    }
    if (!any) throw std::invalid_argument("cannot sample from an empty distribution");
    // u landed in the rounding slack past the accumulated mass.
    return last_positive;
}

std::vector<TokenId> generate(const StepModel& model, const GenConfig& cfg,
                              std::span<const TokenId> prompt, TokenId eos_id,
                              std::uint64_t seed, std::uint64_t sequence_index) {
    if (prompt.empty()) throw std::invalid_argument("prompt must be non-empty");
    SplitMix64 rng = SplitMix64::for_stream(seed, sequence_index);
    std::vector<TokenId> y(prompt.begin(), prompt.end());
    while (y.size() < cfg.max_len) {
        const CondDist p = model(y);
        const CondDist adapted = compose(cfg.adapter_chain, p);
        const TokenId tok = sample_token(adapted, rng);
        if (tok == eos_id) break;
        y.push_back(tok);
    }
    return y;
}

}  // namespace adapterlab
