#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "adapterlab/adapters.hpp"
#include "adapterlab/dist.hpp"

namespace adapterlab {

/// SplitMix64: the 64-bit mixing generator of Steele et al. Streams derived
/// from a (seed, stream) pair are independent and reproducible, so samples
/// indexed by sequence number parallelize without changing results.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    /// Stream `stream` of base seed `seed`; distinct pairs give distinct,
    /// decorrelated state sequences.
    static SplitMix64 for_stream(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next();

    /// Uniform double in [0, 1) from the top 53 bits of one draw.
    double next_uniform();

private:
    std::uint64_t state_;
};

/// Generation protocol constants; defaults follow the evaluation protocol
/// this harness reproduces.
struct GenConfig {
    std::size_t prompt_len = 35;
    std::size_t max_len = 512;
    std::size_t n_samples = 1000;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::vector<AdapterSpec> adapter_chain;

    void validate() const;
};

/// Inverse-CDF draw over ascending TokenId order, consuming exactly one
/// uniform variate. Never returns a zero-probability token.
TokenId sample_token(const CondDist& p, SplitMix64& rng);

using StepModel = std::function<CondDist(std::span<const TokenId>)>;

/// Ancestral sampling through the adapter chain: at each step the model
/// distribution is adapted, then sampled. Stops at EOS or when the sequence
/// reaches cfg.max_len; the returned sequence contains the prompt and
/// excludes the trailing EOS. Fully determined by (model, cfg, seed,
/// sequence_index, prompt).
std::vector<TokenId> generate(const StepModel& model, const GenConfig& cfg,
                              std::span<const TokenId> prompt, TokenId eos_id,
                              std::uint64_t seed, std::uint64_t sequence_index);

}  // namespace adapterlab
