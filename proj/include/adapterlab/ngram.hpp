#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "adapterlab/dist.hpp"

namespace adapterlab {

/// Maps text to token ids and back. Byte mode round-trips exactly; word
/// mode splits on whitespace and maps out-of-vocabulary words to a reserved
/// UNK token.
class Tokenizer {
public:
    enum class Mode { Byte, Word };

    /// 256 byte tokens plus EOS.
    static Tokenizer byte_mode();

    /// Builds a word vocabulary from the corpus lines, keeping the
    /// `vocab_cap` most frequent words (ties by first occurrence), plus the
    /// reserved UNK and EOS tokens.
    static Tokenizer word_mode(std::span<const std::string> corpus_lines,
                               std::size_t vocab_cap);

    /// Reconstructs a word-mode tokenizer from an existing vocabulary.
    static Tokenizer from_vocab(Mode mode, Vocab vocab);

    std::vector<TokenId> tokenize(const std::string& text) const;
    std::string detokenize(std::span<const TokenId> tokens) const;

    Mode mode() const { return mode_; }
    const Vocab& vocab() const { return vocab_; }
    TokenId unk_id() const { return unk_id_; }

private:
    Mode mode_ = Mode::Byte;
    Vocab vocab_;
    TokenId unk_id_ = 0;  // word mode only
    std::unordered_map<std::string, TokenId> index_;

    void build_index();
};

struct Smoothing {
    enum class Kind { AddK, InterpolatedBackoff };
    Kind kind = Kind::InterpolatedBackoff;
    /// add_k: the pseudo-count k (>= 0). backoff: the per-order weight
    /// lambda in (0,1) given to the lower-order estimate.
    double value = 0.4;

    static Smoothing add_k(double k) { return {Kind::AddK, k}; }
    static Smoothing backoff(double lambda = 0.4) { return {Kind::InterpolatedBackoff, lambda}; }

    std::string to_string() const;
    static Smoothing parse(const std::string& text);  // "addk:K" | "backoff:L"
};

/// Smoothed order-n autoregressive model over a Vocab. Contexts shorter
/// than n-1 tokens are padded with an internal BOS sentinel that never
/// appears in any output distribution. Immutable once trained.
class NGramModel {
public:
    static NGramModel train(const std::vector<std::vector<TokenId>>& corpus,
                            std::size_t order, Smoothing smoothing, Vocab vocab);

    /// Conditional distribution over the full vocabulary given the last
    /// n-1 tokens of `context`.
    CondDist cond_dist(std::span<const TokenId> context) const;

    /// log p(y) = sum_t log p(y_t | y_<t) + log p(EOS | y), in nats.
    double sequence_logprob(std::span<const TokenId> y) const;

    std::size_t order() const { return order_; }
    const Vocab& vocab() const { return vocab_; }
    const Smoothing& smoothing() const { return smoothing_; }

    /// Versioned textual count-table dump; format frozen by golden tests.
    void save(std::ostream& out) const;
    static NGramModel load(std::istream& in);
    void save_file(const std::string& path) const;
    static NGramModel load_file(const std::string& path);

    /// Raw count lookup (testing and serialization).
    std::uint64_t context_total(std::span<const TokenId> padded_context) const;

private:
    struct ContextCounts {
        std::uint64_t total = 0;
        std::vector<std::pair<TokenId, std::uint64_t>> tokens;  // sorted by id
    };

    TokenId bos_id() const { return static_cast<TokenId>(vocab_.size()); }
    std::vector<TokenId> padded_suffix(std::span<const TokenId> context,
                                       std::size_t length) const;
    static std::string pack_key(std::span<const TokenId> ids);

    std::size_t order_ = 1;
    Smoothing smoothing_;
    Vocab vocab_;
    // levels_[o-1]: counts for contexts of length o-1, o = 1..order.
    std::vector<std::unordered_map<std::string, ContextCounts>> levels_;
};

/// One-hot reference distribution induced by a held-out sequence at step t
/// (t == y.size() selects the terminal EOS).
CondDist empirical_reference(const Vocab& vocab, std::span<const TokenId> y, std::size_t t);

}  // namespace adapterlab
