#include "adapterlab/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace adapterlab {

namespace {

std::string hex_encode(const std::string& s) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(s.size() * 2);
    for (unsigned char c : s) {
        out += digits[c >> 4];
        out += digits[c & 0xf];
    }
    return out;
}

std::string hex_decode(const std::string& s) {
    if (s.size() % 2) throw std::runtime_error("odd-length hex token");
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        throw std::runtime_error("bad hex digit");
    };
    std::string out;
    out.reserve(s.size() / 2);
    for (std::size_t i = 0; i < s.size(); i += 2) {
        out += static_cast<char>(nibble(s[i]) * 16 + nibble(s[i + 1]));
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Tokenizer

Tokenizer Tokenizer::byte_mode() {
    Tokenizer t;
    t.mode_ = Mode::Byte;
    t.vocab_.tokens.reserve(257);
    for (int b = 0; b < 256; ++b) t.vocab_.tokens.push_back(std::string(1, static_cast<char>(b)));
    t.vocab_.tokens.push_back("<eos>");
    t.vocab_.eos_id = 256;
    return t;
}

Tokenizer Tokenizer::word_mode(std::span<const std::string> corpus_lines,
                               std::size_t vocab_cap) {
    if (vocab_cap < 1) throw std::invalid_argument("vocab_cap must be >= 1");
    std::unordered_map<std::string, std::uint64_t> freq;
    std::vector<std::string> first_seen;
    for (const auto& line : corpus_lines) {
        std::istringstream iss(line);
        std::string w;
        while (iss >> w) {
            auto [it, inserted] = freq.try_emplace(w, 0);
            if (inserted) first_seen.push_back(w);
            ++it->second;
        }
    }
    // Most frequent first, ties by first occurrence in the corpus.
    std::stable_sort(first_seen.begin(), first_seen.end(),
                     [&freq](const std::string& a, const std::string& b) {
                         return freq[a] > freq[b];
                     });
    if (first_seen.size() > vocab_cap) first_seen.resize(vocab_cap);

    Tokenizer t;
    t.mode_ = Mode::Word;
    t.vocab_.tokens = std::move(first_seen);
    t.vocab_.tokens.push_back("<unk>");
    t.unk_id_ = static_cast<TokenId>(t.vocab_.tokens.size() - 1);
    t.vocab_.tokens.push_back("<eos>");
    t.vocab_.eos_id = static_cast<TokenId>(t.vocab_.tokens.size() - 1);
    t.build_index();
    return t;
}

Tokenizer Tokenizer::from_vocab(Mode mode, Vocab vocab) {
    vocab.validate();
    Tokenizer t;
    t.mode_ = mode;
    t.vocab_ = std::move(vocab);
    if (mode == Mode::Word) {
        t.build_index();
        auto it = t.index_.find("<unk>");
        if (it == t.index_.end()) throw std::invalid_argument("word vocab lacks <unk>");
        t.unk_id_ = it->second;
    }
    return t;
}

void Tokenizer::build_index() {
    index_.clear();
    for (TokenId i = 0; i < vocab_.tokens.size(); ++i) index_.emplace(vocab_.tokens[i], i);
}

std::vector<TokenId> Tokenizer::tokenize(const std::string& text) const {
    std::vector<TokenId> out;
    if (mode_ == Mode::Byte) {
        out.reserve(text.size());
        for (unsigned char c : text) out.push_back(c);
        return out;
    }
    std::istringstream iss(text);
    std::string w;
    while (iss >> w) {
        auto it = index_.find(w);
        out.push_back(it == index_.end() ? unk_id_ : it->second);
    }
    return out;
}

std::string Tokenizer::detokenize(std::span<const TokenId> tokens) const {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] >= vocab_.size()) throw std::invalid_argument("token out of range");
        if (mode_ == Mode::Word && i) out += ' ';
        out += vocab_.tokens[tokens[i]];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Smoothing

std::string Smoothing::to_string() const {
    // Shortest decimal form that parses back to the same double.
    char num[32];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(num, sizeof(num), "%.*g", prec, value);
        if (std::strtod(num, nullptr) == value) break;
    }
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%s:%s", kind == Kind::AddK ? "addk" : "backoff", num);
    return buf;
}

Smoothing Smoothing::parse(const std::string& text) {
    auto colon = text.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("bad smoothing spec: " + text);
    std::string name = text.substr(0, colon);
    double v = std::stod(text.substr(colon + 1));
    if (name == "addk") {
        if (v < 0.0) throw std::invalid_argument("add-k k must be >= 0");
        return add_k(v);
    }
    if (name == "backoff") {
        if (!(v > 0.0 && v < 1.0)) throw std::invalid_argument("backoff lambda must be in (0,1)");
        return backoff(v);
    }
    throw std::invalid_argument("unknown smoothing kind: " + name);
}

// ---------------------------------------------------------------------------
// NGramModel

std::string NGramModel::pack_key(std::span<const TokenId> ids) {
    std::string key(ids.size() * sizeof(TokenId), '\0');
    std::memcpy(key.data(), ids.data(), key.size());
    return key;
}

std::vector<TokenId> NGramModel::padded_suffix(std::span<const TokenId> context,
                                               std::size_t length) const {
    std::vector<TokenId> out(length, bos_id());
    const std::size_t take = std::min(length, context.size());
    for (std::size_t i = 0; i < take; ++i) {
        out[length - 1 - i] = context[context.size() - 1 - i];
    }
    return out;
}

NGramModel NGramModel::train(const std::vector<std::vector<TokenId>>& corpus,
                             std::size_t order, Smoothing smoothing, Vocab vocab) {
    if (corpus.empty()) throw std::invalid_argument("empty training corpus");
    if (order < 1) throw std::invalid_argument("order must be >= 1");
    vocab.validate();

    NGramModel m;
    m.order_ = order;
    m.smoothing_ = smoothing;
    m.vocab_ = std::move(vocab);
    m.levels_.resize(order);

    std::vector<TokenId> seq;
    for (const auto& tokens : corpus) {
        seq.assign(tokens.begin(), tokens.end());
        for (TokenId y : seq) {
            if (y >= m.vocab_.size()) throw std::invalid_argument("training token out of range");
        }
        seq.push_back(m.vocab_.eos_id);  // trainer appends the terminal EOS
        for (std::size_t t = 0; t < seq.size(); ++t) {
            const TokenId y = seq[t];
            for (std::size_t o = 1; o <= order; ++o) {
                auto ctx = m.padded_suffix(std::span(seq.data(), t), o - 1);
                auto& counts = m.levels_[o - 1][pack_key(ctx)];
                ++counts.total;
                auto it = std::lower_bound(
                    counts.tokens.begin(), counts.tokens.end(), y,
                    [](const auto& pair, TokenId id) { return pair.first < id; });
                if (it != counts.tokens.end() && it->first == y) {
                    ++it->second;
                } else {
                    counts.tokens.insert(it, {y, 1});
                }
            }
        }
    }
    return m;
}

std::uint64_t NGramModel::context_total(std::span<const TokenId> padded_context) const {
    if (padded_context.size() >= order_) throw std::invalid_argument("context too long");
    const auto& level = levels_[padded_context.size()];
    auto it = level.find(pack_key(padded_context));
    return it == level.end() ? 0 : it->second.total;
}

CondDist NGramModel::cond_dist(std::span<const TokenId> context) const {
    const std::size_t n = vocab_.size();
    std::vector<double> probs(n);

    if (smoothing_.kind == Smoothing::Kind::AddK) {
        const double k = smoothing_.value;
        auto ctx = padded_suffix(context, order_ - 1);
        const auto& level = levels_[order_ - 1];
        auto it = level.find(pack_key(ctx));
        const std::uint64_t total = it == level.end() ? 0 : it->second.total;
        const double denom = static_cast<double>(total) + k * static_cast<double>(n);
        if (denom == 0.0) {
            // k = 0 and unseen context: maximum likelihood is undefined,
            // fall back to uniform.
            std::fill(probs.begin(), probs.end(), 1.0 / static_cast<double>(n));
            return normalize(probs);
        }
        std::fill(probs.begin(), probs.end(), k / denom);
        if (it != level.end()) {
            for (const auto& [y, c] : it->second.tokens) {
                probs[y] = (static_cast<double>(c) + k) / denom;
            }
        }
        return normalize(probs);
    }

    // Interpolated backoff: p_o = (1 - lambda) * ML_o + lambda * p_{o-1},
    // base case the uniform distribution; unseen contexts skip their level.
    const double lambda = smoothing_.value;
    std::fill(probs.begin(), probs.end(), 1.0 / static_cast<double>(n));
    for (std::size_t o = 1; o <= order_; ++o) {
        auto ctx = padded_suffix(context, o - 1);
        const auto& level = levels_[o - 1];
        auto it = level.find(pack_key(ctx));
        if (it == level.end() || it->second.total == 0) continue;
        const double total = static_cast<double>(it->second.total);
        for (double& p : probs) p *= lambda;
        for (const auto& [y, c] : it->second.tokens) {
            probs[y] += (1.0 - lambda) * static_cast<double>(c) / total;
        }
    }
    return normalize(probs);
}

double NGramModel::sequence_logprob(std::span<const TokenId> y) const {
    double lp = 0.0;
    for (std::size_t t = 0; t <= y.size(); ++t) {
        const TokenId target = t < y.size() ? y[t] : vocab_.eos_id;
        const CondDist d = cond_dist(y.subspan(0, t));
        lp += d.logp(target);
    }
    return lp;
}

void NGramModel::save(std::ostream& out) const {
    out << "ngramlm 1\n";
    out << "order " << order_ << "\n";
    out << "smoothing " << smoothing_.to_string() << "\n";
    out << "vocab " << vocab_.size() << " " << vocab_.eos_id << "\n";
    for (const auto& tok : vocab_.tokens) out << hex_encode(tok) << "\n";
    for (std::size_t o = 1; o <= order_; ++o) {
        // Sorted context keys keep the dump byte-stable.
        std::map<std::string, const ContextCounts*> sorted;
        for (const auto& [key, counts] : levels_[o - 1]) sorted.emplace(key, &counts);
        out << "level " << o << " " << sorted.size() << "\n";
        for (const auto& [key, counts] : sorted) {
            const auto* ids = reinterpret_cast<const TokenId*>(key.data());
            const std::size_t ctx_len = key.size() / sizeof(TokenId);
            out << "ctx";
            for (std::size_t i = 0; i < ctx_len; ++i) out << " " << ids[i];
            out << " :";
            for (const auto& [tok, c] : counts->tokens) out << " " << tok << " " << c;
            out << "\n";
        }
    }
}

NGramModel NGramModel::load(std::istream& in) {
    auto fail = [](const std::string& why) -> std::runtime_error {
        return std::runtime_error("ngram model parse error: " + why);
    };
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "ngramlm") throw fail("bad magic");
    if (version != 1) throw fail("unsupported version");

    std::string kw;
    NGramModel m;
    std::size_t order = 0;
    if (!(in >> kw >> order) || kw != "order" || order < 1) throw fail("bad order line");
    std::string smoothing_text;
    if (!(in >> kw >> smoothing_text) || kw != "smoothing") throw fail("bad smoothing line");
    std::size_t vocab_size = 0;
    TokenId eos = 0;
    if (!(in >> kw >> vocab_size >> eos) || kw != "vocab") throw fail("bad vocab line");

    m.order_ = order;
    m.smoothing_ = Smoothing::parse(smoothing_text);
    m.vocab_.eos_id = eos;
    m.vocab_.tokens.reserve(vocab_size);
    std::string hex;
    for (std::size_t i = 0; i < vocab_size; ++i) {
        if (!(in >> hex)) throw fail("truncated vocab table");
        m.vocab_.tokens.push_back(hex_decode(hex));
    }
    m.vocab_.validate();

    m.levels_.resize(order);
    for (std::size_t o = 1; o <= order; ++o) {
        std::size_t declared_level = 0, n_contexts = 0;
        if (!(in >> kw >> declared_level >> n_contexts) || kw != "level" || declared_level != o) {
            throw fail("bad level header");
        }
        auto& level = m.levels_[o - 1];
        level.reserve(n_contexts);
        for (std::size_t i = 0; i < n_contexts; ++i) {
            if (!(in >> kw) || kw != "ctx") throw fail("bad context line");
            std::vector<TokenId> ctx(o - 1);
            for (auto& id : ctx) {
                if (!(in >> id)) throw fail("truncated context");
            }
            std::string sep;
            if (!(in >> sep) || sep != ":") throw fail("missing count separator");
            std::string rest;
            std::getline(in, rest);
            std::istringstream counts_in(rest);
            ContextCounts counts;
            TokenId tok;
            std::uint64_t c;
            while (counts_in >> tok >> c) {
                counts.tokens.emplace_back(tok, c);
                counts.total += c;
            }
            level.emplace(pack_key(ctx), std::move(counts));
        }
    }
    return m;
}

void NGramModel::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    save(out);
}

NGramModel NGramModel::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    return load(in);
}

CondDist empirical_reference(const Vocab& vocab, std::span<const TokenId> y, std::size_t t) {
    if (t > y.size()) throw std::invalid_argument("reference position out of range");
    const TokenId target = t < y.size() ? y[t] : vocab.eos_id;
    return one_hot(vocab.size(), target);
}

}  // namespace adapterlab
