#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "adapterlab/generator.hpp"
#include "adapterlab/ngram.hpp"

using namespace adapterlab;

namespace {

// Deterministic toy step model over vocab {0, 1, 2=EOS}: heavily favors
// token 0 and gives EOS enough mass to terminate quickly.
CondDist toy_step(std::span<const TokenId>) {
    return CondDist::from_probs(std::vector<double>{0.5, 0.3, 0.2});
}

}  // namespace

TEST_CASE("splitmix64 streams are reproducible and decorrelated") {
    SplitMix64 a = SplitMix64::for_stream(42, 0);
    SplitMix64 b = SplitMix64::for_stream(42, 0);
    SplitMix64 c = SplitMix64::for_stream(42, 1);
    SplitMix64 d = SplitMix64::for_stream(43, 0);
    bool same_ab = true, same_ac = true, same_ad = true;
    for (int i = 0; i < 64; ++i) {
        const auto va = a.next();
        same_ab &= (va == b.next());
        same_ac &= (va == c.next());
        same_ad &= (va == d.next());
    }
    CHECK(same_ab);
    CHECK(!same_ac);
    CHECK(!same_ad);
}

TEST_CASE("next_uniform stays in [0,1) and looks uniform") {
    SplitMix64 rng(7);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.next_uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("sample_token worked examples") {
    // One-hot always yields the hot token.
    const auto hot = one_hot(4, 2);
    SplitMix64 rng(1);
    for (int i = 0; i < 32; ++i) CHECK(sample_token(hot, rng) == 2);

    // Inverse CDF on [0.5, 0.5]: u < 0.5 -> token 0, u >= 0.5 -> token 1.
    // Drive the check through a scan for draws on both sides of the split.
    const auto half = CondDist::from_probs(std::vector<double>{0.5, 0.5});
    SplitMix64 probe(9);
    bool saw0 = false, saw1 = false;
    for (int i = 0; i < 256; ++i) {
        SplitMix64 peek = probe;
        const double u = peek.next_uniform();
        const TokenId got = sample_token(half, probe);
        CHECK(got == (u < 0.5 ? 0u : 1u));
        saw0 |= got == 0;
        saw1 |= got == 1;
    }
    CHECK(saw0);
    CHECK(saw1);
}

TEST_CASE("sample_token never returns a zero-probability token") {
    const auto p = normalize_log(
        std::vector<double>{kLogZero, std::log(0.5), kLogZero, std::log(0.5)});
    SplitMix64 rng(123);
    for (int i = 0; i < 10000; ++i) {
        const TokenId y = sample_token(p, rng);
        CHECK((y == 1 || y == 3));
    }
}

TEST_CASE("monte carlo frequency matches the exact probability") {
    const auto p = CondDist::from_probs(std::vector<double>{0.3, 0.7});
    SplitMix64 rng(2024);
    const int n = 100000;
    int zeros = 0;
    for (int i = 0; i < n; ++i) {
        if (sample_token(p, rng) == 0) ++zeros;
    }
    CHECK(static_cast<double>(zeros) / n == doctest::Approx(0.3).epsilon(1.0 / 30.0));
}

TEST_CASE("generation is deterministic in (seed, sequence_index)") {
    GenConfig cfg;
    cfg.prompt_len = 2;
    cfg.max_len = 64;
    cfg.n_samples = 1;
    cfg.adapter_chain = {AdapterSpec::temperature(1.2)};
    const std::vector<TokenId> prompt = {0, 1};
    const auto a = generate(toy_step, cfg, prompt, 2, 7, 5);
    const auto b = generate(toy_step, cfg, prompt, 2, 7, 5);
    const auto c = generate(toy_step, cfg, prompt, 2, 7, 6);
    const auto d = generate(toy_step, cfg, prompt, 2, 8, 5);
    CHECK(a == b);
    CHECK(a != c);
    CHECK(a != d);
}

TEST_CASE("generated sequences start with the prompt and never contain EOS") {
    GenConfig cfg;
    cfg.prompt_len = 2;
    cfg.max_len = 32;
    const std::vector<TokenId> prompt = {1, 0};
    for (std::uint64_t idx = 0; idx < 200; ++idx) {
        const auto y = generate(toy_step, cfg, prompt, 2, 3, idx);
        REQUIRE(y.size() >= prompt.size());
        CHECK(y.size() <= cfg.max_len);
        CHECK(std::equal(prompt.begin(), prompt.end(), y.begin()));
        for (TokenId t : y) CHECK(t != 2);
    }
}

TEST_CASE("max_len caps generation when EOS is truncated away") {
    GenConfig cfg;
    cfg.prompt_len = 1;
    cfg.max_len = 16;
    // top-k 1 on [0.5,0.3,0.2] keeps only token 0, so EOS never fires.
    cfg.adapter_chain = {AdapterSpec::top_k(1)};
    const std::vector<TokenId> prompt = {1};
    const auto y = generate(toy_step, cfg, prompt, 2, 1, 0);
    CHECK(y.size() == cfg.max_len);
    for (std::size_t i = 1; i < y.size(); ++i) CHECK(y[i] == 0);
}

TEST_CASE("adapter chain changes the sampling distribution as composed") {
    // With top-k 2 the EOS token (id 2) is truncated away; token frequencies
    // must match the renormalized [0.625, 0.375].
    GenConfig cfg;
    cfg.prompt_len = 1;
    cfg.max_len = 2;  // prompt + exactly one sampled token
    cfg.adapter_chain = {AdapterSpec::top_k(2)};
    const std::vector<TokenId> prompt = {0};
    int zeros = 0, ones = 0, others = 0;
    const int n = 20000;
    for (int idx = 0; idx < n; ++idx) {
        const auto y = generate(toy_step, cfg, prompt, 2, 11, idx);
        REQUIRE(y.size() == 2);
        if (y[1] == 0) ++zeros;
        else if (y[1] == 1) ++ones;
        else ++others;
    }
    CHECK(others == 0);
    CHECK(static_cast<double>(zeros) / n == doctest::Approx(0.625).epsilon(0.02));
    CHECK(static_cast<double>(ones) / n == doctest::Approx(0.375).epsilon(0.03));
}

TEST_CASE("gen config validation and protocol defaults") {
    const GenConfig cfg;
    CHECK(cfg.prompt_len == 35);
    CHECK(cfg.max_len == 512);
    CHECK(cfg.n_samples == 1000);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
    CHECK_NOTHROW(cfg.validate());

    GenConfig bad = cfg;
    bad.prompt_len = 512;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.n_samples = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.seeds.clear();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
