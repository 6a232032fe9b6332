#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "adapterlab/adapters.hpp"
#include "adapterlab/generator.hpp"

using namespace adapterlab;

namespace {

CondDist dist(std::initializer_list<double> probs) {
    return normalize(std::vector<double>(probs));
}

CondDist random_dist(SplitMix64& rng, std::size_t n) {
    std::vector<double> w(n);
    for (auto& v : w) v = rng.next_uniform() + 1e-12;
    return normalize(w);
}

// Brute-force nucleus oracle: enumerate every subset and pick the smallest
// one whose mass reaches pi (mass, then size, then lexicographic id order).
std::vector<TokenId> nucleus_oracle(double pi, const CondDist& p) {
    const std::size_t n = p.size();
    std::vector<TokenId> best;
    double best_mass = 0.0;
    bool found = false;
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        std::vector<TokenId> subset;
        double mass = 0.0;
        bool touches_zero = false;
        for (TokenId y = 0; y < n; ++y) {
            if (mask & (1u << y)) {
                if (p.prob(y) == 0.0) touches_zero = true;
                subset.push_back(y);
                mass += p.prob(y);
            }
        }
        if (touches_zero || mass < pi - 1e-12) continue;
        const bool better =
            !found || subset.size() < best.size() ||
            (subset.size() == best.size() && mass > best_mass + 1e-12) ||
            (subset.size() == best.size() && std::abs(mass - best_mass) <= 1e-12 &&
             subset < best);
        if (better) {
            best = subset;
            best_mass = mass;
            found = true;
        }
    }
    return best;
}

}  // namespace

TEST_CASE("ancestral and T=1 are bit-exact identities") {
    const auto p = dist({0.5, 0.3, 0.2});
    CHECK(apply(AdapterSpec::ancestral(), p) == p);
    CHECK(apply(AdapterSpec::temperature(1.0), p) == p);
}

TEST_CASE("temperature worked example and limits") {
    const auto p = dist({0.5, 0.3, 0.2});
    const auto sharp = apply(AdapterSpec::temperature(0.5), p);
    CHECK(sharp.prob(0) == doctest::Approx(0.657895).epsilon(1e-5));
    CHECK(sharp.prob(1) == doctest::Approx(0.236842).epsilon(1e-5));
    CHECK(sharp.prob(2) == doctest::Approx(0.105263).epsilon(1e-5));

    const auto flat = apply(AdapterSpec::temperature(1e6), p);
    for (TokenId y = 0; y < 3; ++y) {
        CHECK(flat.prob(y) == doctest::Approx(1.0 / 3.0).epsilon(1e-4));
    }
}

TEST_CASE("temperature keeps zero probabilities at exactly zero") {
    const auto p = normalize_log(std::vector<double>{std::log(0.7), kLogZero, std::log(0.3)});
    const auto q = apply(AdapterSpec::temperature(0.7), p);
    CHECK(q.logp(1) == kLogZero);
    CHECK(q.support_size() == 2);
}

TEST_CASE("top-k worked examples") {
    const auto p = dist({0.5, 0.3, 0.2});
    auto cs = criterion_top_k(3, p);
    CHECK(cs.kept == std::vector<TokenId>{0, 1, 2});
    CHECK(cs.kept_mass == doctest::Approx(1.0).epsilon(1e-12));

    cs = criterion_top_k(2, p);
    CHECK(cs.kept == std::vector<TokenId>{0, 1});
    CHECK(cs.kept_mass == doctest::Approx(0.8).epsilon(1e-12));

    const auto tie = dist({0.4, 0.4, 0.2});
    cs = criterion_top_k(1, tie);
    CHECK(cs.kept == std::vector<TokenId>{0});
}

TEST_CASE("top-pi worked examples") {
    const auto p = dist({0.5, 0.3, 0.2});
    auto cs = criterion_top_pi(1.0, p);
    CHECK(cs.kept == std::vector<TokenId>{0, 1, 2});

    cs = criterion_top_pi(0.7, p);
    CHECK(cs.kept == std::vector<TokenId>{0, 1});
    CHECK(cs.kept_mass == doctest::Approx(0.8).epsilon(1e-12));
    const auto q = apply(AdapterSpec::top_pi(0.7), p);
    CHECK(q.prob(0) == doctest::Approx(0.625).epsilon(1e-12));
    CHECK(q.prob(1) == doctest::Approx(0.375).epsilon(1e-12));
    CHECK(q.prob(2) == 0.0);

    cs = criterion_top_pi(0.5, p);
    CHECK(cs.kept == std::vector<TokenId>{0});
    CHECK(cs.kept_mass == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("top-pi minimality against a subset-enumeration oracle") {
    SplitMix64 rng(41);
    for (int trial = 0; trial < 400; ++trial) {
        const std::size_t n = 2 + rng.next() % 11;  // |V| <= 12
        const auto p = random_dist(rng, n);
        const double pi = 0.05 + 0.95 * rng.next_uniform();
        const auto got = criterion_top_pi(pi, p).kept;
        const auto want = nucleus_oracle(pi, p);
        CHECK(got.size() == want.size());
        // Equal-size nuclei can differ only through ties; the kept masses
        // must agree.
        double got_mass = 0.0, want_mass = 0.0;
        for (TokenId y : got) got_mass += p.prob(y);
        for (TokenId y : want) want_mass += p.prob(y);
        CHECK(got_mass == doctest::Approx(want_mass).epsilon(1e-9));
        CHECK(got_mass >= pi - 1e-12);
    }
}

TEST_CASE("locally typical worked example") {
    const auto p = dist({0.5, 0.3, 0.2});
    // H = 1.029653; scores |H + log p| = [0.336506, 0.174320, 0.579785],
    // so the ascending-score ranking is token 1, then 0, then 2.
    const auto cs = criterion_typical(0.7, p);
    CHECK(cs.kept == std::vector<TokenId>{0, 1});
    CHECK(cs.kept_mass == doctest::Approx(0.8).epsilon(1e-12));
    const auto q = apply(AdapterSpec::typical(0.7), p);
    CHECK(q.prob(0) == doctest::Approx(0.625).epsilon(1e-12));
    CHECK(q.prob(1) == doctest::Approx(0.375).epsilon(1e-12));
    CHECK(q.prob(2) == 0.0);
}

TEST_CASE("typical tau=1 keeps everything; uniform keeps an id prefix") {
    const auto p = dist({0.5, 0.3, 0.2});
    CHECK(criterion_typical(1.0, p).kept == std::vector<TokenId>{0, 1, 2});

    const auto u = dist({0.25, 0.25, 0.25, 0.25});
    // All scores tie at 0, so the tie rule keeps the lowest ids: ceil(tau*4).
    CHECK(criterion_typical(0.5, u).kept == std::vector<TokenId>{0, 1});
    CHECK(criterion_typical(0.6, u).kept == std::vector<TokenId>{0, 1, 2});
}

TEST_CASE("eta worked examples") {
    const auto u = dist({0.25, 0.25, 0.25, 0.25});
    CHECK(criterion_eta(0.01, u).kept == std::vector<TokenId>{0, 1, 2, 3});

    const auto p = dist({0.7, 0.2, 0.06, 0.04});
    // H = 0.869120, sqrt(0.09)*exp(-H) = 0.125793, eta = min(0.09, ...) = 0.09.
    const auto cs = criterion_eta(0.09, p);
    CHECK(cs.kept == std::vector<TokenId>{0, 1});
    const auto q = apply(AdapterSpec::eta(0.09), p);
    CHECK(q.prob(0) == doctest::Approx(0.777778).epsilon(1e-5));
    CHECK(q.prob(1) == doctest::Approx(0.222222).epsilon(1e-5));
    CHECK(q.prob(2) == 0.0);
    CHECK(q.prob(3) == 0.0);

    const auto hot = one_hot(4, 2);
    CHECK(criterion_eta(0.5, hot).kept == std::vector<TokenId>{2});
}

TEST_CASE("eta falls back to the argmax when the threshold empties the set") {
    // For eps < 1 the threshold can never exceed the max probability
    // (p_max >= exp(-H)), so emptiness needs an oversized eps.
    const auto u = dist({0.25, 0.25, 0.25, 0.25});
    const auto cs = criterion_eta(2.0, u);
    CHECK(cs.kept == std::vector<TokenId>{0});

    const auto tie = dist({0.2, 0.3, 0.3, 0.2});
    CHECK(criterion_eta(2.0, tie).kept == std::vector<TokenId>{1});
}

TEST_CASE("truncation renormalization is consistent with kept mass") {
    SplitMix64 rng(99);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng.next() % 30;
        const auto p = random_dist(rng, n);
        for (const auto spec :
             {AdapterSpec::top_k(1 + rng.next() % n),
              AdapterSpec::top_pi(0.05 + 0.95 * rng.next_uniform()),
              AdapterSpec::typical(0.05 + 0.95 * rng.next_uniform()),
              AdapterSpec::eta(1e-4 + 0.1 * rng.next_uniform())}) {
            const auto cs = criterion_set(spec, p);
            const auto q = apply(spec, p);
            REQUIRE(!cs.kept.empty());
            CHECK(std::is_sorted(cs.kept.begin(), cs.kept.end()));
            double mass = 0.0;
            for (TokenId y : cs.kept) {
                CHECK(q.prob(y) == doctest::Approx(p.prob(y) / cs.kept_mass).epsilon(1e-12));
                mass += p.prob(y);
            }
            CHECK(mass == doctest::Approx(cs.kept_mass).epsilon(1e-12));
            CHECK(q.support_size() == cs.kept.size());
        }
    }
}

TEST_CASE("adapters preserve the relative order of kept tokens") {
    SplitMix64 rng(123);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 3 + rng.next() % 20;
        const auto p = random_dist(rng, n);
        for (const auto spec :
             {AdapterSpec::temperature(0.25 + 2.0 * rng.next_uniform()),
              AdapterSpec::top_k(1 + rng.next() % n),
              AdapterSpec::top_pi(0.3 + 0.7 * rng.next_uniform()),
              AdapterSpec::typical(0.3 + 0.7 * rng.next_uniform()),
              AdapterSpec::eta(1e-4 + 0.05 * rng.next_uniform())}) {
            const auto q = apply(spec, p);
            for (TokenId a = 0; a < n; ++a) {
                for (TokenId b = 0; b < n; ++b) {
                    if (q.prob(a) > 0.0 && q.prob(b) > 0.0 && p.prob(a) > p.prob(b)) {
                        CHECK(q.prob(a) > q.prob(b));
                    }
                }
            }
        }
    }
}

TEST_CASE("truncation never raises entropy") {
    SplitMix64 rng(3141);
    std::size_t checked = 0;
    for (int trial = 0; trial < 2500; ++trial) {
        const std::size_t n = 2 + rng.next() % 25;
        const auto p = random_dist(rng, n);
        for (const auto spec :
             {AdapterSpec::top_k(1 + rng.next() % n),
              AdapterSpec::top_pi(0.05 + 0.95 * rng.next_uniform()),
              AdapterSpec::typical(0.05 + 0.95 * rng.next_uniform()),
              AdapterSpec::eta(1e-4 + 0.1 * rng.next_uniform())}) {
            CHECK(entropy(apply(spec, p)) <= entropy(p) + 1e-10);
            ++checked;
        }
    }
    CHECK(checked == 10000);
}

TEST_CASE("nested truncation criteria") {
    // Stronger settings keep subsets of weaker ones (same kind).
    SplitMix64 rng(555);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 3 + rng.next() % 20;
        const auto p = random_dist(rng, n);
        const auto k_small = criterion_top_k(2, p).kept;
        const auto k_big = criterion_top_k(5 > n ? n : 5, p).kept;
        CHECK(std::includes(k_big.begin(), k_big.end(), k_small.begin(), k_small.end()));
        const auto pi_small = criterion_top_pi(0.5, p).kept;
        const auto pi_big = criterion_top_pi(0.9, p).kept;
        CHECK(std::includes(pi_big.begin(), pi_big.end(), pi_small.begin(), pi_small.end()));
        const auto ty_small = criterion_typical(0.3, p).kept;
        const auto ty_big = criterion_typical(0.9, p).kept;
        CHECK(std::includes(ty_big.begin(), ty_big.end(), ty_small.begin(), ty_small.end()));
        const auto eta_weak = criterion_eta(1e-4, p).kept;
        const auto eta_strong = criterion_eta(5e-2, p).kept;
        CHECK(std::includes(eta_weak.begin(), eta_weak.end(), eta_strong.begin(),
                            eta_strong.end()));
    }
}

TEST_CASE("composition worked examples") {
    const auto p = dist({0.5, 0.3, 0.2});
    const std::vector<AdapterSpec> ids = {AdapterSpec::ancestral(), AdapterSpec::ancestral()};
    CHECK(compose(ids, p) == p);
    const std::vector<AdapterSpec> ids2 = {AdapterSpec::temperature(1.0),
                                           AdapterSpec::top_k(3)};
    const auto q2 = compose(ids2, p);
    for (TokenId y = 0; y < 3; ++y) {
        CHECK(q2.prob(y) == doctest::Approx(p.prob(y)).epsilon(1e-12));
    }
    const std::vector<AdapterSpec> chain = {AdapterSpec::top_k(2), AdapterSpec::top_k(1)};
    const auto q = compose(chain, p);
    CHECK(q.prob(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(q.prob(1) == 0.0);
    CHECK(q.prob(2) == 0.0);
}

TEST_CASE("spec validation and round-trip formatting") {
    CHECK_THROWS_AS(AdapterSpec::temperature(0.0).validate(4), std::invalid_argument);
    CHECK_THROWS_AS(AdapterSpec::top_k(0).validate(4), std::invalid_argument);
    CHECK_THROWS_AS(AdapterSpec::top_k(5).validate(4), std::invalid_argument);
    CHECK_THROWS_AS(AdapterSpec::top_pi(0.0).validate(4), std::invalid_argument);
    CHECK_THROWS_AS(AdapterSpec::top_pi(1.5).validate(4), std::invalid_argument);
    CHECK_THROWS_AS(AdapterSpec::typical(0.0).validate(4), std::invalid_argument);
    CHECK_THROWS_AS(AdapterSpec::eta(0.0).validate(4), std::invalid_argument);
    CHECK_NOTHROW(AdapterSpec::top_k(4).validate(4));

    for (const auto spec :
         {AdapterSpec::ancestral(), AdapterSpec::temperature(0.7), AdapterSpec::top_k(30),
          AdapterSpec::top_pi(0.95), AdapterSpec::typical(0.2), AdapterSpec::eta(6e-4)}) {
        CHECK(AdapterSpec::parse(spec.to_string()) == spec);
    }
    CHECK(AdapterSpec::parse("topk:30").to_string() == "topk:30");
    CHECK_THROWS_AS(AdapterSpec::parse("nonsense:1"), std::invalid_argument);

    const auto chain = parse_adapter_chain("temp:0.9,topk:10");
    REQUIRE(chain.size() == 2);
    CHECK(chain[0] == AdapterSpec::temperature(0.9));
    CHECK(chain[1] == AdapterSpec::top_k(10));
    CHECK(format_adapter_chain(chain) == "temp:0.9,topk:10");
}

TEST_CASE("strength keys order settings from weak to strong") {
    CHECK(AdapterSpec::top_k(1).strength_key() > AdapterSpec::top_k(10).strength_key());
    CHECK(AdapterSpec::top_pi(0.5).strength_key() > AdapterSpec::top_pi(0.99).strength_key());
    CHECK(AdapterSpec::typical(0.2).strength_key() >
          AdapterSpec::typical(0.95).strength_key());
    CHECK(AdapterSpec::eta(9e-2).strength_key() > AdapterSpec::eta(1e-4).strength_key());
    CHECK(AdapterSpec::temperature(2.0).strength_key() >
          AdapterSpec::temperature(1.2).strength_key());
    CHECK(AdapterSpec::temperature(0.5).strength_key() >
          AdapterSpec::temperature(0.9).strength_key());
}
