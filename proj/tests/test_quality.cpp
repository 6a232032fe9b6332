#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "adapterlab/generator.hpp"
#include "adapterlab/quality.hpp"

using namespace adapterlab;

namespace {

FeatureSpec small_spec() {
    FeatureSpec spec;
    spec.ngram_order = 2;
    spec.hash_dim = 64;
    spec.n_clusters = 4;
    return spec;
}

// Random sequences over a token range, so the two corpora can be made
// overlapping or disjoint by construction.
std::vector<std::vector<TokenId>> random_corpus(SplitMix64& rng, std::size_t n_seqs,
                                                TokenId lo, TokenId hi) {
    std::vector<std::vector<TokenId>> out;
    for (std::size_t s = 0; s < n_seqs; ++s) {
        std::vector<TokenId> seq(8 + rng.next() % 12);
        for (auto& t : seq) t = lo + static_cast<TokenId>(rng.next() % (hi - lo));
        out.push_back(std::move(seq));
    }
    return out;
}

// Brute-force Spearman oracle: explicit rank vectors via stable counting.
double spearman_oracle(const std::vector<double>& xs, const std::vector<double>& ys) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            double less = 0, equal = 0;
            for (double w : v) {
                if (w < v[i]) ++less;
                if (w == v[i]) ++equal;
            }
            r[i] = less + (equal + 1.0) / 2.0;  // average rank of the tie group
        }
        return r;
    };
    const auto rx = ranks(xs);
    const auto ry = ranks(ys);
    const double n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double cov = 0, vx = 0, vy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        cov += (rx[i] - mx) * (ry[i] - my);
        vx += (rx[i] - mx) * (rx[i] - mx);
        vy += (ry[i] - my) * (ry[i] - my);
    }
    return cov / std::sqrt(vx * vy);
}

}  // namespace

TEST_CASE("featurize produces unit-norm hashed count vectors") {
    FeatureSpec spec = small_spec();
    const std::vector<std::vector<TokenId>> seqs = {{1, 2, 3, 4}, {5}, {7, 7, 7}};
    const auto feats = featurize(seqs, spec);
    REQUIRE(feats.size() == 3);
    for (const auto& f : feats) {
        REQUIRE(f.size() == spec.hash_dim);
        double norm = 0.0;
        for (double v : f) norm += v * v;
        CHECK(norm == doctest::Approx(1.0).epsilon(1e-9));
    }
    // A single-token sequence still gets features (order falls back to 1).
    CHECK(std::any_of(feats[1].begin(), feats[1].end(), [](double v) { return v > 0; }));
    // Identical sequences map to identical features.
    const auto again = featurize(seqs, spec);
    CHECK(again[0] == feats[0]);
}

TEST_CASE("kmeans is deterministic and ties go to the lowest cluster") {
    std::vector<std::vector<double>> pts;
    SplitMix64 rng(5);
    for (int i = 0; i < 40; ++i) {
        pts.push_back({rng.next_uniform(), rng.next_uniform()});
    }
    const auto c1 = detail::kmeans(pts, 4, 0);
    const auto c2 = detail::kmeans(pts, 4, 0);
    CHECK(c1 == c2);

    // Equidistant point: the lower index wins.
    const std::vector<std::vector<double>> centroids = {{0.0, 0.0}, {2.0, 0.0}};
    CHECK(detail::nearest_centroid({1.0, 0.0}, centroids) == 0);
}

TEST_CASE("identical sample sets score exactly 1") {
    SplitMix64 rng(31);
    const auto corpus = random_corpus(rng, 24, 0, 50);
    const auto s = quality_score(corpus, corpus, small_spec());
    CHECK(s.value == 1.0);
    CHECK(s.n_model_samples == 24);
    CHECK(s.n_ref_samples == 24);
}

TEST_CASE("disjoint-support sample sets score near zero") {
    // Low-entropy corpora: a tiny alphabet per side makes within-set n-grams
    // shared and across-set feature support disjoint.
    SplitMix64 rng(32);
    const auto a = random_corpus(rng, 30, 0, 3);
    const auto b = random_corpus(rng, 30, 1000, 1003);
    const auto s = quality_score(a, b, small_spec());
    CHECK(s.value < 0.1);
    CHECK(s.value > 0.0);
}

TEST_CASE("quality score is symmetric in its arguments") {
    SplitMix64 rng(33);
    const auto a = random_corpus(rng, 25, 0, 60);
    const auto b = random_corpus(rng, 25, 30, 90);
    const auto ab = quality_score(a, b, small_spec());
    const auto ba = quality_score(b, a, small_spec());
    CHECK(ab.value == doctest::Approx(ba.value).epsilon(1e-9));
}

TEST_CASE("closer distributions score higher") {
    SplitMix64 rng(34);
    const auto ref = random_corpus(rng, 30, 0, 4);
    const auto near = random_corpus(rng, 30, 0, 4);      // same tiny alphabet
    const auto far = random_corpus(rng, 30, 200, 204);   // disjoint alphabet
    const auto s_near = quality_score(near, ref, small_spec());
    const auto s_far = quality_score(far, ref, small_spec());
    CHECK(s_near.value > s_far.value);
}

TEST_CASE("quality score needs enough sequences per side") {
    SplitMix64 rng(35);
    const auto a = random_corpus(rng, 3, 0, 10);
    const auto b = random_corpus(rng, 30, 0, 10);
    CHECK_THROWS_AS(quality_score(a, b, small_spec()), std::invalid_argument);
}

TEST_CASE("average ranks with ties") {
    const std::vector<double> xs = {3.0, 1.0, 4.0, 1.0, 5.0};
    const auto r = average_ranks(xs);
    CHECK(r == std::vector<double>{3.0, 1.5, 4.0, 1.5, 5.0});
}

TEST_CASE("spearman worked examples") {
    const std::vector<double> xs = {1, 2, 3, 4, 5};
    const std::vector<double> up = {10, 20, 30, 40, 50};
    const std::vector<double> down = {5, 4, 3, 2, 1};
    CHECK(spearman(xs, up) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(spearman(xs, down) == doctest::Approx(-1.0).epsilon(1e-12));

    // Monotone-transform invariance: ranks only.
    std::vector<double> logs;
    for (double v : up) logs.push_back(std::log(v));
    CHECK(spearman(xs, logs) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("spearman matches a brute-force oracle, ties included") {
    SplitMix64 rng(71);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 3 + rng.next() % 20;
        std::vector<double> xs(n), ys(n);
        for (auto& v : xs) v = static_cast<double>(rng.next() % 6);  // frequent ties
        for (auto& v : ys) v = static_cast<double>(rng.next() % 6);
        bool cx = std::all_of(xs.begin(), xs.end(), [&](double v) { return v == xs[0]; });
        bool cy = std::all_of(ys.begin(), ys.end(), [&](double v) { return v == ys[0]; });
        if (cx || cy) {
            CHECK_THROWS_AS(spearman(xs, ys), std::domain_error);
            continue;
        }
        CHECK(spearman(xs, ys) == doctest::Approx(spearman_oracle(xs, ys)).epsilon(1e-10));
    }
}

TEST_CASE("spearman input validation") {
    const std::vector<double> xs = {1, 2, 3};
    CHECK_THROWS_AS(spearman(xs, std::vector<double>{1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(spearman(std::vector<double>{1, 2}, std::vector<double>{1, 2}),
                    std::invalid_argument);
    CHECK_THROWS_AS(spearman(xs, std::vector<double>{7, 7, 7}), std::domain_error);
}

TEST_CASE("feature spec validation") {
    FeatureSpec spec;
    CHECK_NOTHROW(spec.validate());
    spec.n_clusters = 1;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = FeatureSpec{};
    spec.hash_dim = 0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = FeatureSpec{};
    spec.scaling_c = 0.0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}
