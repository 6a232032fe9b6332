#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "adapterlab/dist.hpp"

namespace adapterlab {

/// Configuration of the sequence-level quality proxy: hashed n-gram
/// features quantized by k-means, scored by the area under a divergence
/// frontier. A stand-in for embedding-based scores at desk scale.
struct FeatureSpec {
    std::size_t ngram_order = 3;
    std::size_t hash_dim = 1024;
    std::size_t n_clusters = 32;
    double scaling_c = 5.0;
    std::size_t grid_size = 99;  // frontier mixture weights i/(grid_size+1)
    std::uint64_t kmeans_seed = 0;
    double smoothing_eps = 1e-6;

    void validate() const;
};

struct QualityScore {
    double value = 0.0;  // in (0, 1]; higher means closer to the reference
    std::size_t n_model_samples = 0;
    std::size_t n_ref_samples = 0;
    FeatureSpec spec;
};

/// L2-normalized hashed n-gram count vectors, one per sequence. Sequences
/// shorter than ngram_order fall back to their own length.
std::vector<std::vector<double>> featurize(
    const std::vector<std::vector<TokenId>>& seqs, const FeatureSpec& spec);

/// Divergence-frontier score between two sample sets: quantize both with a
/// shared k-means, form cluster multinomials, trace
/// (exp(-c KL(q||r_l)), exp(-c KL(p||r_l))) over mixtures r_l, and report
/// the area under the frontier. Deterministic given kmeans_seed; symmetric
/// in its two arguments.
QualityScore quality_score(const std::vector<std::vector<TokenId>>& model_seqs,
                           const std::vector<std::vector<TokenId>>& ref_seqs,
                           const FeatureSpec& spec);

/// Spearman rank correlation with average-rank tie handling. Throws
/// std::domain_error when either vector is constant.
double spearman(std::span<const double> xs, std::span<const double> ys);

/// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> average_ranks(std::span<const double> xs);

namespace detail {

/// Lloyd's k-means with k-means++ style seeding, at most `max_iter`
/// iterations, ties to the lowest cluster index. Returns the centroids.
std::vector<std::vector<double>> kmeans(const std::vector<std::vector<double>>& points,
                                        std::size_t k, std::uint64_t seed,
                                        std::size_t max_iter = 50);

std::size_t nearest_centroid(const std::vector<double>& point,
                             const std::vector<std::vector<double>>& centroids);

}  // namespace detail

}  // namespace adapterlab
