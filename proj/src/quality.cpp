#include "adapterlab/quality.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "adapterlab/generator.hpp"

namespace adapterlab {

void FeatureSpec::validate() const {
    if (ngram_order < 1) throw std::invalid_argument("ngram_order must be >= 1");
    if (hash_dim < 1) throw std::invalid_argument("hash_dim must be >= 1");
    if (n_clusters < 2) throw std::invalid_argument("n_clusters must be >= 2");
    if (!(scaling_c > 0.0)) throw std::invalid_argument("scaling_c must be > 0");
    if (grid_size < 1) throw std::invalid_argument("grid_size must be >= 1");
    if (!(smoothing_eps > 0.0)) throw std::invalid_argument("smoothing_eps must be > 0");
}

namespace {

std::uint64_t hash_ngram(std::span<const TokenId> gram) {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ (gram.size() * 0x9e3779b97f4a7c15ULL);
    for (TokenId id : gram) {
        for (int shift = 0; shift < 32; shift += 8) {
            h ^= (id >> shift) & 0xff;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

}  // namespace

std::vector<std::vector<double>> featurize(
    const std::vector<std::vector<TokenId>>& seqs, const FeatureSpec& spec) {
    spec.validate();
    if (seqs.empty()) throw std::invalid_argument("featurize: no sequences");
    std::vector<std::vector<double>> out;
    out.reserve(seqs.size());
    for (const auto& seq : seqs) {
        std::vector<double> vec(spec.hash_dim, 0.0);
        const std::size_t n = std::min(spec.ngram_order, std::max<std::size_t>(seq.size(), 1));
        if (seq.size() >= n) {
            for (std::size_t i = 0; i + n <= seq.size(); ++i) {
                vec[hash_ngram(std::span(seq.data() + i, n)) % spec.hash_dim] += 1.0;
            }
        }
        double norm = std::sqrt(std::inner_product(vec.begin(), vec.end(), vec.begin(), 0.0));
        if (norm > 0.0) {
            for (double& v : vec) v /= norm;
        }
        out.push_back(std::move(vec));
    }
    return out;
}

namespace detail {

std::size_t nearest_centroid(const std::vector<double>& point,
                             const std::vector<std::vector<double>>& centroids) {
    std::size_t best = 0;
    double best_d = sq_dist(point, centroids[0]);
    for (std::size_t c = 1; c < centroids.size(); ++c) {
        const double d = sq_dist(point, centroids[c]);
        if (d < best_d) {  // strict: ties stay at the lowest index
            best_d = d;
            best = c;
        }
    }
    return best;
}

std::vector<std::vector<double>> kmeans(const std::vector<std::vector<double>>& points,
                                        std::size_t k, std::uint64_t seed,
                                        std::size_t max_iter) {
    if (points.size() < k) throw std::invalid_argument("kmeans: fewer points than clusters");
    const std::size_t dim = points[0].size();
    SplitMix64 rng = SplitMix64::for_stream(seed, 0x6b6d65616e73ULL);  // "kmeans"

    std::vector<std::vector<double>> centroids;
    centroids.reserve(k);
    centroids.push_back(points[rng.next() % points.size()]);
    std::vector<double> d2(points.size());
    while (centroids.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            double best = sq_dist(points[i], centroids[0]);
            for (std::size_t c = 1; c < centroids.size(); ++c) {
                best = std::min(best, sq_dist(points[i], centroids[c]));
            }
            d2[i] = best;
            total += best;
        }
        std::size_t pick;
        if (total <= 0.0) {
            pick = rng.next() % points.size();
        } else {
            double target = rng.next_uniform() * total;
            double cum = 0.0;
            pick = points.size() - 1;
            for (std::size_t i = 0; i < points.size(); ++i) {
                cum += d2[i];
                if (target < cum) {
                    pick = i;
                    break;
                }
            }
        }
        centroids.push_back(points[pick]);
    }

    std::vector<std::size_t> assignment(points.size(), 0);
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const std::size_t a = nearest_centroid(points[i], centroids);
            if (a != assignment[i]) {
                assignment[i] = a;
                changed = true;
            }
        }
        if (!changed && iter > 0) break;
        std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            ++counts[assignment[i]];
            const auto& p = points[i];
            auto& s = sums[assignment[i]];
            for (std::size_t d = 0; d < dim; ++d) s[d] += p[d];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;  // empty cluster keeps its centroid
            for (std::size_t d = 0; d < dim; ++d) {
                centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
            }
        }
    }
    return centroids;
}

}  // namespace detail

QualityScore quality_score(const std::vector<std::vector<TokenId>>& model_seqs,
                           const std::vector<std::vector<TokenId>>& ref_seqs,
                           const FeatureSpec& spec) {
    spec.validate();
    if (model_seqs.size() < spec.n_clusters || ref_seqs.size() < spec.n_clusters) {
        throw std::invalid_argument("quality_score needs at least " +
                                    std::to_string(spec.n_clusters) +
                                    " sequences on each side");
    }
    const auto model_feats = featurize(model_seqs, spec);
    const auto ref_feats = featurize(ref_seqs, spec);

    // Quantize both sides with one shared k-means. The pooled points are
    // sorted into a canonical order first so the quantization (and hence the
    // score) is invariant to argument order and within-set permutations.
    std::vector<std::vector<double>> pooled;
    pooled.reserve(model_feats.size() + ref_feats.size());
    pooled.insert(pooled.end(), model_feats.begin(), model_feats.end());
    pooled.insert(pooled.end(), ref_feats.begin(), ref_feats.end());
    std::sort(pooled.begin(), pooled.end());
    const auto centroids = detail::kmeans(pooled, spec.n_clusters, spec.kmeans_seed);

    const std::size_t k = spec.n_clusters;
    std::vector<double> p_hat(k, 0.0), q_hat(k, 0.0);
    for (const auto& f : model_feats) p_hat[detail::nearest_centroid(f, centroids)] += 1.0;
    for (const auto& f : ref_feats) q_hat[detail::nearest_centroid(f, centroids)] += 1.0;
    for (double& v : p_hat) v /= static_cast<double>(model_feats.size());
    for (double& v : q_hat) v /= static_cast<double>(ref_feats.size());

    // Epsilon-smooth the histograms so the frontier KLs stay finite.
    const double eps = spec.smoothing_eps;
    const double denom = 1.0 + static_cast<double>(k) * eps;
    for (double& v : p_hat) v = (v + eps) / denom;
    for (double& v : q_hat) v = (v + eps) / denom;

    auto kl_against_mix = [&](const std::vector<double>& a, double lambda) {
        // KL(a || lambda * p_hat + (1 - lambda) * q_hat). The mixture is
        // written as q + lambda*(p - q) so equal histograms yield r == a
        // componentwise and the divergence is exactly zero.
        double d = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            const double r = q_hat[c] + lambda * (p_hat[c] - q_hat[c]);
            d += a[c] * std::log(a[c] / r);
        }
        return std::max(d, 0.0);
    };

    // Frontier points plus the (0,1) and (1,0) end points; area under the
    // x-sorted polyline via the trapezoid rule.
    std::vector<std::pair<double, double>> pts;
    pts.reserve(spec.grid_size + 2);
    pts.emplace_back(0.0, 1.0);
    pts.emplace_back(1.0, 0.0);
    for (std::size_t i = 1; i <= spec.grid_size; ++i) {
        const double lambda = static_cast<double>(i) / static_cast<double>(spec.grid_size + 1);
        const double x = std::exp(-spec.scaling_c * kl_against_mix(q_hat, lambda));
        const double y = std::exp(-spec.scaling_c * kl_against_mix(p_hat, lambda));
        pts.emplace_back(x, y);
    }
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second > b.second;
    });
    double area = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        area += (pts[i].first - pts[i - 1].first) *
                (pts[i].second + pts[i - 1].second) / 2.0;
    }

    QualityScore score;
    score.value = std::min(std::max(area, 1e-300), 1.0);
    score.n_model_samples = model_seqs.size();
    score.n_ref_samples = ref_seqs.size();
    score.spec = spec;
    return score;
}

std::vector<double> average_ranks(std::span<const double> xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&xs](std::size_t a, std::size_t b) {
        if (xs[a] != xs[b]) return xs[a] < xs[b];
        return a < b;
    });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("spearman: length mismatch");
    if (xs.size() < 3) throw std::invalid_argument("spearman needs at least 3 points");
    const auto rx = average_ranks(xs);
    const auto ry = average_ranks(ys);
    const double n = static_cast<double>(xs.size());
    const double mean = (n + 1.0) / 2.0;
    double cov = 0.0, var_x = 0.0, var_y = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = rx[i] - mean;
        const double dy = ry[i] - mean;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if (var_x == 0.0 || var_y == 0.0) {
        throw std::domain_error("spearman undefined for a constant input vector");
    }
    return cov / std::sqrt(var_x * var_y);
}

}  // namespace adapterlab
