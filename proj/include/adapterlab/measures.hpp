#pragma once

#include <optional>
#include <string>

#include "adapterlab/dist.hpp"

namespace adapterlab {

/// Configuration of one distribution-difference measure. Orientation names
/// follow the convention: forward = reference distribution first, reverse =
/// reference second. TVD/JS are symmetric; entropy and coverage take a
/// single distribution.
struct MeasureSpec {
    enum class Kind { CrossEntropy, Kl, Tvd, Js, Entropy, Coverage };
    enum class Orientation { Forward, Reverse, Symmetric };

    Kind kind = Kind::CrossEntropy;
    Orientation orientation = Orientation::Forward;
    std::optional<double> smoothing_eps;

    void validate() const;
    std::string to_string() const;
};

std::string to_string(MeasureSpec::Kind kind);
std::string to_string(MeasureSpec::Orientation o);

/// H(p1, p2) = -sum p1(y) log p2(y), in nats. When eps is given, p2 is
/// replaced by epsilon_smooth(p2, eps) first. Without smoothing, a support
/// violation yields +infinity (a value, not an error).
double cross_entropy(const CondDist& p1, const CondDist& p2,
                     std::optional<double> eps = std::nullopt);

/// KL(p1 || p2) = H(p1, p2) - H(p1).
double kl(const CondDist& p1, const CondDist& p2,
          std::optional<double> eps = std::nullopt);

/// Total variation distance without the conventional 1/2 factor:
/// sum_y |p1(y) - p2(y)|, in [0, 2].
double tvd(const CondDist& p1, const CondDist& p2);

/// Jensen-Shannon divergence against the pointwise average m, in [0, log 2].
double js(const CondDist& p1, const CondDist& p2);

/// 1 iff the adapted distribution assigns non-zero probability to the
/// observed token. Throws on an out-of-range token.
int coverage(const CondDist& p_adapted, TokenId observed);

}  // namespace adapterlab
