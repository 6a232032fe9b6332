#include "adapterlab/measures.hpp"

#include <cmath>
#include <stdexcept>

namespace adapterlab {

void MeasureSpec::validate() const {
    if (smoothing_eps && !(*smoothing_eps > 0.0)) {
        throw std::invalid_argument("smoothing epsilon must be > 0");
    }
    const bool symmetric_only = kind == Kind::Tvd || kind == Kind::Js;
    if (symmetric_only && orientation != Orientation::Symmetric) {
        throw std::invalid_argument("tvd/js are symmetric-only measures");
    }
    if ((kind == Kind::Entropy || kind == Kind::Coverage) &&
        orientation != Orientation::Symmetric) {
        throw std::invalid_argument("entropy/coverage take no orientation");
    }
}

std::string to_string(MeasureSpec::Kind kind) {
    switch (kind) {
        case MeasureSpec::Kind::CrossEntropy: return "cross_entropy";
        case MeasureSpec::Kind::Kl: return "kl";
        case MeasureSpec::Kind::Tvd: return "tvd";
        case MeasureSpec::Kind::Js: return "js";
        case MeasureSpec::Kind::Entropy: return "entropy";
        case MeasureSpec::Kind::Coverage: return "coverage";
    }
    return "?";
}

std::string to_string(MeasureSpec::Orientation o) {
    switch (o) {
        case MeasureSpec::Orientation::Forward: return "forward";
        case MeasureSpec::Orientation::Reverse: return "reverse";
        case MeasureSpec::Orientation::Symmetric: return "symmetric";
    }
    return "?";
}

std::string MeasureSpec::to_string() const {
    std::string out = adapterlab::to_string(kind);
    if (kind == Kind::CrossEntropy || kind == Kind::Kl) {
        out += "/" + adapterlab::to_string(orientation);
    }
    return out;
}

double cross_entropy(const CondDist& p1, const CondDist& p2,
                     std::optional<double> eps) {
    if (p1.size() != p2.size()) throw std::invalid_argument("distribution size mismatch");
    if (eps) {
        const CondDist smoothed = epsilon_smooth(p2, *eps);
        return cross_entropy(p1, smoothed);
    }
    double ce = 0.0;
    for (TokenId y = 0; y < p1.size(); ++y) {
        double lp1 = p1.logp(y);
        if (lp1 == kLogZero) continue;
        double lp2 = p2.logp(y);
        if (lp2 == kLogZero) return std::numeric_limits<double>::infinity();
        ce -= std::exp(lp1) * lp2;
    }
    return ce;
}

double kl(const CondDist& p1, const CondDist& p2, std::optional<double> eps) {
    return cross_entropy(p1, p2, eps) - entropy(p1);
}

double tvd(const CondDist& p1, const CondDist& p2) {
    if (p1.size() != p2.size()) throw std::invalid_argument("distribution size mismatch");
    double d = 0.0;
    for (TokenId y = 0; y < p1.size(); ++y) {
        d += std::abs(p1.prob(y) - p2.prob(y));
    }
    return d;
}

double js(const CondDist& p1, const CondDist& p2) {
    if (p1.size() != p2.size()) throw std::invalid_argument("distribution size mismatch");
    // KL terms against the mixture, written out so the evaluation order is
    // identical under argument swap (addition commutes bit-exactly).
    double kl1 = 0.0, kl2 = 0.0;
    for (TokenId y = 0; y < p1.size(); ++y) {
        const double a = p1.prob(y);
        const double b = p2.prob(y);
        const double m = (a + b) / 2.0;
        if (a > 0.0) kl1 += a * (std::log(a) - std::log(m));
        if (b > 0.0) kl2 += b * (std::log(b) - std::log(m));
    }
    return (kl1 + kl2) / 2.0;
}

int coverage(const CondDist& p_adapted, TokenId observed) {
    if (observed >= p_adapted.size()) throw std::invalid_argument("observed token out of range");
    return p_adapted.logp(observed) != kLogZero ? 1 : 0;
}

}  // namespace adapterlab
