#include "adapterlab/adapters.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <stdexcept>

namespace adapterlab {

namespace {

// Token indices of the support, ordered by descending probability, ties by
// ascending TokenId.
std::vector<TokenId> support_by_descending_prob(const CondDist& p) {
    std::vector<TokenId> order;
    order.reserve(p.size());
    for (TokenId y = 0; y < p.size(); ++y) {
        if (p.logp(y) != kLogZero) order.push_back(y);
    }
    std::stable_sort(order.begin(), order.end(), [&p](TokenId a, TokenId b) {
        double pa = p.logp(a), pb = p.logp(b);
        if (pa != pb) return pa > pb;
        return a < b;
    });
    return order;
}

CriterionSet make_criterion(std::vector<TokenId> kept, const CondDist& p) {
    std::sort(kept.begin(), kept.end());
    double mass = 0.0;
    for (TokenId y : kept) mass += p.prob(y);
    return {std::move(kept), mass};
}

}  // namespace

void AdapterSpec::validate(std::size_t vocab_size) const {
    switch (kind) {
        case AdapterKind::Ancestral:
            return;
        case AdapterKind::Temperature:
            if (!(param > 0.0)) throw std::invalid_argument("temperature must be > 0");
            return;
        case AdapterKind::TopK: {
            double k = param;
            if (k < 1.0 || k != std::floor(k)) {
                throw std::invalid_argument("top-k k must be a positive integer");
            }
            if (k > static_cast<double>(vocab_size)) {
                throw std::invalid_argument("top-k k exceeds vocabulary size");
            }
            return;
        }
        case AdapterKind::TopPi:
            if (!(param > 0.0 && param <= 1.0)) {
                throw std::invalid_argument("top-pi pi must be in (0,1]");
            }
            return;
        case AdapterKind::Typical:
            if (!(param > 0.0 && param <= 1.0)) {
                throw std::invalid_argument("typical tau must be in (0,1]");
            }
            return;
        case AdapterKind::Eta:
            if (!(param > 0.0)) throw std::invalid_argument("eta epsilon must be > 0");
            return;
    }
    throw std::invalid_argument("unknown adapter kind");
}

double AdapterSpec::strength_key() const {
    switch (kind) {
        case AdapterKind::Ancestral: return 0.0;
        case AdapterKind::Temperature: return std::abs(param - 1.0);
        case AdapterKind::TopK: return -param;
        case AdapterKind::TopPi: return -param;
        case AdapterKind::Typical: return -param;
        case AdapterKind::Eta: return param;
    }
    return 0.0;
}

std::string to_string(AdapterKind kind) {
    switch (kind) {
        case AdapterKind::Ancestral: return "ancestral";
        case AdapterKind::Temperature: return "temp";
        case AdapterKind::TopK: return "topk";
        case AdapterKind::TopPi: return "toppi";
        case AdapterKind::Typical: return "typical";
        case AdapterKind::Eta: return "eta";
    }
    return "?";
}

std::string AdapterSpec::to_string() const {
    if (kind == AdapterKind::Ancestral) return "ancestral";
    char buf[64];
    if (kind == AdapterKind::TopK) {
        std::snprintf(buf, sizeof(buf), "%s:%llu", adapterlab::to_string(kind).c_str(),
                      static_cast<unsigned long long>(param));
    } else {
        // Shortest decimal form that parses back to the same double.
        char num[32];
        for (int prec = 1; prec <= 17; ++prec) {
            std::snprintf(num, sizeof(num), "%.*g", prec, param);
            if (std::strtod(num, nullptr) == param) break;
        }
        std::snprintf(buf, sizeof(buf), "%s:%s", adapterlab::to_string(kind).c_str(), num);
    }
    return buf;
}

AdapterSpec AdapterSpec::parse(const std::string& text) {
    auto colon = text.find(':');
    std::string name = text.substr(0, colon);
    if (name == "ancestral") {
        if (colon != std::string::npos) {
            throw std::invalid_argument("ancestral takes no parameter");
        }
        return ancestral();
    }
    if (colon == std::string::npos) {
        throw std::invalid_argument("adapter spec '" + text + "' is missing its parameter");
    }
    double value;
    try {
        std::size_t pos = 0;
        value = std::stod(text.substr(colon + 1), &pos);
        if (pos != text.size() - colon - 1) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
        throw std::invalid_argument("bad adapter parameter in '" + text + "'");
    }
    AdapterSpec spec;
    if (name == "temp") spec = temperature(value);
    else if (name == "topk") spec = {AdapterKind::TopK, value};
    else if (name == "toppi") spec = top_pi(value);
    else if (name == "typical") spec = typical(value);
    else if (name == "eta") spec = eta(value);
    else throw std::invalid_argument("unknown adapter kind '" + name + "'");
    return spec;
}

CriterionSet criterion_top_k(std::size_t k, const CondDist& p) {
    if (k < 1 || k > p.size()) throw std::invalid_argument("top-k k out of range");
    auto order = support_by_descending_prob(p);
    if (order.size() > k) order.resize(k);
    return make_criterion(std::move(order), p);
}

CriterionSet criterion_top_pi(double pi, const CondDist& p) {
    if (!(pi > 0.0 && pi <= 1.0)) throw std::invalid_argument("pi out of range");
    auto order = support_by_descending_prob(p);
    std::vector<TokenId> kept;
    double mass = 0.0;
    for (TokenId y : order) {
        kept.push_back(y);
        mass += p.prob(y);
        if (mass >= pi) break;
    }
    return make_criterion(std::move(kept), p);
}

CriterionSet criterion_typical(double tau, const CondDist& p) {
    if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("tau out of range");
    const double h = entropy(p);
    auto order = support_by_descending_prob(p);
    // Rank by |H(p) + log p(y)| ascending, ties by ascending TokenId.
    std::stable_sort(order.begin(), order.end(), [&](TokenId a, TokenId b) {
        double sa = std::abs(h + p.logp(a));
        double sb = std::abs(h + p.logp(b));
        if (sa != sb) return sa < sb;
        return a < b;
    });
    std::vector<TokenId> kept;
    double mass = 0.0;
    for (TokenId y : order) {
        kept.push_back(y);
        mass += p.prob(y);
        if (mass >= tau) break;
    }
    return make_criterion(std::move(kept), p);
}

CriterionSet criterion_eta(double eps, const CondDist& p) {
    if (!(eps > 0.0)) throw std::invalid_argument("eta epsilon out of range");
    const double eta = std::min(eps, std::sqrt(eps) * std::exp(-entropy(p)));
    std::vector<TokenId> kept;
    for (TokenId y = 0; y < p.size(); ++y) {
        if (p.prob(y) > eta) kept.push_back(y);
    }
    if (kept.empty()) {
        // No token clears the threshold; keep the single most-probable one.
        kept.push_back(support_by_descending_prob(p).front());
    }
    return make_criterion(std::move(kept), p);
}

CriterionSet criterion_set(const AdapterSpec& spec, const CondDist& p) {
    spec.validate(p.size());
    switch (spec.kind) {
        case AdapterKind::TopK: return criterion_top_k(static_cast<std::size_t>(spec.param), p);
        case AdapterKind::TopPi: return criterion_top_pi(spec.param, p);
        case AdapterKind::Typical: return criterion_typical(spec.param, p);
        case AdapterKind::Eta: return criterion_eta(spec.param, p);
        default:
            throw std::invalid_argument("criterion_set: not a truncation adapter");
    }
}

CondDist apply(const AdapterSpec& spec, const CondDist& p) {
    spec.validate(p.size());
    switch (spec.kind) {
        case AdapterKind::Ancestral:
            return p;
        case AdapterKind::Temperature: {
            if (spec.param == 1.0) return p;
            std::vector<double> logw(p.size());
            for (TokenId y = 0; y < p.size(); ++y) {
                double lp = p.logp(y);
                logw[y] = lp == kLogZero ? kLogZero : lp / spec.param;
            }
            return normalize_log(logw);
        }
        default: {
            const CriterionSet crit = criterion_set(spec, p);
            std::vector<double> probs(p.size(), 0.0);
            for (TokenId y : crit.kept) probs[y] = p.prob(y) / crit.kept_mass;
            return normalize(probs);
        }
    }
}

CondDist compose(std::span<const AdapterSpec> specs, const CondDist& p) {
    CondDist out = p;
    for (const auto& spec : specs) out = apply(spec, out);
    return out;
}

std::vector<AdapterSpec> parse_adapter_chain(const std::string& text) {
    std::vector<AdapterSpec> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t comma = text.find(',', start);
        std::string piece = text.substr(start, comma == std::string::npos ? std::string::npos
                                                                          : comma - start);
        if (!piece.empty()) out.push_back(AdapterSpec::parse(piece));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string format_adapter_chain(std::span<const AdapterSpec> specs) {
    std::string out;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (i) out += ',';
        out += specs[i].to_string();
    }
    return out;
}

}  // namespace adapterlab
