#pragma once

#include <span>
#include <string>
#include <vector>

#include "adapterlab/dist.hpp"

namespace adapterlab {

enum class AdapterKind { Ancestral, Temperature, TopK, TopPi, Typical, Eta };

/// A sampling adapter: a simplex-to-simplex map over next-token
/// distributions, identified by kind plus one hyperparameter.
///
/// Textual form (used in configs and on the CLI):
///   ancestral | temp:T | topk:k | toppi:pi | typical:tau | eta:eps
struct AdapterSpec {
    AdapterKind kind = AdapterKind::Ancestral;
    double param = 0.0;  // unused for ancestral

    static AdapterSpec ancestral() { return {AdapterKind::Ancestral, 0.0}; }
    static AdapterSpec temperature(double t) { return {AdapterKind::Temperature, t}; }
    static AdapterSpec top_k(std::size_t k) { return {AdapterKind::TopK, static_cast<double>(k)}; }
    static AdapterSpec top_pi(double pi) { return {AdapterKind::TopPi, pi}; }
    static AdapterSpec typical(double tau) { return {AdapterKind::Typical, tau}; }
    static AdapterSpec eta(double eps) { return {AdapterKind::Eta, eps}; }

    /// Throws std::invalid_argument if the hyperparameter is out of range
    /// for a vocabulary of the given size.
    void validate(std::size_t vocab_size) const;

    bool is_truncation() const {
        return kind == AdapterKind::TopK || kind == AdapterKind::TopPi ||
               kind == AdapterKind::Typical || kind == AdapterKind::Eta;
    }

    /// Per-kind ordering value: larger means the adapted distribution moves
    /// farther from the original (smaller k/pi/tau, larger eta-eps, |T-1|
    /// larger). Comparable only within one adapter kind.
    double strength_key() const;

    std::string to_string() const;
    static AdapterSpec parse(const std::string& text);

    bool operator==(const AdapterSpec&) const = default;
};

std::string to_string(AdapterKind kind);

/// The kept-token subset C(p) of a truncation criterion, with its total
/// probability mass under p. `kept` is sorted by ascending TokenId and is a
/// subset of the support of p.
struct CriterionSet {
    std::vector<TokenId> kept;
    double kept_mass = 0.0;
};

// Truncation criteria. All rankings break ties by ascending TokenId.
CriterionSet criterion_top_k(std::size_t k, const CondDist& p);
CriterionSet criterion_top_pi(double pi, const CondDist& p);
CriterionSet criterion_typical(double tau, const CondDist& p);
CriterionSet criterion_eta(double eps, const CondDist& p);

/// Dispatch on a truncation-kind spec. Throws for non-truncation kinds.
CriterionSet criterion_set(const AdapterSpec& spec, const CondDist& p);

/// Applies the adapter map. Truncation kinds restrict p to the criterion
/// set and renormalize; temperature exponentiates by 1/T; ancestral is the
/// identity (bit-exact).
CondDist apply(const AdapterSpec& spec, const CondDist& p);

/// Left-to-right composition of adapters.
CondDist compose(std::span<const AdapterSpec> specs, const CondDist& p);

std::vector<AdapterSpec> parse_adapter_chain(const std::string& text);  // comma-separated
std::string format_adapter_chain(std::span<const AdapterSpec> specs);

}  // namespace adapterlab
