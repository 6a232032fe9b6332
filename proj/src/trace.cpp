#include "adapterlab/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace adapterlab {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Writing

TraceWriter::TraceWriter(std::ostream& out, const TraceHeader& header) : out_(out) {
    char hash_hex[24];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(header.vocab_hash));
    out_ << "trace " << header.format_version
         << " vocab_size=" << header.vocab_size
         << " eos_id=" << header.eos_id
         << " vocab_hash=" << hash_hex
         << " producer=" << header.producer << "\n";
}

void TraceWriter::write(const TraceRecord& r) {
    out_ << "seq=" << r.seq_id
         << " step=" << r.step
         << " obs=" << r.observed
         << " rest_mass=" << fmt_double(r.rest_mass)
         << " rest_count=" << r.rest_count
         << " dist=";
    for (std::size_t i = 0; i < r.dist.size(); ++i) {
        if (i) out_ << ',';
        out_ << r.dist[i].first << ':' << fmt_double(r.dist[i].second);
    }
    out_ << "\n";
}

// ---------------------------------------------------------------------------
// Reading

namespace {

// Splits "key=value" fields; the last field may contain spaces only for the
// header's producer string.
std::string expect_field(std::istringstream& in, const std::string& key,
                         std::size_t line_no) {
    std::string field;
    if (!(in >> field) || field.rfind(key + "=", 0) != 0) {
        throw TraceError(line_no, "expected field '" + key + "='");
    }
    return field.substr(key.size() + 1);
}

}  // namespace

TraceReader::TraceReader(std::istream& in) : in_(in) {
    std::string line;
    if (!std::getline(in_, line)) throw TraceError(1, "missing header");
    ++line_no_;
    std::istringstream hs(line);
    std::string magic;
    if (!(hs >> magic) || magic != "trace") throw TraceError(1, "bad magic, expected 'trace'");
    if (!(hs >> header_.format_version)) throw TraceError(1, "missing format version");
    if (header_.format_version != 1) {
        throw TraceError(1, "unsupported format version " +
                                std::to_string(header_.format_version));
    }
    try {
        header_.vocab_size = static_cast<std::uint32_t>(
            std::stoul(expect_field(hs, "vocab_size", 1)));
        header_.eos_id = static_cast<TokenId>(std::stoul(expect_field(hs, "eos_id", 1)));
        header_.vocab_hash = std::stoull(expect_field(hs, "vocab_hash", 1), nullptr, 16);
    } catch (const TraceError&) {
        throw;
    } catch (const std::exception&) {
        throw TraceError(1, "malformed header field");
    }
    std::string producer_field;
    if (hs >> producer_field) {
        if (producer_field.rfind("producer=", 0) != 0) {
            throw TraceError(1, "expected field 'producer='");
        }
        header_.producer = producer_field.substr(9);
        std::string rest;
        if (std::getline(hs, rest) && !rest.empty()) header_.producer += rest;
    }
    if (header_.vocab_size < 2) throw TraceError(1, "vocab_size must be >= 2");
    if (header_.eos_id >= header_.vocab_size) throw TraceError(1, "eos_id out of range");
}

TraceRecord TraceReader::parse_record(const std::string& line) {
    const std::size_t ln = line_no_;
    std::istringstream rs(line);
    TraceRecord r;
    try {
        r.seq_id = expect_field(rs, "seq", ln);
        r.step = static_cast<std::uint32_t>(std::stoul(expect_field(rs, "step", ln)));
        r.observed = static_cast<TokenId>(std::stoul(expect_field(rs, "obs", ln)));
        r.rest_mass = std::stod(expect_field(rs, "rest_mass", ln));
        r.rest_count = std::stoull(expect_field(rs, "rest_count", ln));
        std::string dist = expect_field(rs, "dist", ln);
        std::size_t start = 0;
        while (start < dist.size()) {
            std::size_t comma = dist.find(',', start);
            std::string entry = dist.substr(start, comma == std::string::npos
                                                       ? std::string::npos
                                                       : comma - start);
            auto colon = entry.find(':');
            if (colon == std::string::npos) throw TraceError(ln, "bad dist entry '" + entry + "'");
            r.dist.emplace_back(static_cast<TokenId>(std::stoul(entry.substr(0, colon))),
                                std::stod(entry.substr(colon + 1)));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
    } catch (const TraceError&) {
        throw;
    } catch (const std::exception&) {
        throw TraceError(ln, "malformed record");
    }

    // Record-level invariants.
    if (r.seq_id.empty()) throw TraceError(ln, "empty seq id");
    if (r.observed >= header_.vocab_size) throw TraceError(ln, "observed token out of range");
    if (r.rest_mass < 0.0) throw TraceError(ln, "negative rest_mass");
    if (r.rest_count + r.dist.size() != header_.vocab_size) {
        throw TraceError(ln, "rest_count + |dist| must equal vocab_size");
    }
    double mass = r.rest_mass;
    for (std::size_t i = 0; i < r.dist.size(); ++i) {
        const auto& [tok, lp] = r.dist[i];
        if (tok >= header_.vocab_size) throw TraceError(ln, "dist token out of range");
        if (i && r.dist[i - 1].first >= tok) {
            throw TraceError(ln, "dist tokens must be sorted and unique");
        }
        if (std::isnan(lp) || lp > 0.0) throw TraceError(ln, "bad log-probability");
        mass += std::exp(lp);
    }
    if (std::abs(mass - 1.0) > 1e-6) {
        throw TraceError(ln, "record mass " + std::to_string(mass) + " violates normalization");
    }
    return r;
}

bool TraceReader::next_sequence(std::string& seq_id, std::vector<TraceRecord>& records) {
    records.clear();
    std::string line;

    if (!pending_) {
        while (std::getline(in_, line)) {
            ++line_no_;
            if (line.empty()) continue;
            pending_record_ = parse_record(line);
            pending_ = true;
            break;
        }
        if (!pending_) return false;  // clean EOF
    }

    seq_id = pending_record_.seq_id;
    if (std::find(finished_seqs_.begin(), finished_seqs_.end(), seq_id) !=
        finished_seqs_.end()) {
        throw TraceError(line_no_, "sequence '" + seq_id + "' is not contiguous in the file");
    }
    if (pending_record_.step != 1) {
        throw TraceError(line_no_, "sequence '" + seq_id + "' must start at step 1");
    }
    records.push_back(std::move(pending_record_));
    pending_ = false;

    while (std::getline(in_, line)) {
        ++line_no_;
        if (line.empty()) continue;
        TraceRecord r = parse_record(line);
        if (r.seq_id != seq_id) {
            pending_record_ = std::move(r);
            pending_ = true;
            break;
        }
        if (r.step != records.back().step + 1) {
            throw TraceError(line_no_, "non-contiguous step " + std::to_string(r.step) +
                                           " in sequence '" + seq_id + "'");
        }
        records.push_back(std::move(r));
    }
    finished_seqs_.push_back(seq_id);
    return true;
}

// ---------------------------------------------------------------------------
// Densify / sparsify

DensifyResult densify(const TraceRecord& record, RestPolicy policy,
                      std::size_t vocab_size) {
    if (record.rest_count + record.dist.size() != vocab_size) {
        throw std::invalid_argument("record does not match vocab size");
    }
    std::vector<bool> listed(vocab_size, false);
    double listed_mass = 0.0;
    for (const auto& [tok, lp] : record.dist) {
        listed[tok] = true;
        listed_mass += std::exp(lp);
    }

    DensifyResult out{one_hot(1, 0), false};
    if (policy == RestPolicy::UniformRest) {
        // Keep listed log-probabilities bit-exact; only the tail share is
        // derived. Renormalize only if the record's slack (up to 1e-6)
        // exceeds what CondDist accepts.
        std::vector<double> logp(vocab_size, kLogZero);
        const double share =
            record.rest_count > 0 && record.rest_mass > 0.0
                ? record.rest_mass / static_cast<double>(record.rest_count)
                : 0.0;
        for (std::size_t y = 0; y < vocab_size; ++y) {
            if (!listed[y] && share > 0.0) logp[y] = std::log(share);
        }
        for (const auto& [tok, lp] : record.dist) logp[tok] = lp;
        const double total = listed_mass + share * static_cast<double>(record.rest_count);
        out.dist = std::abs(total - 1.0) <= 1e-9 ? CondDist::from_logp(std::move(logp))
                                                 : normalize_log(logp);
        return out;
    }
    // zero_rest: drop the tail and renormalize what is listed.
    out.lossy = record.rest_mass > 0.01;
    if (listed_mass <= 0.0) throw std::invalid_argument("zero_rest on a record with no listed mass");
    std::vector<double> probs(vocab_size, 0.0);
    for (const auto& [tok, lp] : record.dist) probs[tok] = std::exp(lp);
    out.dist = normalize(probs);
    return out;
}

TraceRecord sparsify(const CondDist& p, const std::string& seq_id, std::uint32_t step,
                     TokenId observed, double min_prob) {
    TraceRecord r;
    r.seq_id = seq_id;
    r.step = step;
    r.observed = observed;
    for (TokenId y = 0; y < p.size(); ++y) {
        const double prob = p.prob(y);
        if (prob > 0.0 && prob >= min_prob) {
            r.dist.emplace_back(y, p.logp(y));
        } else {
            r.rest_mass += prob;
            ++r.rest_count;
        }
    }
    return r;
}

}  // namespace adapterlab
