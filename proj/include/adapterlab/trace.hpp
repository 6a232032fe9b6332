#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "adapterlab/dist.hpp"

namespace adapterlab {

/// Parse or validation failure in a trace file; carries the 1-based line
/// number of the offending record.
class TraceError : public std::runtime_error {
public:
    TraceError(std::size_t line, const std::string& what)
        : std::runtime_error("trace line " + std::to_string(line) + ": " + what),
          line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

struct TraceHeader {
    int format_version = 1;
    std::uint64_t vocab_hash = 0;
    std::uint32_t vocab_size = 0;
    TokenId eos_id = 0;
    std::string producer;
};

/// One generation step from an external model: the realized token plus a
/// sparse view of the conditional distribution. Unlisted tokens share
/// `rest_mass` and number `rest_count`.
struct TraceRecord {
    std::string seq_id;
    std::uint32_t step = 0;  // 1-based, contiguous per sequence
    TokenId observed = 0;
    std::vector<std::pair<TokenId, double>> dist;  // (token, logprob), sorted by token
    double rest_mass = 0.0;
    std::uint64_t rest_count = 0;
};

class TraceWriter {
public:
    TraceWriter(std::ostream& out, const TraceHeader& header);
    void write(const TraceRecord& record);

private:
    std::ostream& out_;
};

/// Streaming reader. Validates the header eagerly and each record as it is
/// consumed; violations throw TraceError naming the offending line.
class TraceReader {
public:
    explicit TraceReader(std::istream& in);

    const TraceHeader& header() const { return header_; }

    /// Delivers the next sequence's records, step-ordered. Returns false at
    /// a clean end of file.
    bool next_sequence(std::string& seq_id, std::vector<TraceRecord>& records);

private:
    TraceRecord parse_record(const std::string& line);

    std::istream& in_;
    TraceHeader header_;
    std::size_t line_no_ = 0;
    bool pending_ = false;
    TraceRecord pending_record_;
    std::vector<std::string> finished_seqs_;
};

enum class RestPolicy { UniformRest, ZeroRest };

struct DensifyResult {
    CondDist dist;
    /// Set when zero_rest discarded more than 1% of probability mass.
    bool lossy = false;
};

/// Expands a sparse record to a dense distribution. uniform_rest spreads
/// rest_mass evenly over the unlisted tokens; zero_rest zeroes them and
/// renormalizes the listed mass.
DensifyResult densify(const TraceRecord& record, RestPolicy policy,
                      std::size_t vocab_size);

/// Sparse encoding helper for producers: keeps every token whose
/// probability is at least `min_prob` (0 keeps the full support) and folds
/// the remainder into rest_mass / rest_count.
TraceRecord sparsify(const CondDist& p, const std::string& seq_id, std::uint32_t step,
                     TokenId observed, double min_prob = 0.0);

}  // namespace adapterlab
