#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "adapterlab/adapters.hpp"
#include "adapterlab/generator.hpp"
#include "adapterlab/measures.hpp"
#include "adapterlab/ngram.hpp"
#include "adapterlab/quality.hpp"

namespace adapterlab {

/// The stock hyperparameter grids swept by default, identity included:
/// ancestral; temp over {0.5,0.7,0.9,1.0,1.2,1.5,2.0}; topk over
/// {1,2,5,10,30,50,100}; toppi over {0.5,0.7,0.8,0.9,0.95,0.99,1.0};
/// typical over {0.2,0.5,0.7,0.9,0.95}; eta over {1e-4,6e-4,2e-3,4e-3,9e-2}.
std::vector<AdapterSpec> default_adapter_grid();

struct SweepConfig {
    // Data and models.
    std::string train_corpus;
    std::string eval_corpus;
    std::string output = "report";
    std::string tokenizer = "word";  // "word" | "byte"
    std::size_t vocab_cap = 512;
    std::size_t gen_order = 2;
    std::size_t ref_order = 4;
    Smoothing gen_smoothing = Smoothing::backoff();
    Smoothing ref_smoothing = Smoothing::backoff();
    /// Leading share of the training corpus the generation model sees; the
    /// reference model is trained on all of it.
    double gen_train_fraction = 0.2;
    std::size_t eval_max_seqs = 200;

    // Protocol.
    double smoothing_eps = 1e-6;
    GenConfig gen;
    FeatureSpec feature;
    std::vector<AdapterSpec> adapter_grid = default_adapter_grid();
    bool quality = true;
    std::size_t parallelism = 1;

    void validate() const;
};

SweepConfig load_sweep_config(const std::string& path);
void save_sweep_config(const SweepConfig& cfg, std::ostream& out);
/// Applies one "key = value" assignment (the config file line format).
void apply_config_entry(SweepConfig& cfg, const std::string& key, const std::string& value);

/// One aggregated measure cell of the sweep.
struct ReportRow {
    std::string adapter;       // adapter kind name
    double param = 0.0;        // hyperparameter (0 for ancestral)
    int strength = 0;          // per-kind rank, 0 = weakest
    std::string reference;     // "empirical" | "model" | "none"
    std::string measure;
    std::string orientation;   // "forward" | "reverse" | "symmetric"
    double mean = 0.0;         // pooled per-token mean
    double seq_mean = 0.0;     // mean of per-sequence means (JSON only)
    double ci = 0.0;           // 1.96 * stderr over per-sequence means
    std::uint64_t n = 0;       // token count
    bool failed = false;
    std::string fail_reason;
};

struct QualityRow {
    std::string adapter;
    double param = 0.0;
    int strength = 0;
    double quality = 0.0;  // mean over seeds
    std::size_t n_samples = 0;
    std::size_t n_prompt_skipped = 0;
    bool failed = false;
    std::string fail_reason;
};

struct CorrRow {
    std::string measure;
    std::string orientation;
    std::string reference;
    double rho = 0.0;
    double p_value = 1.0;  // two-sided, seeded permutation test
    std::size_t n = 0;
};

struct SweepReport {
    std::vector<ReportRow> rows;
    std::vector<QualityRow> quality;
    std::vector<CorrRow> correlations;

    std::string to_json() const;
    static SweepReport from_json(const std::string& text);
    void write_csv(std::ostream& out) const;
};

/// The fixed list of token-level measure cells evaluated per adapter.
struct TokenMeasureKey {
    MeasureSpec::Kind kind;
    MeasureSpec::Orientation orientation;
    std::string reference;  // "empirical" | "model" | "none"
    bool smoothed;          // epsilon-smoothing applied to the second argument
};
const std::vector<TokenMeasureKey>& token_measure_keys(bool with_model_reference);

struct SeriesStats {
    double token_sum = 0.0;
    std::uint64_t token_n = 0;
    std::vector<double> per_seq_mean;
};

/// Per-(y,t) token measures for one adapter cell, reduced to per-sequence
/// means and pooled sums. Positions run over every next-token prediction of
/// every evaluation sequence, terminal EOS included. Parallel over
/// sequences; the reduction order is fixed, so results do not depend on the
/// degree of parallelism.
std::vector<SeriesStats> eval_token_measures(
    const NGramModel& gen_model, const AdapterSpec& adapter, const NGramModel* ref_model,
    const std::vector<std::vector<TokenId>>& eval_seqs, double eps,
    std::size_t parallelism);

struct SweepInputs {
    const NGramModel* gen_model = nullptr;
    const NGramModel* ref_model = nullptr;  // optional
    std::vector<std::vector<TokenId>> eval_seqs;
};

/// Runs the full grid: token measures against both references, generation
/// plus quality score per cell, strength ranks, and the correlation table.
/// Per-cell failures are recorded in the report and the run continues.
SweepReport run_sweep(const SweepConfig& cfg, const SweepInputs& inputs);

/// Spearman correlation of each measure column against the quality column,
/// pooled across adapter cells, with a seeded 10^4-permutation p-value.
/// Throws std::invalid_argument with fewer than 3 usable cells and
/// std::domain_error on constant inputs.
std::vector<CorrRow> correlate(const SweepReport& report,
                               std::size_t n_permutations = 10000,
                               std::uint64_t seed = 7);

/// Writes `<base>.csv` and `<base>.json`; byte-stable given equal reports.
void emit_report(const SweepReport& report, const std::string& base_path);

/// Utility shared by the CLI and tests: reads a corpus file (one sequence
/// per line) and tokenizes every non-empty line.
std::vector<std::vector<TokenId>> tokenize_corpus_lines(
    const std::vector<std::string>& lines, const Tokenizer& tokenizer);
std::vector<std::string> read_lines(const std::string& path);

}  // namespace adapterlab
