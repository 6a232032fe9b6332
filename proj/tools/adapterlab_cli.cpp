#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "adapterlab/adapters.hpp"
#include "adapterlab/generator.hpp"
#include "adapterlab/harness.hpp"
#include "adapterlab/measures.hpp"
#include "adapterlab/ngram.hpp"
#include "adapterlab/trace.hpp"

namespace al = adapterlab;

namespace {

al::Tokenizer make_tokenizer(const std::string& mode, const std::vector<std::string>& lines,
                             std::size_t vocab_cap) {
    if (mode == "byte") return al::Tokenizer::byte_mode();
    if (mode == "word") return al::Tokenizer::word_mode(lines, vocab_cap);
    throw std::invalid_argument("tokenizer must be 'word' or 'byte'");
}

int cmd_train_lm(const std::string& corpus_path, std::size_t order,
                 const std::string& smoothing, const std::string& mode,
                 std::size_t vocab_cap, const std::string& out_path) {
    const auto lines = al::read_lines(corpus_path);
    const auto tokenizer = make_tokenizer(mode, lines, vocab_cap);
    const auto corpus = al::tokenize_corpus_lines(lines, tokenizer);
    const auto model = al::NGramModel::train(corpus, order, al::Smoothing::parse(smoothing),
                                             tokenizer.vocab());
    model.save_file(out_path);
    std::cout << "trained order-" << order << " model over " << model.vocab().size()
              << " tokens from " << corpus.size() << " sequences -> " << out_path << "\n";
    return 0;
}

int cmd_generate(const std::string& model_path, const std::string& chain_text,
                 const std::string& prompts_path, const std::string& mode,
                 std::size_t n, std::uint64_t seed, std::size_t prompt_len,
                 std::size_t max_len, const std::string& out_path,
                 const std::string& trace_path) {
    const auto model = al::NGramModel::load_file(model_path);
    const auto tokenizer = al::Tokenizer::from_vocab(
        mode == "byte" ? al::Tokenizer::Mode::Byte : al::Tokenizer::Mode::Word,
        model.vocab());

    al::GenConfig cfg;
    cfg.prompt_len = prompt_len;
    cfg.max_len = max_len;
    cfg.n_samples = n;
    cfg.seeds = {seed};
    cfg.adapter_chain = al::parse_adapter_chain(chain_text);

    std::vector<std::vector<al::TokenId>> prompts;
    std::size_t skipped = 0;
    for (const auto& line : al::read_lines(prompts_path)) {
        auto toks = tokenizer.tokenize(line);
        if (toks.size() >= cfg.prompt_len) {
            toks.resize(cfg.prompt_len);
            prompts.push_back(std::move(toks));
        } else {
            ++skipped;
        }
    }
    if (prompts.empty()) {
        std::cerr << "error: no prompt line has at least " << cfg.prompt_len << " tokens\n";
        return 1;
    }

    const al::StepModel step = [&model](std::span<const al::TokenId> ctx) {
        return model.cond_dist(ctx);
    };

    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
        std::cerr << "error: cannot write " << out_path << "\n";
        return 1;
    }
    std::ofstream trace_out;
    std::optional<al::TraceWriter> trace;
    if (!trace_path.empty()) {
        trace_out.open(trace_path, std::ios::binary);
        al::TraceHeader header;
        header.vocab_hash = model.vocab().hash();
        header.vocab_size = static_cast<std::uint32_t>(model.vocab().size());
        header.eos_id = model.vocab().eos_id;
        header.producer = "adapterlab-generate";
        trace.emplace(trace_out, header);
    }

    for (std::size_t i = 0; i < cfg.n_samples; ++i) {
        const auto& prompt = prompts[i % prompts.size()];
        const auto y = al::generate(step, cfg, prompt, model.vocab().eos_id, seed, i);
        out << tokenizer.detokenize(y) << "\n";
        if (trace) {
            // Self-trace for audit: the adapted distribution at every
            // generated position.
            for (std::size_t t = prompt.size(); t < y.size(); ++t) {
                const auto p = al::compose(cfg.adapter_chain,
                                           model.cond_dist(std::span(y.data(), t)));
                trace->write(al::sparsify(p, "s" + std::to_string(i),
                                          static_cast<std::uint32_t>(t - prompt.size() + 1),
                                          y[t]));
            }
        }
    }
    std::cout << "wrote " << cfg.n_samples << " samples (" << skipped
              << " prompt lines skipped as too short)\n";
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& ref_model_path,
             const std::string& eval_path, const std::string& mode,
             const std::string& adapter_text, double eps, std::size_t parallelism) {
    const auto model = al::NGramModel::load_file(model_path);
    std::optional<al::NGramModel> ref;
    if (!ref_model_path.empty()) ref = al::NGramModel::load_file(ref_model_path);
    const auto tokenizer = al::Tokenizer::from_vocab(
        mode == "byte" ? al::Tokenizer::Mode::Byte : al::Tokenizer::Mode::Word,
        model.vocab());
    const auto eval_seqs = al::tokenize_corpus_lines(al::read_lines(eval_path), tokenizer);
    const auto adapter = al::AdapterSpec::parse(adapter_text);

    const auto stats = al::eval_token_measures(model, adapter, ref ? &*ref : nullptr,
                                               eval_seqs, eps, parallelism);
    const auto& keys = al::token_measure_keys(ref.has_value());
    std::printf("%-14s %-9s %-10s %14s %12s %10s\n", "measure", "orient", "reference",
                "mean", "ci95", "n");
    for (std::size_t k = 0; k < keys.size(); ++k) {
        const double mean = stats[k].token_n == 0
                                ? 0.0
                                : stats[k].token_sum / static_cast<double>(stats[k].token_n);
        double ci = 0.0;
        if (stats[k].per_seq_mean.size() > 1) {
            double m = 0.0;
            for (double v : stats[k].per_seq_mean) m += v;
            m /= static_cast<double>(stats[k].per_seq_mean.size());
            double ss = 0.0;
            for (double v : stats[k].per_seq_mean) ss += (v - m) * (v - m);
            ci = 1.96 * std::sqrt(ss / static_cast<double>(stats[k].per_seq_mean.size() - 1)) /
                 std::sqrt(static_cast<double>(stats[k].per_seq_mean.size()));
        }
        std::printf("%-14s %-9s %-10s %14.6f %12.6f %10llu\n",
                    al::to_string(keys[k].kind).c_str(),
                    al::to_string(keys[k].orientation).c_str(), keys[k].reference.c_str(),
                    mean, ci, static_cast<unsigned long long>(stats[k].token_n));
    }
    return 0;
}

int cmd_sweep(const std::string& config_path, std::size_t parallelism_override) {
    al::SweepConfig cfg = al::load_sweep_config(config_path);
    if (parallelism_override > 0) cfg.parallelism = parallelism_override;
    cfg.validate();
    if (cfg.train_corpus.empty() || cfg.eval_corpus.empty()) {
        std::cerr << "error: config must set train_corpus and eval_corpus\n";
        return 1;
    }

    const auto train_lines = al::read_lines(cfg.train_corpus);
    const auto tokenizer = make_tokenizer(cfg.tokenizer, train_lines, cfg.vocab_cap);
    const auto train_seqs = al::tokenize_corpus_lines(train_lines, tokenizer);

    std::vector<std::vector<al::TokenId>> gen_slice(
        train_seqs.begin(),
        train_seqs.begin() + std::max<std::size_t>(
                                 1, static_cast<std::size_t>(
                                        cfg.gen_train_fraction *
                                        static_cast<double>(train_seqs.size()))));
    const auto gen_model = al::NGramModel::train(gen_slice, cfg.gen_order,
                                                 cfg.gen_smoothing, tokenizer.vocab());
    const auto ref_model = al::NGramModel::train(train_seqs, cfg.ref_order,
                                                 cfg.ref_smoothing, tokenizer.vocab());

    al::SweepInputs inputs;
    inputs.gen_model = &gen_model;
    inputs.ref_model = &ref_model;
    inputs.eval_seqs = al::tokenize_corpus_lines(al::read_lines(cfg.eval_corpus), tokenizer);
    if (inputs.eval_seqs.size() > cfg.eval_max_seqs) inputs.eval_seqs.resize(cfg.eval_max_seqs);

    const auto report = al::run_sweep(cfg, inputs);
    al::emit_report(report, cfg.output);
    std::size_t failures = 0;
    for (const auto& r : report.rows) failures += r.failed;
    for (const auto& q : report.quality) failures += q.failed;
    std::cout << "sweep complete: " << report.rows.size() << " measure rows, "
              << report.quality.size() << " quality cells, " << failures
              << " failures -> " << cfg.output << ".{csv,json}\n";
    return failures == 0 ? 0 : 1;
}

int cmd_correlate(const std::string& report_path) {
    std::ifstream in(report_path);
    if (!in) {
        std::cerr << "error: cannot open " << report_path << "\n";
        return 1;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    const auto report = al::SweepReport::from_json(buf.str());
    const auto table = al::correlate(report);
    std::printf("%-14s %-9s %-10s %8s %10s %6s\n", "measure", "orient", "reference",
                "rho", "p", "n");
    for (const auto& c : table) {
        std::printf("%-14s %-9s %-10s %8.4f %10.5f %6zu\n", c.measure.c_str(),
                    c.orientation.c_str(), c.reference.c_str(), c.rho, c.p_value, c.n);
    }
    return 0;
}

int cmd_trace_check(const std::string& trace_path, const std::string& model_path) {
    std::ifstream in(trace_path, std::ios::binary);
    if (!in) {
        std::cerr << "error: cannot open " << trace_path << "\n";
        return 1;
    }
    try {
        al::TraceReader reader(in);
        if (!model_path.empty()) {
            const auto model = al::NGramModel::load_file(model_path);
            if (model.vocab().hash() != reader.header().vocab_hash) {
                std::cerr << "error: trace vocab_hash does not match the model vocabulary\n";
                return 1;
            }
        }
        std::string seq_id;
        std::vector<al::TraceRecord> records;
        std::size_t n_seqs = 0, n_records = 0;
        while (reader.next_sequence(seq_id, records)) {
            ++n_seqs;
            n_records += records.size();
        }
        std::cout << "ok: " << n_seqs << " sequences, " << n_records << " records\n";
        return 0;
    } catch (const al::TraceError& e) {
        std::cerr << "invalid trace: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sampling-adapter evaluation toolkit"};
    app.require_subcommand(1);

    // train-lm
    std::string corpus, smoothing = "backoff:0.4", mode = "word", out_path = "model.ngram";
    std::size_t order = 2, vocab_cap = 512;
    auto* train = app.add_subcommand("train-lm", "train an n-gram model from a corpus");
    train->add_option("--corpus", corpus, "corpus file, one sequence per line")->required();
    train->add_option("--order", order, "n-gram order");
    train->add_option("--smoothing", smoothing, "addk:K or backoff:LAMBDA");
    train->add_option("--mode", mode, "tokenizer: word or byte");
    train->add_option("--vocab-cap", vocab_cap, "word-mode vocabulary cap");
    train->add_option("--out", out_path, "output model file");

    // generate
    std::string model_path, chain = "ancestral", prompts_path, samples_out = "samples.txt";
    std::string trace_out;
    std::size_t n_samples = 1000, prompt_len = 35, max_len = 512;
    std::uint64_t seed = 1;
    auto* gen = app.add_subcommand("generate", "sample continuations through an adapter chain");
    gen->add_option("--model", model_path, "model file from train-lm")->required();
    gen->add_option("--adapters", chain, "comma-separated adapter chain");
    gen->add_option("--prompts", prompts_path, "prompt corpus")->required();
    gen->add_option("--mode", mode, "tokenizer: word or byte");
    gen->add_option("--n", n_samples, "number of samples");
    gen->add_option("--seed", seed, "rng seed");
    gen->add_option("--prompt-len", prompt_len, "prompt length in tokens");
    gen->add_option("--max-len", max_len, "maximum sequence length");
    gen->add_option("--out", samples_out, "output samples file");
    gen->add_option("--trace", trace_out, "optional self-trace file");

    // eval
    std::string ref_model_path, eval_path, adapter_text = "ancestral";
    double eps = 1e-6;
    std::size_t parallelism = 1;
    auto* eval = app.add_subcommand("eval", "token-level measures for one adapter cell");
    eval->add_option("--model", model_path, "generation model")->required();
    eval->add_option("--ref-model", ref_model_path, "optional reference model");
    eval->add_option("--eval", eval_path, "evaluation corpus")->required();
    eval->add_option("--mode", mode, "tokenizer: word or byte");
    eval->add_option("--adapter", adapter_text, "adapter spec");
    eval->add_option("--eps", eps, "smoothing epsilon");
    eval->add_option("--parallelism", parallelism, "worker threads");

    // sweep
    std::string config_path;
    std::size_t parallelism_override = 0;
    auto* sweep = app.add_subcommand("sweep", "full adapter-hyperparameter grid sweep");
    sweep->add_option("--config", config_path, "key = value config file")->required();
    sweep->add_option("--parallelism", parallelism_override, "override config parallelism");

    // correlate
    std::string report_path;
    auto* corr = app.add_subcommand("correlate", "rank-correlate measures with quality");
    corr->add_option("--report", report_path, "report .json from sweep")->required();

    // trace-check
    std::string trace_path, trace_model;
    auto* tc = app.add_subcommand("trace-check", "validate a distribution trace file");
    tc->add_option("--trace", trace_path, "trace file")->required();
    tc->add_option("--model", trace_model, "optional model to check the vocab hash against");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train_lm(corpus, order, smoothing, mode, vocab_cap, out_path);
        if (gen->parsed()) {
            return cmd_generate(model_path, chain, prompts_path, mode, n_samples, seed,
                                prompt_len, max_len, samples_out, trace_out);
        }
        if (eval->parsed()) {
            return cmd_eval(model_path, ref_model_path, eval_path, mode, adapter_text, eps,
                            parallelism);
        }
        if (sweep->parsed()) return cmd_sweep(config_path, parallelism_override);
        if (corr->parsed()) return cmd_correlate(report_path);
        if (tc->parsed()) return cmd_trace_check(trace_path, trace_model);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
