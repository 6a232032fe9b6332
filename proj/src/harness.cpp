#include "adapterlab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace adapterlab {

namespace {

using nlohmann::json;

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// JSON has no inf/nan literals; non-finite values travel as strings.
json json_double(double v) {
    if (std::isfinite(v)) return v;
    return fmt_double(v);
}

double parse_json_double(const json& j) {
    if (j.is_string()) return std::strtod(j.get<std::string>().c_str(), nullptr);
    return j.get<double>();
}

/// Runs fn(i) for i in [0, n) on up to `degree` threads. Each index owns its
/// output slot, so the result is independent of the thread count.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t degree, Fn&& fn) {
    degree = std::max<std::size_t>(1, std::min(degree, n));
    if (degree == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(degree);
    for (std::size_t w = 0; w < degree; ++w) {
        workers.emplace_back([&fn, w, n, degree] {
            for (std::size_t i = w; i < n; i += degree) fn(i);
        });
    }
    for (auto& t : workers) t.join();
}

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream iss(s);
    std::vector<std::string> out;
    std::string w;
    while (iss >> w) out.push_back(w);
    return out;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

std::vector<AdapterSpec> default_adapter_grid() {
    std::vector<AdapterSpec> grid;
    grid.push_back(AdapterSpec::ancestral());
    for (double t : {0.5, 0.7, 0.9, 1.0, 1.2, 1.5, 2.0}) grid.push_back(AdapterSpec::temperature(t));
    for (std::size_t k : {1, 2, 5, 10, 30, 50, 100}) grid.push_back(AdapterSpec::top_k(k));
    for (double pi : {0.5, 0.7, 0.8, 0.9, 0.95, 0.99, 1.0}) grid.push_back(AdapterSpec::top_pi(pi));
    for (double tau : {0.2, 0.5, 0.7, 0.9, 0.95}) grid.push_back(AdapterSpec::typical(tau));
    for (double e : {1e-4, 6e-4, 2e-3, 4e-3, 9e-2}) grid.push_back(AdapterSpec::eta(e));
    return grid;
}

void SweepConfig::validate() const {
    if (adapter_grid.empty()) throw std::invalid_argument("adapter grid is empty");
    if (!(smoothing_eps > 0.0)) throw std::invalid_argument("smoothing_eps must be > 0");
    if (!(gen_train_fraction > 0.0 && gen_train_fraction <= 1.0)) {
        throw std::invalid_argument("gen_train_fraction must be in (0,1]");
    }
    if (tokenizer != "word" && tokenizer != "byte") {
        throw std::invalid_argument("tokenizer must be 'word' or 'byte'");
    }
    if (parallelism < 1) throw std::invalid_argument("parallelism must be >= 1");
    gen.validate();
    feature.validate();
}

void apply_config_entry(SweepConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "train_corpus") cfg.train_corpus = value;
    else if (key == "eval_corpus") cfg.eval_corpus = value;
    else if (key == "output") cfg.output = value;
    else if (key == "tokenizer") cfg.tokenizer = value;
    else if (key == "vocab_cap") cfg.vocab_cap = std::stoull(value);
    else if (key == "gen_order") cfg.gen_order = std::stoull(value);
    else if (key == "ref_order") cfg.ref_order = std::stoull(value);
    else if (key == "gen_smoothing") cfg.gen_smoothing = Smoothing::parse(value);
    else if (key == "ref_smoothing") cfg.ref_smoothing = Smoothing::parse(value);
    else if (key == "gen_train_fraction") cfg.gen_train_fraction = std::stod(value);
    else if (key == "eval_max_seqs") cfg.eval_max_seqs = std::stoull(value);
    else if (key == "smoothing_eps") cfg.smoothing_eps = std::stod(value);
    else if (key == "prompt_len") cfg.gen.prompt_len = std::stoull(value);
    else if (key == "max_len") cfg.gen.max_len = std::stoull(value);
    else if (key == "n_samples") cfg.gen.n_samples = std::stoull(value);
    else if (key == "seeds") {
        cfg.gen.seeds.clear();
        for (const auto& s : split_ws(value)) cfg.gen.seeds.push_back(std::stoull(s));
    } else if (key == "adapters") {
        cfg.adapter_grid.clear();
        for (const auto& s : split_ws(value)) cfg.adapter_grid.push_back(AdapterSpec::parse(s));
    } else if (key == "quality") cfg.quality = (value == "true" || value == "1");
    else if (key == "parallelism") cfg.parallelism = std::stoull(value);
    else if (key == "ngram_order") cfg.feature.ngram_order = std::stoull(value);
    else if (key == "hash_dim") cfg.feature.hash_dim = std::stoull(value);
    else if (key == "n_clusters") cfg.feature.n_clusters = std::stoull(value);
    else if (key == "scaling_c") cfg.feature.scaling_c = std::stod(value);
    else if (key == "grid_size") cfg.feature.grid_size = std::stoull(value);
    else if (key == "kmeans_seed") cfg.feature.kmeans_seed = std::stoull(value);
    else throw std::invalid_argument("unknown config key '" + key + "'");
}

SweepConfig load_sweep_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    SweepConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("config line " + std::to_string(line_no) +
                                     ": expected 'key = value'");
        }
        apply_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

void save_sweep_config(const SweepConfig& cfg, std::ostream& out) {
    out << "train_corpus = " << cfg.train_corpus << "\n";
    out << "eval_corpus = " << cfg.eval_corpus << "\n";
    out << "output = " << cfg.output << "\n";
    out << "tokenizer = " << cfg.tokenizer << "\n";
    out << "vocab_cap = " << cfg.vocab_cap << "\n";
    out << "gen_order = " << cfg.gen_order << "\n";
    out << "ref_order = " << cfg.ref_order << "\n";
    out << "gen_smoothing = " << cfg.gen_smoothing.to_string() << "\n";
    out << "ref_smoothing = " << cfg.ref_smoothing.to_string() << "\n";
    out << "gen_train_fraction = " << fmt_double(cfg.gen_train_fraction) << "\n";
    out << "eval_max_seqs = " << cfg.eval_max_seqs << "\n";
    out << "smoothing_eps = " << fmt_double(cfg.smoothing_eps) << "\n";
    out << "prompt_len = " << cfg.gen.prompt_len << "\n";
    out << "max_len = " << cfg.gen.max_len << "\n";
    out << "n_samples = " << cfg.gen.n_samples << "\n";
    out << "seeds =";
    for (auto s : cfg.gen.seeds) out << " " << s;
    out << "\n";
    out << "adapters =";
    for (const auto& a : cfg.adapter_grid) out << " " << a.to_string();
    out << "\n";
    out << "quality = " << (cfg.quality ? "true" : "false") << "\n";
    out << "parallelism = " << cfg.parallelism << "\n";
    out << "ngram_order = " << cfg.feature.ngram_order << "\n";
    out << "hash_dim = " << cfg.feature.hash_dim << "\n";
    out << "n_clusters = " << cfg.feature.n_clusters << "\n";
    out << "scaling_c = " << fmt_double(cfg.feature.scaling_c) << "\n";
    out << "grid_size = " << cfg.feature.grid_size << "\n";
    out << "kmeans_seed = " << cfg.feature.kmeans_seed << "\n";
}

// ---------------------------------------------------------------------------
// Token-level measures

const std::vector<TokenMeasureKey>& token_measure_keys(bool with_model_reference) {
    using K = MeasureSpec::Kind;
    using O = MeasureSpec::Orientation;
    static const std::vector<TokenMeasureKey> empirical_only = {
        {K::CrossEntropy, O::Forward, "empirical", true},
        {K::CrossEntropy, O::Reverse, "empirical", true},
        {K::Kl, O::Forward, "empirical", true},
        {K::Kl, O::Reverse, "empirical", true},
        {K::Tvd, O::Symmetric, "empirical", false},
        {K::Js, O::Symmetric, "empirical", false},
        {K::Coverage, O::Symmetric, "empirical", false},
        {K::Entropy, O::Symmetric, "none", false},
    };
    static const std::vector<TokenMeasureKey> with_model = [] {
        std::vector<TokenMeasureKey> keys = empirical_only;
        // Reverse measures against the full-support reference model need no
        // smoothing; forward ones do (the adapted side may be truncated).
        keys.insert(keys.end(), {
            {K::CrossEntropy, O::Forward, "model", true},
            {K::CrossEntropy, O::Reverse, "model", false},
            {K::Kl, O::Forward, "model", true},
            {K::Kl, O::Reverse, "model", false},
            {K::Tvd, O::Symmetric, "model", false},
            {K::Js, O::Symmetric, "model", false},
        });
        return keys;
    }();
    return with_model_reference ? with_model : empirical_only;
}

namespace {

// Values for every key of token_measure_keys at one evaluation position.
void measure_position(const CondDist& adapted, const CondDist& smoothed_adapted,
                      TokenId observed, const CondDist* ref_dist, double eps,
                      std::span<double> out) {
    const std::size_t n = adapted.size();
    const double denom = 1.0 + static_cast<double>(n) * eps;
    const double p_obs = adapted.prob(observed);
    const double h_adapted = entropy(adapted);

    // Against the one-hot empirical reference, the smoothed cross-entropies
    // collapse to closed forms.
    const double fwd_ce = -smoothed_adapted.logp(observed);
    const double rev_ce = -(p_obs * std::log((1.0 + eps) / denom) +
                            (1.0 - p_obs) * std::log(eps / denom));
    const CondDist emp = one_hot(n, observed);
    std::size_t i = 0;
    out[i++] = fwd_ce;                      // cross_entropy forward
    out[i++] = rev_ce;                      // cross_entropy reverse
    out[i++] = fwd_ce;                      // kl forward (one-hot entropy is 0)
    out[i++] = rev_ce - h_adapted;          // kl reverse
    out[i++] = tvd(adapted, emp);
    out[i++] = js(adapted, emp);
    out[i++] = static_cast<double>(coverage(adapted, observed));
    out[i++] = h_adapted;

    if (ref_dist != nullptr) {
        const double h_ref = entropy(*ref_dist);
        const double fwd_ce_m = cross_entropy(*ref_dist, smoothed_adapted);
        const double rev_ce_m = cross_entropy(adapted, *ref_dist);
        out[i++] = fwd_ce_m;
        out[i++] = rev_ce_m;
        out[i++] = fwd_ce_m - h_ref;
        out[i++] = rev_ce_m - h_adapted;
        out[i++] = tvd(adapted, *ref_dist);
        out[i++] = js(adapted, *ref_dist);
    }
}

}  // namespace

std::vector<SeriesStats> eval_token_measures(
    const NGramModel& gen_model, const AdapterSpec& adapter, const NGramModel* ref_model,
    const std::vector<std::vector<TokenId>>& eval_seqs, double eps,
    std::size_t parallelism) {
    if (ref_model != nullptr &&
        ref_model->vocab().hash() != gen_model.vocab().hash()) {
        throw std::invalid_argument("generation and reference models use different vocabularies");
    }
    if (!(eps > 0.0)) throw std::invalid_argument("smoothing_eps must be > 0");
    adapter.validate(gen_model.vocab().size());

    const auto& keys = token_measure_keys(ref_model != nullptr);
    const std::size_t n_keys = keys.size();
    const TokenId eos = gen_model.vocab().eos_id;

    struct SeqResult {
        std::vector<double> sums;
        std::uint64_t n = 0;
    };
    std::vector<SeqResult> per_seq(eval_seqs.size());

    parallel_for(eval_seqs.size(), parallelism, [&](std::size_t s) {
        const auto& y = eval_seqs[s];
        SeqResult res;
        res.sums.assign(n_keys, 0.0);
        std::vector<double> vals(n_keys);
        for (std::size_t t = 0; t <= y.size(); ++t) {
            const std::span<const TokenId> ctx(y.data(), t);
            const TokenId observed = t < y.size() ? y[t] : eos;
            const CondDist p = gen_model.cond_dist(ctx);
            const CondDist adapted = apply(adapter, p);
            const CondDist smoothed = epsilon_smooth(adapted, eps);
            CondDist ref = one_hot(1, 0);
            if (ref_model != nullptr) ref = ref_model->cond_dist(ctx);
            measure_position(adapted, smoothed, observed,
                             ref_model != nullptr ? &ref : nullptr, eps,
                             std::span(vals));
            for (std::size_t k = 0; k < n_keys; ++k) res.sums[k] += vals[k];
            ++res.n;
        }
        per_seq[s] = std::move(res);
    });

    std::vector<SeriesStats> out(n_keys);
    for (std::size_t s = 0; s < eval_seqs.size(); ++s) {
        const auto& res = per_seq[s];
        if (res.n == 0) continue;
        for (std::size_t k = 0; k < n_keys; ++k) {
            out[k].token_sum += res.sums[k];
            out[k].token_n += res.n;
            out[k].per_seq_mean.push_back(res.sums[k] / static_cast<double>(res.n));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sweep

namespace {

double mean_of(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double ci95_of(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean_of(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    const double stderr_ = std::sqrt(ss / static_cast<double>(xs.size() - 1)) /
                           std::sqrt(static_cast<double>(xs.size()));
    return 1.96 * stderr_;
}

/// Dense per-kind strength ranks: 0 = weakest shift.
void assign_strength_ranks(std::vector<ReportRow>& rows, std::vector<QualityRow>& quality,
                           const std::vector<AdapterSpec>& grid) {
    std::map<std::string, std::vector<double>> keys_by_kind;
    for (const auto& spec : grid) {
        keys_by_kind[to_string(spec.kind)].push_back(spec.strength_key());
    }
    for (auto& [kind, keys] : keys_by_kind) {
        std::sort(keys.begin(), keys.end());
        keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    }
    auto rank_of = [&](const std::string& kind, double param) {
        AdapterSpec probe = AdapterSpec::parse(
            kind == "ancestral" ? kind : kind + ":" + fmt_double(param));
        const auto& keys = keys_by_kind.at(kind);
        auto it = std::lower_bound(keys.begin(), keys.end(), probe.strength_key());
        return static_cast<int>(it - keys.begin());
    };
    for (auto& r : rows) r.strength = rank_of(r.adapter, r.param);
    for (auto& q : quality) q.strength = rank_of(q.adapter, q.param);
}

}  // namespace

SweepReport run_sweep(const SweepConfig& cfg, const SweepInputs& inputs) {
    cfg.validate();
    if (inputs.gen_model == nullptr) throw std::invalid_argument("sweep needs a generation model");
    const NGramModel& gen_model = *inputs.gen_model;
    const TokenId eos = gen_model.vocab().eos_id;
    const auto& keys = token_measure_keys(inputs.ref_model != nullptr);

    // Prompts for generation: the leading prompt_len tokens of every long
    // enough evaluation sequence; shorter ones are skipped and counted.
    std::vector<std::span<const TokenId>> prompts;
    std::size_t n_skipped = 0;
    for (const auto& y : inputs.eval_seqs) {
        if (y.size() >= cfg.gen.prompt_len) {
            prompts.emplace_back(y.data(), cfg.gen.prompt_len);
        } else {
            ++n_skipped;
        }
    }

    // Reference side of the quality score: evaluation sequences capped at
    // the generation length.
    std::vector<std::vector<TokenId>> quality_ref;
    if (cfg.quality) {
        for (const auto& y : inputs.eval_seqs) {
            quality_ref.emplace_back(y.begin(),
                                     y.begin() + std::min(y.size(), cfg.gen.max_len));
        }
    }

    const StepModel step = [&gen_model](std::span<const TokenId> ctx) {
        return gen_model.cond_dist(ctx);
    };

    SweepReport report;
    for (const auto& spec : cfg.adapter_grid) {
        const std::string kind_name = to_string(spec.kind);
        try {
            const auto stats = eval_token_measures(gen_model, spec, inputs.ref_model,
                                                   inputs.eval_seqs, cfg.smoothing_eps,
                                                   cfg.parallelism);
            for (std::size_t k = 0; k < keys.size(); ++k) {
                ReportRow row;
                row.adapter = kind_name;
                row.param = spec.param;
                row.reference = keys[k].reference;
                row.measure = to_string(keys[k].kind);
                row.orientation = to_string(keys[k].orientation);
                row.mean = stats[k].token_n == 0
                               ? 0.0
                               : stats[k].token_sum / static_cast<double>(stats[k].token_n);
                row.seq_mean = mean_of(stats[k].per_seq_mean);
                row.ci = ci95_of(stats[k].per_seq_mean);
                row.n = stats[k].token_n;
                report.rows.push_back(std::move(row));
            }
        } catch (const std::exception& e) {
            ReportRow row;
            row.adapter = kind_name;
            row.param = spec.param;
            row.failed = true;
            row.fail_reason = e.what();
            report.rows.push_back(std::move(row));
        }

        if (!cfg.quality) continue;
        QualityRow qrow;
        qrow.adapter = kind_name;
        qrow.param = spec.param;
        qrow.n_samples = cfg.gen.n_samples;
        qrow.n_prompt_skipped = n_skipped;
        try {
            if (prompts.empty()) throw std::runtime_error("no evaluation sequence is long enough to prompt from");
            GenConfig gen_cfg = cfg.gen;
            gen_cfg.adapter_chain = {spec};
            double quality_sum = 0.0;
            for (std::size_t si = 0; si < cfg.gen.seeds.size(); ++si) {
                const std::uint64_t seed = cfg.gen.seeds[si];
                std::vector<std::vector<TokenId>> samples(cfg.gen.n_samples);
                parallel_for(cfg.gen.n_samples, cfg.parallelism, [&](std::size_t i) {
                    samples[i] = generate(step, gen_cfg, prompts[i % prompts.size()], eos,
                                          seed, i);
                });
                quality_sum += quality_score(samples, quality_ref, cfg.feature).value;
            }
            qrow.quality = quality_sum / static_cast<double>(cfg.gen.seeds.size());
        } catch (const std::exception& e) {
            qrow.failed = true;
            qrow.fail_reason = e.what();
        }
        report.quality.push_back(std::move(qrow));
    }

    assign_strength_ranks(report.rows, report.quality, cfg.adapter_grid);

    if (cfg.quality) {
        try {
            report.correlations = correlate(report);
        } catch (const std::exception&) {
            // Too few usable cells or degenerate quality column; the report
            // is still valid without the correlation table.
        }
    }
    return report;
}

std::vector<CorrRow> correlate(const SweepReport& report, std::size_t n_permutations,
                               std::uint64_t seed) {
    // Join measure cells with quality scores on (adapter, param).
    std::map<std::pair<std::string, double>, double> quality_by_cell;
    for (const auto& q : report.quality) {
        if (!q.failed) quality_by_cell[{q.adapter, q.param}] = q.quality;
    }

    struct Series {
        std::vector<double> xs, ys;
    };
    std::map<std::tuple<std::string, std::string, std::string>, Series> series;
    for (const auto& r : report.rows) {
        if (r.failed || std::isnan(r.mean)) continue;
        auto it = quality_by_cell.find({r.adapter, r.param});
        if (it == quality_by_cell.end()) continue;
        auto& s = series[{r.measure, r.orientation, r.reference}];
        s.xs.push_back(r.mean);
        s.ys.push_back(it->second);
    }

    std::vector<CorrRow> out;
    for (const auto& [key, s] : series) {
        if (s.xs.size() < 3) continue;
        CorrRow row;
        row.measure = std::get<0>(key);
        row.orientation = std::get<1>(key);
        row.reference = std::get<2>(key);
        row.n = s.xs.size();
        row.rho = spearman(s.xs, s.ys);

        // Two-sided permutation test on the quality column.
        SplitMix64 rng = SplitMix64::for_stream(seed, 0x636f7272ULL);  // "corr"
        std::vector<double> perm = s.ys;
        std::size_t hits = 0;
        for (std::size_t it_ = 0; it_ < n_permutations; ++it_) {
            for (std::size_t i = perm.size() - 1; i > 0; --i) {
                std::swap(perm[i], perm[rng.next() % (i + 1)]);
            }
            if (std::abs(spearman(s.xs, perm)) >= std::abs(row.rho) - 1e-12) ++hits;
        }
        row.p_value = static_cast<double>(hits + 1) / static_cast<double>(n_permutations + 1);
        out.push_back(std::move(row));
    }
    if (out.empty()) {
        throw std::invalid_argument("correlate needs at least 3 cells with measures and quality");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Report serialization

std::string SweepReport::to_json() const {
    json j;
    j["rows"] = json::array();
    for (const auto& r : rows) {
        j["rows"].push_back({{"adapter", r.adapter},
                             {"param", json_double(r.param)},
                             {"strength", r.strength},
                             {"reference", r.reference},
                             {"measure", r.measure},
                             {"orientation", r.orientation},
                             {"mean", json_double(r.mean)},
                             {"seq_mean", json_double(r.seq_mean)},
                             {"ci", json_double(r.ci)},
                             {"n", r.n},
                             {"failed", r.failed},
                             {"fail_reason", r.fail_reason}});
    }
    j["quality"] = json::array();
    for (const auto& q : quality) {
        j["quality"].push_back({{"adapter", q.adapter},
                                {"param", json_double(q.param)},
                                {"strength", q.strength},
                                {"quality", json_double(q.quality)},
                                {"n_samples", q.n_samples},
                                {"n_prompt_skipped", q.n_prompt_skipped},
                                {"failed", q.failed},
                                {"fail_reason", q.fail_reason}});
    }
    j["correlations"] = json::array();
    for (const auto& c : correlations) {
        j["correlations"].push_back({{"measure", c.measure},
                                     {"orientation", c.orientation},
                                     {"reference", c.reference},
                                     {"rho", json_double(c.rho)},
                                     {"p_value", json_double(c.p_value)},
                                     {"n", c.n}});
    }
    return j.dump(2) + "\n";
}

SweepReport SweepReport::from_json(const std::string& text) {
    const json j = json::parse(text);
    SweepReport report;
    for (const auto& jr : j.at("rows")) {
        ReportRow r;
        r.adapter = jr.at("adapter").get<std::string>();
        r.param = parse_json_double(jr.at("param"));
        r.strength = jr.at("strength").get<int>();
        r.reference = jr.at("reference").get<std::string>();
        r.measure = jr.at("measure").get<std::string>();
        r.orientation = jr.at("orientation").get<std::string>();
        r.mean = parse_json_double(jr.at("mean"));
        r.seq_mean = parse_json_double(jr.at("seq_mean"));
        r.ci = parse_json_double(jr.at("ci"));
        r.n = jr.at("n").get<std::uint64_t>();
        r.failed = jr.at("failed").get<bool>();
        r.fail_reason = jr.at("fail_reason").get<std::string>();
        report.rows.push_back(std::move(r));
    }
    for (const auto& jq : j.at("quality")) {
        QualityRow q;
        q.adapter = jq.at("adapter").get<std::string>();
        q.param = parse_json_double(jq.at("param"));
        q.strength = jq.at("strength").get<int>();
        q.quality = parse_json_double(jq.at("quality"));
        q.n_samples = jq.at("n_samples").get<std::size_t>();
        q.n_prompt_skipped = jq.at("n_prompt_skipped").get<std::size_t>();
        q.failed = jq.at("failed").get<bool>();
        q.fail_reason = jq.at("fail_reason").get<std::string>();
        report.quality.push_back(std::move(q));
    }
    for (const auto& jc : j.at("correlations")) {
        CorrRow c;
        c.measure = jc.at("measure").get<std::string>();
        c.orientation = jc.at("orientation").get<std::string>();
        c.reference = jc.at("reference").get<std::string>();
        c.rho = parse_json_double(jc.at("rho"));
        c.p_value = parse_json_double(jc.at("p_value"));
        c.n = jc.at("n").get<std::size_t>();
        report.correlations.push_back(std::move(c));
    }
    return report;
}

void SweepReport::write_csv(std::ostream& out) const {
    out << "adapter,param,strength,reference,measure,orientation,mean,ci,n\n";
    for (const auto& r : rows) {
        out << r.adapter << ',' << fmt_double(r.param) << ',' << r.strength << ','
            << r.reference << ',' << r.measure << ',' << r.orientation << ','
            << (r.failed ? "failed:" + r.fail_reason : fmt_double(r.mean)) << ','
            << fmt_double(r.ci) << ',' << r.n << "\n";
    }
    for (const auto& q : quality) {
        out << q.adapter << ',' << fmt_double(q.param) << ',' << q.strength
            << ",none,quality,symmetric,"
            << (q.failed ? "failed:" + q.fail_reason : fmt_double(q.quality)) << ",0,"
            << q.n_samples << "\n";
    }
}

void emit_report(const SweepReport& report, const std::string& base_path) {
    {
        std::ofstream csv(base_path + ".csv", std::ios::binary);
        if (!csv) throw std::runtime_error("cannot write " + base_path + ".csv");
        report.write_csv(csv);
    }
    std::ofstream js(base_path + ".json", std::ios::binary);
    if (!js) throw std::runtime_error("cannot write " + base_path + ".json");
    js << report.to_json();
}

// ---------------------------------------------------------------------------
// Corpus helpers

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

std::vector<std::vector<TokenId>> tokenize_corpus_lines(
    const std::vector<std::string>& lines, const Tokenizer& tokenizer) {
    std::vector<std::vector<TokenId>> out;
    for (const auto& line : lines) {
        auto toks = tokenizer.tokenize(line);
        if (!toks.empty()) out.push_back(std::move(toks));
    }
    return out;
}

}  // namespace adapterlab
