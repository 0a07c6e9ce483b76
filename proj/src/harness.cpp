#include "wmark/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "wmark/detector.hpp"
#include "wmark/errors.hpp"
#include "wmark/greensplit.hpp"
#include "wmark/rng.hpp"

namespace wmark {

namespace {

// Stream tags under the master seed ("prompt" / "sample" in ASCII).
constexpr std::uint64_t kPromptTag = 0x70726F6D7074ull;
constexpr std::uint64_t kSamplerTag = 0x73616D706C65ull;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool is_blank(const std::string& line) {
  for (char c : line)
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  return true;
}

void require_csv_safe(const std::string& s) {
  for (char c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"')
      throw InvariantError("result field contains CSV metacharacters: " + s);
}

void validate_config(const ExperimentConfig& cfg) {
  require_csv_safe(cfg.experiment_id);
  if (!(cfg.gamma > 0.0) || !(cfg.gamma < 1.0))
    throw DataError("gamma must lie strictly inside (0, 1)");
  if (cfg.steps < 2) throw DataError("sequence length must be >= 2");
  if (cfg.prompt_count < 1 || cfg.sequences_per_prompt < 1)
    throw DataError("prompt and sequence counts must be >= 1");
  for (double a : cfg.alpha_targets)
    if (!(a > 0.0) || !(a <= 1.0))
      throw DataError("alpha targets must lie in (0, 1]");
  for (double q : cfg.beta_quantiles)
    if (!(q > 0.0) || !(q <= 1.0))
      throw DataError("beta quantiles must lie in (0, 1]");
  for (double q : cfg.percentile_qs)
    if (!(q > 0.0) || !(q <= 1.0))
      throw DataError("percentile fractions must lie in (0, 1]");
  for (double d : cfg.kgw_deltas)
    if (!(d >= 0.0)) throw DataError("logit boosts must be >= 0");
  if (cfg.lm_order < 1) throw DataError("lm order must be >= 1");
  if (!(cfg.smoothing_k > 0.0)) throw DataError("smoothing k must be > 0");
  if (cfg.vocab_max < 2) throw DataError("vocab size must be >= 2");
}

class RowSink {
 public:
  RowSink(std::vector<ResultRow>& rows, const ExperimentConfig& cfg)
      : rows_(rows), cfg_(cfg) {}

  void add(const std::string& variant, double param,
           const std::string& metric, double value, double se,
           std::size_t n) {
    require_csv_safe(variant);
    require_csv_safe(metric);
    rows_.push_back({cfg_.experiment_id, variant, param, cfg_.gamma, metric,
                     value, se, n});
  }

  void add(const std::string& variant, double param,
           const std::string& metric, const Estimate& e) {
    add(variant, param, metric, e.value, e.se, e.n);
  }

 private:
  std::vector<ResultRow>& rows_;
  const ExperimentConfig& cfg_;
};

std::string percentile_metric(double q) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "logppl_p%g", q * 100.0);
  return buf;
}

std::string power_metric(std::size_t n_star) {
  return "power_nstar_" + std::to_string(n_star);
}

struct DetectorGrid {
  std::vector<Threshold> thresholds;  // one per alpha target
};

DetectorGrid detector_grid(const ExperimentConfig& cfg, double gamma,
                           std::size_t vocab_size) {
  DetectorGrid grid;
  for (double alpha : cfg.alpha_targets)
    grid.thresholds.push_back(
        threshold_for_alpha(cfg.steps, gamma, vocab_size, alpha));
  return grid;
}

double clamp_shift(double raw, double gamma_eff) {
  return std::min(std::max(raw, 0.0), 1.0 - gamma_eff);
}

// Every per-variant run emits the same metric family so downstream plots
// can pivot on (variant, param, metric).
void emit_run_metrics(RowSink& sink, const ExperimentConfig& cfg,
                      const std::string& variant, double param,
                      std::span<const SequenceTrace> traces,
                      const Estimate* baseline_naive,
                      const Estimate* baseline_rao,
                      const DetectorGrid& grid, double gamma,
                      std::size_t vocab_size) {
  const Estimate delta_ng = estimate_delta_Ng(traces);
  const Estimate naive = estimate_logppl(traces, LogpplMode::Naive);
  const Estimate rao = estimate_logppl(traces, LogpplMode::Rao);

  sink.add(variant, param, "ng_mean", estimate_ng_mean(traces));
  sink.add(variant, param, "delta_ng", delta_ng);
  sink.add(variant, param, "logppl_naive", naive);
  sink.add(variant, param, "logppl_rao", rao);
  if (baseline_naive != nullptr) {
    sink.add(variant, param, "delta_logppl_naive",
             naive.value - baseline_naive->value,
             std::sqrt(naive.se * naive.se +
                       baseline_naive->se * baseline_naive->se),
             naive.n);
    sink.add(variant, param, "delta_logppl_rao",
             rao.value - baseline_rao->value,
             std::sqrt(rao.se * rao.se + baseline_rao->se * baseline_rao->se),
             rao.n);
  }
  sink.add(variant, param, "delta_logppl_damage",
           estimate_delta_logppl_from_damage(traces));
  sink.add(variant, param, "between_token_variance",
           estimate_between_token_variance(traces));
  sink.add(variant, param, "combined_objective",
           estimate_combined_objective(traces));
  sink.add(variant, param, "gamma_bar", estimate_gamma_bar(traces));

  const auto hist = ng_histogram(traces);
  sink.add(variant, param, "ng_kl", ng_kl_divergence(hist, cfg.steps), 0.0,
           traces.size());

  const auto percentiles = logppl_percentiles(traces, cfg.percentile_qs);
  std::size_t pool = 0;
  for (const SequenceTrace& trace : traces) pool += trace.steps.size();
  for (std::size_t i = 0; i < percentiles.size(); ++i)
    sink.add(variant, param, percentile_metric(cfg.percentile_qs[i]),
             percentiles[i], 0.0, pool);

  const double gamma_eff = effective_gamma(gamma, vocab_size);
  const double shift =
      clamp_shift(delta_ng.value / static_cast<double>(cfg.steps), gamma_eff);
  for (const Threshold& thr : grid.thresholds)
    sink.add(variant, param, power_metric(thr.n_star),
             power(cfg.steps, gamma, vocab_size, shift, thr.n_star), 0.0,
             traces.size());
}

struct PointSpec {
  std::string variant;
  double param;
  ShiftSpec shift;
};

std::vector<PointSpec> sweep_points(const ExperimentConfig& cfg,
                                    std::span<const double> betas) {
  std::vector<PointSpec> points;
  if (cfg.include_hard)
    points.push_back({"HARD", 0.0, ShiftSpec::hard()});
  for (double d : cfg.kgw_deltas)
    points.push_back({"KGW", d, ShiftSpec::kgw(d)});
  for (double b : betas) points.push_back({"OPT", b, ShiftSpec::opt(b)});
  for (double b : cfg.opt_prime_betas)
    points.push_back({"OPT_PRIME", b, ShiftSpec::opt_prime(b)});
  return points;
}

void sort_rows(std::vector<ResultRow>& rows) {
  std::sort(rows.begin(), rows.end(),
            [](const ResultRow& a, const ResultRow& b) {
              if (a.variant != b.variant) return a.variant < b.variant;
              if (a.param != b.param) return a.param < b.param;
              if (a.metric != b.metric) return a.metric < b.metric;
              return a.gamma < b.gamma;
            });
}

}  // namespace

std::vector<std::string> split_documents(std::istream& corpus) {
  std::vector<std::string> documents;
  std::string line, current;
  while (std::getline(corpus, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) {
      if (!current.empty()) documents.push_back(std::move(current));
      current = {};
      continue;
    }
    if (!current.empty()) current.push_back('\n');
    current += line;
  }
  if (!current.empty()) documents.push_back(std::move(current));
  return documents;
}

std::vector<std::vector<TokenId>> tokenize_documents(
    const Vocabulary& vocab, std::span<const std::string> documents) {
  std::vector<std::vector<TokenId>> out;
  out.reserve(documents.size());
  for (const std::string& doc : documents) out.push_back(vocab.tokenize(doc));
  return out;
}

std::vector<std::vector<TokenId>> make_prompts(
    std::span<const std::vector<TokenId>> documents, std::size_t count,
    std::uint64_t seed, std::size_t min_doc_tokens, std::size_t prompt_len) {
  if (prompt_len < 1) throw InvariantError("prompt length must be >= 1");
  if (min_doc_tokens <= prompt_len)
    throw InvariantError(
        "eligibility floor must exceed the prompt length, or prompts could "
        "be empty");

  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < documents.size(); ++i)
    if (documents[i].size() >= min_doc_tokens) eligible.push_back(i);
  if (eligible.size() < count) {
    std::ostringstream msg;
    msg << "prompt sample needs " << count << " eligible documents (>= "
        << min_doc_tokens << " tokens); corpus has " << eligible.size();
    throw DataError(msg.str());
  }

  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.bounded(
                            static_cast<std::uint64_t>(eligible.size() - i)));
    std::swap(eligible[i], eligible[j]);
  }

  std::vector<std::vector<TokenId>> prompts;
  prompts.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::vector<TokenId>& doc = documents[eligible[i]];
    const std::size_t keep =
        doc.size() <= 2 * prompt_len ? doc.size() - prompt_len : prompt_len;
    prompts.emplace_back(doc.begin(),
                         doc.begin() + static_cast<std::ptrdiff_t>(keep));
  }
  return prompts;
}

SweepInputs prepare_inputs(const ExperimentConfig& cfg, std::istream& corpus) {
  validate_config(cfg);
  std::stringstream buffer;
  buffer << corpus.rdbuf();
  const std::string text = buffer.str();

  std::istringstream vocab_stream(text);
  Vocabulary vocab = Vocabulary::build(vocab_stream, cfg.vocab_max);

  std::istringstream doc_stream(text);
  const auto documents = split_documents(doc_stream);
  auto tokenized = tokenize_documents(vocab, documents);

  NgramModel model = train_ngram(tokenized, cfg.lm_order, cfg.smoothing_k,
                                 vocab.size());
  auto prompts =
      make_prompts(tokenized, cfg.prompt_count,
                   mix_pair(cfg.master_seed, kPromptTag), cfg.min_doc_tokens,
                   cfg.prompt_len);
  return {std::move(vocab), std::move(model), std::move(prompts)};
}

std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg,
                                 const NextTokenModel& model,
                                 std::span<const std::vector<TokenId>> prompts) {
  validate_config(cfg);
  const std::size_t vocab_size = model.vocab_size();
  const double gamma_eff = effective_gamma(cfg.gamma, vocab_size);

  GenerationConfig base;
  base.key = cfg.key;
  base.gamma = cfg.gamma;
  base.shift = ShiftSpec::kgw(0.0);
  base.steps = cfg.steps;
  base.sampler_seed = mix_pair(cfg.master_seed, kSamplerTag);
  base.oracle_mode = cfg.oracle_mode;
  base.record_damage = true;

  const auto baseline =
      generate_batch(model, prompts, base, cfg.sequences_per_prompt);
  const std::vector<double> betas =
      cfg.opt_betas.empty()
          ? beta_grid_from_baseline(baseline, cfg.beta_quantiles)
          : cfg.opt_betas;

  std::vector<ResultRow> rows;
  RowSink sink(rows, cfg);
  const DetectorGrid grid = detector_grid(cfg, cfg.gamma, vocab_size);

  for (const Threshold& thr : grid.thresholds)
    sink.add("baseline", 0.0, "alpha_star_nstar_" + std::to_string(thr.n_star),
             thr.alpha_star, 0.0, cfg.steps);

  const Estimate baseline_naive = estimate_logppl(baseline, LogpplMode::Naive);
  const Estimate baseline_rao = estimate_logppl(baseline, LogpplMode::Rao);
  emit_run_metrics(sink, cfg, "baseline", 0.0, baseline, nullptr, nullptr,
                   grid, cfg.gamma, vocab_size);

  for (const BoundPoint& point : pareto_bound(baseline, betas)) {
    sink.add("bound", point.beta, "delta_ng", point.delta_ng);
    sink.add("bound", point.beta, "delta_logppl", point.delta_logppl);
    const double shift = clamp_shift(
        point.delta_ng.value / static_cast<double>(cfg.steps), gamma_eff);
    for (const Threshold& thr : grid.thresholds)
      sink.add("bound", point.beta, power_metric(thr.n_star),
               power(cfg.steps, cfg.gamma, vocab_size, shift, thr.n_star),
               0.0, point.delta_ng.n);
  }

  for (const PointSpec& point : sweep_points(cfg, betas)) {
    GenerationConfig run = base;
    run.shift = point.shift;
    const auto traces =
        generate_batch(model, prompts, run, cfg.sequences_per_prompt);
    emit_run_metrics(sink, cfg, point.variant, point.param, traces,
                     &baseline_naive, &baseline_rao, grid, cfg.gamma,
                     vocab_size);
  }

  sort_rows(rows);
  return rows;
}

std::vector<ResultRow> tune_gamma(const ExperimentConfig& cfg,
                                  std::span<const double> gamma_grid,
                                  const NextTokenModel& model,
                                  std::span<const std::vector<TokenId>> prompts) {
  validate_config(cfg);
  if (gamma_grid.empty()) throw DataError("gamma grid is empty");
  const std::size_t vocab_size = model.vocab_size();

  std::vector<ResultRow> rows;
  RowSink sink(rows, cfg);

  for (double gamma : gamma_grid) {
    if (!(gamma > 0.0) || !(gamma < 1.0))
      throw DataError("gamma grid values must lie strictly inside (0, 1)");

    GenerationConfig base;
    base.key = cfg.key;
    base.gamma = gamma;
    base.shift = ShiftSpec::kgw(0.0);
    base.steps = cfg.steps;
    base.sampler_seed = mix_pair(cfg.master_seed, kSamplerTag);
    base.oracle_mode = cfg.oracle_mode;
    base.record_damage = true;

    const auto baseline =
        generate_batch(model, prompts, base, cfg.sequences_per_prompt);
    const auto betas = beta_grid_from_baseline(baseline, cfg.beta_quantiles);
    const auto bounds = pareto_bound(baseline, betas);

    // Largest threshold whose quality cost stays within one standard error
    // of zero.
    std::ptrdiff_t best = -1;
    for (std::size_t i = 0; i < bounds.size(); ++i)
      if (bounds[i].delta_logppl.value <= bounds[i].delta_logppl.se)
        best = static_cast<std::ptrdiff_t>(i);

    sink.add("tune", gamma, "infeasible", best < 0 ? 1.0 : 0.0, 0.0,
             bounds.size());
    if (best < 0) continue;

    const BoundPoint& pick = bounds[static_cast<std::size_t>(best)];
    sink.add("tune", gamma, "best_beta", pick.beta, 0.0, pick.delta_ng.n);
    sink.add("tune", gamma, "best_delta_ng", pick.delta_ng);
    sink.add("tune", gamma, "best_delta_logppl", pick.delta_logppl);

    const double gamma_eff = effective_gamma(gamma, vocab_size);
    const double shift = clamp_shift(
        pick.delta_ng.value / static_cast<double>(cfg.steps), gamma_eff);
    for (double alpha : cfg.alpha_targets) {
      const Threshold thr =
          threshold_for_alpha(cfg.steps, gamma, vocab_size, alpha);
      sink.add("tune", gamma, power_metric(thr.n_star),
               power(cfg.steps, gamma, vocab_size, shift, thr.n_star), 0.0,
               pick.delta_ng.n);
    }
  }

  sort_rows(rows);
  return rows;
}

std::string to_csv(std::span<const ResultRow> rows) {
  std::string out = "experiment_id,variant,param,gamma,metric,value,stderr,n\n";
  for (const ResultRow& row : rows) {
    out += row.experiment_id;
    out += ',';
    out += row.variant;
    out += ',';
    out += fmt(row.param);
    out += ',';
    out += fmt(row.gamma);
    out += ',';
    out += row.metric;
    out += ',';
    out += fmt(row.value);
    out += ',';
    out += fmt(row.se);
    out += ',';
    out += std::to_string(row.n);
    out += '\n';
  }
  return out;
}

std::string manifest_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json m;
  m["experiment_id"] = cfg.experiment_id;
  m["lm_order"] = cfg.lm_order;
  m["smoothing_k"] = cfg.smoothing_k;
  m["vocab_max"] = cfg.vocab_max;
  m["gamma"] = cfg.gamma;
  m["key"] = cfg.key;
  m["steps"] = cfg.steps;
  m["prompt_count"] = cfg.prompt_count;
  m["sequences_per_prompt"] = cfg.sequences_per_prompt;
  m["oracle_mode"] = cfg.oracle_mode;
  m["master_seed"] = cfg.master_seed;
  m["kgw_deltas"] = cfg.kgw_deltas;
  m["opt_betas"] = cfg.opt_betas;
  m["opt_prime_betas"] = cfg.opt_prime_betas;
  m["include_hard"] = cfg.include_hard;
  m["beta_quantiles"] = cfg.beta_quantiles;
  m["alpha_targets"] = cfg.alpha_targets;
  m["percentile_qs"] = cfg.percentile_qs;
  m["min_doc_tokens"] = cfg.min_doc_tokens;
  m["prompt_len"] = cfg.prompt_len;
  m["format"] = "wmark-result-rows-v1";
  return m.dump(2) + "\n";
}

}  // namespace wmark
