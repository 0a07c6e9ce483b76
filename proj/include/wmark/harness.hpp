#pragma once

// Experiment orchestration: corpus ingestion, prompt construction, watermark
// sweeps, gamma tuning, and structured result emission. Everything routes
// through one master seed, and rows are sorted before emission, so a config
// plus corpus bytes maps to byte-identical output.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "wmark/lm.hpp"
#include "wmark/metrics.hpp"
#include "wmark/vocab.hpp"

namespace wmark {

struct ExperimentConfig {
  std::string experiment_id = "exp";

  std::size_t lm_order = 3;
  double smoothing_k = 0.1;
  std::size_t vocab_max = 2048;

  double gamma = 0.25;
  std::uint64_t key = 1;
  std::size_t steps = 30;  // tokens generated per sequence (T)
  std::size_t prompt_count = 100;
  std::size_t sequences_per_prompt = 16;
  bool oracle_mode = false;
  std::uint64_t master_seed = 1;

  // Watermark points. An empty opt_betas list derives the OPT grid from
  // baseline damage quantiles (beta_quantiles below).
  std::vector<double> kgw_deltas;
  std::vector<double> opt_betas;
  std::vector<double> opt_prime_betas;
  bool include_hard = false;
  std::vector<double> beta_quantiles = {0.20, 0.40, 0.55, 0.70,
                                        0.82, 0.90, 0.955, 0.99};

  std::vector<double> alpha_targets = {0.05, 0.01, 0.001};
  std::vector<double> percentile_qs = {0.01, 0.1, 0.5, 0.9, 0.99};

  // Prompt rule: documents under min_doc_tokens are ineligible; a document
  // of at most 2 * prompt_len tokens contributes everything but its final
  // prompt_len tokens, longer ones contribute their first prompt_len.
  std::size_t min_doc_tokens = 50;
  std::size_t prompt_len = 40;
};

// Blank-line delimited documents.
std::vector<std::string> split_documents(std::istream& corpus);
std::vector<std::vector<TokenId>> tokenize_documents(
    const Vocabulary& vocab, std::span<const std::string> documents);

// Seeded sample of `count` distinct eligible documents, mapped to prompts
// by the rule above. Throws DataError naming the shortfall when fewer than
// `count` documents qualify.
std::vector<std::vector<TokenId>> make_prompts(
    std::span<const std::vector<TokenId>> documents, std::size_t count,
    std::uint64_t seed, std::size_t min_doc_tokens = 50,
    std::size_t prompt_len = 40);

struct SweepInputs {
  Vocabulary vocab;
  NgramModel model;
  std::vector<std::vector<TokenId>> prompts;
};

// Vocabulary, trained model, and prompt sample from raw corpus text.
SweepInputs prepare_inputs(const ExperimentConfig& cfg, std::istream& corpus);

struct ResultRow {
  std::string experiment_id;
  std::string variant;  // baseline | HARD | KGW | OPT | OPT_PRIME | bound | tune
  double param = 0.0;   // KGW delta, OPT beta(-prime), tune gamma; else 0
  double gamma = 0.0;
  std::string metric;
  double value = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

// Baseline run, frontier rows from the baseline sample, and one run per
// watermark point, all against shared per-sequence sampler streams so
// cross-variant differences are paired.
std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg,
                                 const NextTokenModel& model,
                                 std::span<const std::vector<TokenId>> prompts);

// Per gamma: largest grid threshold whose frontier log-perplexity cost is
// no worse than one standard error above zero, and the detection power that
// threshold buys at each alpha target. Rows flagged infeasible=1 when no
// grid point qualifies.
std::vector<ResultRow> tune_gamma(const ExperimentConfig& cfg,
                                  std::span<const double> gamma_grid,
                                  const NextTokenModel& model,
                                  std::span<const std::vector<TokenId>> prompts);

// Fixed header `experiment_id,variant,param,gamma,metric,value,stderr,n`;
// rows sorted by (variant, param, metric); doubles printed with %.17g.
std::string to_csv(std::span<const ResultRow> rows);

// Deterministic JSON record of the configuration (no timestamps).
std::string manifest_json(const ExperimentConfig& cfg);

}  // namespace wmark
