// wmk: command-line front end. One verb per workflow; flags mirror the
// experiment configuration and may also come from a config file (flags win).
// Exit codes: 0 success, 1 usage error, 2 bad input data, 3 internal
// invariant violation.

#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "wmark/detector.hpp"
#include "wmark/errors.hpp"
#include "wmark/generator.hpp"
#include "wmark/harness.hpp"
#include "wmark/lm.hpp"
#include "wmark/pareto.hpp"
#include "wmark/vocab.hpp"

namespace {

using namespace wmark;

std::ifstream open_input(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in.good())
    throw DataError(std::string("cannot open ") + what + ": " + path);
  return in;
}

std::ofstream open_output(const std::string& path, const char* what) {
  std::ofstream out(path);
  if (!out.good())
    throw DataError(std::string("cannot write ") + what + ": " + path);
  return out;
}

Vocabulary load_vocab(const std::string& path) {
  std::ifstream in = open_input(path, "vocabulary");
  return Vocabulary::load(in);
}

NgramModel load_model(const std::string& path) {
  std::ifstream in = open_input(path, "model");
  return NgramModel::load(in);
}

ShiftSpec parse_variant(const std::string& variant, double param) {
  if (variant == "none") return ShiftSpec::kgw(0.0);
  if (variant == "HARD") return ShiftSpec::hard();
  if (variant == "KGW") return ShiftSpec::kgw(param);
  if (variant == "OPT") return ShiftSpec::opt(param);
  if (variant == "OPT_PRIME") return ShiftSpec::opt_prime(param);
  throw DataError("unknown watermark variant: " + variant);
}

void add_experiment_flags(CLI::App* cmd, ExperimentConfig& cfg) {
  cmd->add_option("--experiment-id", cfg.experiment_id,
                  "Identifier stamped on every result row");
  cmd->add_option("--lm-order", cfg.lm_order,
                  "N-gram order (context length + 1)");
  cmd->add_option("--smoothing-k", cfg.smoothing_k, "Add-k smoothing mass");
  cmd->add_option("--vocab-max", cfg.vocab_max,
                  "Vocabulary size cap, padding token included");
  cmd->add_option("--gamma", cfg.gamma, "Green-list fraction in (0,1)");
  cmd->add_option("--key", cfg.key, "Watermark key");
  cmd->add_option("--steps", cfg.steps, "Tokens generated per sequence");
  cmd->add_option("--prompt-count", cfg.prompt_count,
                  "Prompts sampled from the corpus");
  cmd->add_option("--sequences-per-prompt", cfg.sequences_per_prompt,
                  "Generations per prompt");
  cmd->add_flag("--oracle", cfg.oracle_mode,
                "Fresh split key at every step");
  cmd->add_option("--master-seed", cfg.master_seed,
                  "Seed for prompt sampling and generation streams");
  cmd->add_option("--kgw-deltas", cfg.kgw_deltas,
                  "Constant logit boosts to sweep");
  cmd->add_option("--opt-betas", cfg.opt_betas,
                  "Damage thresholds to sweep (empty: derive from baseline "
                  "quantiles)");
  cmd->add_option("--opt-prime-betas", cfg.opt_prime_betas,
                  "Second-moment damage thresholds to sweep");
  cmd->add_flag("--include-hard", cfg.include_hard,
                "Add the green-certain watermark point");
  cmd->add_option("--beta-quantiles", cfg.beta_quantiles,
                  "Baseline damage quantiles for the derived threshold grid");
  cmd->add_option("--alpha-targets", cfg.alpha_targets,
                  "False-positive rates for detector thresholds");
  cmd->add_option("--percentile-qs", cfg.percentile_qs,
                  "Per-token log-perplexity percentiles to report");
  cmd->add_option("--min-doc-tokens", cfg.min_doc_tokens,
                  "Eligibility floor for prompt documents");
  cmd->add_option("--prompt-len", cfg.prompt_len, "Prompt length cap");
}

int run(int argc, char** argv) {
  CLI::App app{"Vocabulary-split watermarking toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "Read options from a config file with one [section] per "
                 "verb (command-line flags win)");

  std::function<void()> action;

  // build-vocab
  auto* build_vocab = app.add_subcommand(
      "build-vocab", "Build a frequency-ranked vocabulary from a corpus");
  {
    struct Args {
      std::string corpus, out;
      std::size_t max_size = 2048;
    };
    auto args = std::make_shared<Args>();
    build_vocab->add_option("--corpus", args->corpus, "Corpus text file")
        ->required();
    build_vocab->add_option("--out", args->out, "Output vocabulary file")
        ->required();
    build_vocab->add_option("--max-size", args->max_size,
                            "Size cap, padding token included");
    build_vocab->callback([args, &action] {
      action = [args] {
        std::ifstream in = open_input(args->corpus, "corpus");
        const Vocabulary vocab = Vocabulary::build(in, args->max_size);
        std::ofstream out = open_output(args->out, "vocabulary");
        vocab.save(out);
        std::cerr << "vocabulary of " << vocab.size() << " tokens written to "
                  << args->out << "\n";
      };
    });
  }

  // train-lm
  auto* train = app.add_subcommand(
      "train-lm", "Train an add-k n-gram model on a tokenized corpus");
  {
    struct Args {
      std::string corpus, vocab, out;
      std::size_t order = 3;
      double smoothing_k = 0.1;
    };
    auto args = std::make_shared<Args>();
    train->add_option("--corpus", args->corpus, "Corpus text file")
        ->required();
    train->add_option("--vocab", args->vocab, "Vocabulary file")->required();
    train->add_option("--out", args->out, "Output model file")->required();
    train->add_option("--order", args->order, "N-gram order");
    train->add_option("--smoothing-k", args->smoothing_k,
                      "Add-k smoothing mass");
    train->callback([args, &action] {
      action = [args] {
        const Vocabulary vocab = load_vocab(args->vocab);
        std::ifstream in = open_input(args->corpus, "corpus");
        const auto documents = split_documents(in);
        const auto tokenized = tokenize_documents(vocab, documents);
        const NgramModel model =
            train_ngram(tokenized, args->order, args->smoothing_k,
                        vocab.size());
        std::ofstream out = open_output(args->out, "model");
        model.save(out);
        std::cerr << "model trained on " << documents.size()
                  << " documents written to " << args->out << "\n";
      };
    });
  }

  // generate
  auto* generate_cmd = app.add_subcommand(
      "generate", "Generate watermarked text from a prompt");
  {
    struct Args {
      std::string vocab, model, prompt, variant = "none", trace_path;
      double param = 0.0;
      double gamma = 0.25;
      std::uint64_t key = 1;
      std::uint64_t sampler_seed = 0;
      std::size_t steps = 30;
      bool oracle = false;
    };
    auto args = std::make_shared<Args>();
    generate_cmd->add_option("--vocab", args->vocab, "Vocabulary file")
        ->required();
    generate_cmd->add_option("--model", args->model, "Model file")
        ->required();
    generate_cmd->add_option("--prompt", args->prompt,
                             "Prompt text (may be empty)");
    generate_cmd
        ->add_option("--variant", args->variant,
                     "none | HARD | KGW | OPT | OPT_PRIME")
        ->check(CLI::IsMember({"none", "HARD", "KGW", "OPT", "OPT_PRIME"}));
    generate_cmd->add_option("--param", args->param,
                             "Boost for KGW, threshold for OPT/OPT_PRIME");
    generate_cmd->add_option("--gamma", args->gamma, "Green-list fraction");
    generate_cmd->add_option("--key", args->key, "Watermark key");
    generate_cmd->add_option("--steps", args->steps, "Tokens to generate");
    generate_cmd->add_option("--sampler-seed", args->sampler_seed,
                             "Sampling stream seed");
    generate_cmd->add_flag("--oracle", args->oracle,
                           "Fresh split key at every step");
    generate_cmd->add_option("--trace", args->trace_path,
                             "Write per-step records as JSON lines");
    generate_cmd->callback([args, &action] {
      action = [args] {
        const Vocabulary vocab = load_vocab(args->vocab);
        const NgramModel model = load_model(args->model);
        if (model.vocab_size() != vocab.size())
          throw DataError("model and vocabulary disagree on size");
        GenerationConfig cfg;
        cfg.key = args->key;
        cfg.gamma = args->gamma;
        cfg.shift = parse_variant(args->variant, args->param);
        cfg.steps = args->steps;
        cfg.sampler_seed = args->sampler_seed;
        cfg.oracle_mode = args->oracle;
        const std::vector<TokenId> prompt = vocab.tokenize(args->prompt);
        const SequenceTrace trace = generate(model, prompt, cfg);
        std::cout << vocab.detokenize(trace.body) << "\n";
        if (!args->trace_path.empty()) {
          std::ofstream out = open_output(args->trace_path, "trace");
          write_trace_jsonl(out, trace);
        }
      };
    });
  }

  // detect
  auto* detect_cmd = app.add_subcommand(
      "detect", "Test a text for the watermark under a key");
  {
    struct Args {
      std::string vocab, text, text_file;
      double gamma = 0.25;
      double alpha = 0.01;
      std::uint64_t key = 1;
      TokenId prev = kUnknownId;
    };
    auto args = std::make_shared<Args>();
    detect_cmd->add_option("--vocab", args->vocab, "Vocabulary file")
        ->required();
    detect_cmd->add_option("--text", args->text, "Text to score");
    detect_cmd->add_option("--text-file", args->text_file,
                           "File holding the text to score");
    detect_cmd->add_option("--gamma", args->gamma, "Green-list fraction");
    detect_cmd->add_option("--alpha", args->alpha,
                           "False-positive rate target");
    detect_cmd->add_option("--key", args->key, "Watermark key");
    detect_cmd->add_option("--prev-token", args->prev,
                           "Token id seeding the first split");
    detect_cmd->callback([args, &action] {
      action = [args] {
        const Vocabulary vocab = load_vocab(args->vocab);
        std::string text = args->text;
        if (!args->text_file.empty()) {
          std::ifstream in = open_input(args->text_file, "text");
          std::ostringstream buffer;
          buffer << in.rdbuf();
          text = buffer.str();
        }
        const std::vector<TokenId> body = vocab.tokenize(text);
        const DetectionReport rep = detect(body, args->prev, args->key,
                                           args->gamma, vocab.size(),
                                           args->alpha);
        nlohmann::ordered_json out;
        out["n_green"] = rep.n_green;
        out["length"] = rep.length;
        out["n_star"] = rep.n_star;
        out["alpha_star"] = rep.alpha_star;
        out["gamma_eff"] = rep.gamma_eff;
        out["p_value"] = rep.p_value;
        out["reject_null"] = rep.reject_null;
        std::cout << out.dump(2) << "\n";
      };
    });
  }

  // sweep
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "Run a watermark sweep and emit result rows as CSV");
  {
    struct Args {
      ExperimentConfig cfg;
      std::string corpus, out, manifest;
    };
    auto args = std::make_shared<Args>();
    sweep_cmd->add_option("--corpus", args->corpus, "Corpus text file")
        ->required();
    sweep_cmd->add_option("--out", args->out,
                          "CSV output path (default: stdout)");
    sweep_cmd->add_option("--manifest", args->manifest,
                          "Write the configuration record here");
    add_experiment_flags(sweep_cmd, args->cfg);
    sweep_cmd->callback([args, &action] {
      action = [args] {
        std::ifstream in = open_input(args->corpus, "corpus");
        const SweepInputs inputs = prepare_inputs(args->cfg, in);
        const auto rows = run_sweep(args->cfg, inputs.model, inputs.prompts);
        const std::string csv = to_csv(rows);
        if (args->out.empty()) {
          std::cout << csv;
        } else {
          std::ofstream out = open_output(args->out, "results");
          out << csv;
        }
        if (!args->manifest.empty()) {
          std::ofstream out = open_output(args->manifest, "manifest");
          out << manifest_json(args->cfg);
        }
      };
    });
  }

  // tune-gamma
  auto* tune_cmd = app.add_subcommand(
      "tune-gamma",
      "Pick the best cost-neutral threshold per green fraction");
  {
    struct Args {
      ExperimentConfig cfg;
      std::string corpus, out;
      std::vector<double> gamma_grid{0.1, 0.15, 0.2, 0.25, 0.35, 0.5};
    };
    auto args = std::make_shared<Args>();
    tune_cmd->add_option("--corpus", args->corpus, "Corpus text file")
        ->required();
    tune_cmd->add_option("--out", args->out,
                         "CSV output path (default: stdout)");
    tune_cmd->add_option("--gamma-grid", args->gamma_grid,
                         "Green fractions to evaluate");
    add_experiment_flags(tune_cmd, args->cfg);
    tune_cmd->callback([args, &action] {
      action = [args] {
        std::ifstream in = open_input(args->corpus, "corpus");
        const SweepInputs inputs = prepare_inputs(args->cfg, in);
        const auto rows =
            tune_gamma(args->cfg, args->gamma_grid, inputs.model,
                       inputs.prompts);
        const std::string csv = to_csv(rows);
        if (args->out.empty()) {
          std::cout << csv;
        } else {
          std::ofstream out = open_output(args->out, "results");
          out << csv;
        }
      };
    });
  }

  // pareto-check
  auto* pareto_cmd = app.add_subcommand(
      "pareto-check",
      "Grid-search finite instances for dominators of the threshold rule");
  {
    struct Args {
      std::uint64_t seed = 1;
      std::size_t instances = 100;
      std::size_t atoms = 4;
      std::size_t grid = 20;
      std::vector<double> betas{0.0, 0.5, 2.0};
    };
    auto args = std::make_shared<Args>();
    pareto_cmd->add_option("--seed", args->seed, "First instance seed");
    pareto_cmd->add_option("--instances", args->instances,
                           "Number of random instances");
    pareto_cmd->add_option("--atoms", args->atoms,
                           "Atoms per instance (max 6)");
    pareto_cmd->add_option("--grid", args->grid, "Grid steps per atom");
    pareto_cmd->add_option("--betas", args->betas,
                           "Thresholds to check at each instance");
    pareto_cmd->callback([args, &action] {
      action = [args] {
        std::size_t dominated = 0;
        for (std::uint64_t s = 0; s < args->instances; ++s) {
          const FiniteInstance inst =
              random_instance(args->seed + s, args->atoms);
          for (const double beta : args->betas) {
            const auto found = dominance_search(inst, beta, args->grid);
            if (!found.has_value()) continue;
            ++dominated;
            const Objectives base =
                objectives(inst, threshold_solution(inst, beta));
            const Objectives better = objectives(inst, *found);
            std::cout << "instance seed " << args->seed + s << " beta "
                      << beta << ": dominator with shift gain "
                      << better.e_h - base.e_h << " and cost drop "
                      << base.e_hy - better.e_hy << "\n";
          }
        }
        std::cout << dominated << " dominated checks out of "
                  << args->instances * args->betas.size() << "\n";
      };
    });
  }

  // Lets --config appear after the verb; unmatched flags climb to the root.
  for (CLI::App* sub : {build_vocab, train, generate_cmd, detect_cmd,
                        sweep_cmd, tune_cmd, pareto_cmd})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  action();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const wmark::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
