// Command-line frontend: reward scoring, SFT warmup, GRPO training, and the
// evaluation suite (accuracy/macro-F1, transfer matrix, counterfactual
// pairs, rubric aggregation).

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "muphirm/data_io.hpp"
#include "muphirm/grpo.hpp"
#include "muphirm/lexicon.hpp"
#include "muphirm/metrics.hpp"
#include "muphirm/rationale.hpp"
#include "muphirm/rewards.hpp"
#include "muphirm/toy_policy.hpp"

namespace {

using namespace muphirm;

int features_in(std::span<const Sample> samples) {
  int max_feature = 0;
  for (const Sample& s : samples) max_feature = std::max(max_feature, s.feature_id);
  return max_feature + 1;
}

std::vector<Sample> load_named_dataset(const TrainConfig& config, const std::string& name) {
  auto it = config.dataset_paths.find(name);
  if (it == config.dataset_paths.end()) {
    throw std::runtime_error("config has no dataset named '" + name + "'");
  }
  return load_dataset(it->second);
}

RewardFn make_reward_fn(const Lexicon& lexicon, const TrainConfig& config) {
  return [&lexicon, ew = config.evidence_weights, rw = config.reward_weights](
             const Sample& sample, const std::string& text) {
    return total_reward(sample, text, lexicon, ew, rw).total;
  };
}

// Predictions keyed by sample id, parsed from a completions file.
std::map<std::string, Verdict> predictions_from_completions(
    const std::filesystem::path& path) {
  std::map<std::string, Verdict> preds;
  for (const CompletionRecord& r : load_completions(path)) {
    preds[r.sample_id] = parse_completion(r.completion).verdict;
  }
  return preds;
}

std::vector<Verdict> align_predictions(const std::map<std::string, Verdict>& preds,
                                       std::span<const Sample> samples,
                                       const std::string& source) {
  std::vector<Verdict> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) {
    auto it = preds.find(s.id);
    if (it == preds.end()) {
      throw std::runtime_error(source + ": no prediction for sample '" + s.id + "'");
    }
    out.push_back(it->second);
  }
  return out;
}

void emit(const std::optional<std::filesystem::path>& out_path, const std::string& contents) {
  if (out_path) {
    atomic_write_file(*out_path, contents);
  } else {
    std::cout << contents;
  }
}

int cmd_score(const std::filesystem::path& dataset_path,
              const std::filesystem::path& completions_path,
              const std::filesystem::path& lexicon_path,
              const std::optional<std::filesystem::path>& config_path,
              const std::optional<std::filesystem::path>& out_path) {
  EvidenceWeights ew;
  RewardWeights rw;
  if (config_path) {
    TrainConfig config = load_train_config(*config_path);
    ew = config.evidence_weights;
    rw = config.reward_weights;
  }
  Lexicon lexicon = load_lexicon(lexicon_path);
  std::vector<Sample> samples = load_dataset(dataset_path);
  std::map<std::string, const Sample*> by_id;
  for (const Sample& s : samples) by_id[s.id] = &s;

  std::ostringstream out;
  for (const CompletionRecord& r : load_completions(completions_path)) {
    auto it = by_id.find(r.sample_id);
    if (it == by_id.end()) {
      throw std::runtime_error("completions reference unknown sample '" + r.sample_id + "'");
    }
    RewardBreakdown breakdown = total_reward(*it->second, r.completion, lexicon, ew, rw);
    out << reward_record_to_json(r.sample_id, breakdown) << "\n";
  }
  emit(out_path, out.str());
  return 0;
}

int cmd_train_sft(const std::filesystem::path& config_path, const std::string& dataset_name,
                  const std::string& run_name) {
  TrainConfig config = load_train_config(config_path);
  std::vector<Sample> train = load_named_dataset(config, dataset_name);

  ToyPolicy policy = make_rationale_policy(features_in(train));
  SftResult result = sft_warmup(policy, train, config.sft_epochs, config.sft_learning_rate,
                                config.seed);

  std::filesystem::path run_dir = prepare_run_dir(config, run_name);
  std::ostringstream curve;
  for (std::size_t i = 0; i < result.epoch_loss.size(); ++i) {
    curve << "{\"epoch\": " << i + 1 << ", \"loss\": " << result.epoch_loss[i] << "}\n";
  }
  atomic_write_file(run_dir / "sft_loss.jsonl", curve.str());
  save_checkpoint(policy, run_dir / "policy.ckpt");

  std::cout << "sft done: " << result.epoch_loss.size() << " epochs, final loss "
            << result.epoch_loss.back() << "\n";
  std::cout << "checkpoint: " << (run_dir / "policy.ckpt").string() << "\n";
  return 0;
}

int cmd_train_grpo(const std::filesystem::path& config_path, const std::string& dataset_name,
                   const std::string& run_name,
                   const std::optional<std::filesystem::path>& checkpoint, bool cold) {
  if (!checkpoint && !cold) {
    throw std::runtime_error("train-grpo needs --checkpoint <sft policy> or --cold");
  }
  TrainConfig config = load_train_config(config_path);
  std::vector<Sample> train = load_named_dataset(config, dataset_name);
  Lexicon lexicon = load_lexicon(config.lexicon_path);

  ToyPolicy policy = checkpoint ? load_checkpoint(*checkpoint)
                                : make_rationale_policy(features_in(train));
  ToyPolicy reference = policy;

  RewardFn reward_fn = make_reward_fn(lexicon, config);
  TrainResult result = train_grpo(policy, reference, train, reward_fn, config.grpo,
                                  config.grpo_steps, config.batch_size);

  std::filesystem::path run_dir = prepare_run_dir(config, run_name);
  std::ostringstream reports;
  for (const TrainStepRecord& record : result.steps) {
    reports << step_record_to_json(record) << "\n";
  }
  atomic_write_file(run_dir / "step_reports.jsonl", reports.str());
  save_checkpoint(policy, run_dir / "policy.ckpt");

  const TrainStepRecord& last = result.steps.back();
  std::cout << "grpo done: " << result.steps.size() << " steps, mean reward "
            << last.mean_reward << ", greedy accuracy "
            << format_one_decimal(last.greedy_accuracy * 100.0) << "\n";
  std::cout << "checkpoint: " << (run_dir / "policy.ckpt").string() << "\n";
  return 0;
}

int cmd_eval(const std::filesystem::path& dataset_path,
             const std::optional<std::filesystem::path>& completions_path,
             const std::optional<std::filesystem::path>& checkpoint_path) {
  if (!completions_path && !checkpoint_path) {
    throw std::runtime_error("eval needs --completions or --checkpoint");
  }
  std::vector<Sample> samples = load_dataset(dataset_path);

  std::vector<Verdict> preds;
  if (completions_path) {
    preds = align_predictions(predictions_from_completions(*completions_path), samples,
                              completions_path->string());
  } else {
    ToyPolicy policy = load_checkpoint(*checkpoint_path);
    preds.reserve(samples.size());
    for (const Sample& s : samples) {
      GenerationResult gen = generate_greedy(policy, s, policy.max_len());
      preds.push_back(parse_completion(render_completion(policy, gen.tokens)).verdict);
    }
  }

  std::vector<int> golds;
  golds.reserve(samples.size());
  for (const Sample& s : samples) golds.push_back(s.label);

  ClassificationResult r = accuracy_and_macro_f1(preds, golds);
  std::cout << "accuracy " << format_one_decimal(r.accuracy * 100.0) << "\n";
  std::cout << "macro_f1 " << format_one_decimal(r.macro_f1 * 100.0) << "\n";
  return 0;
}

int cmd_transfer(const std::filesystem::path& manifest_path) {
  nlohmann::json manifest;
  {
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("cannot open manifest: " + manifest_path.string());
    in >> manifest;
  }
  std::filesystem::path base =
      manifest_path.has_parent_path() ? manifest_path.parent_path() : ".";
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
  };

  std::vector<std::pair<std::string, std::vector<Sample>>> datasets;
  for (const auto& [name, path] : manifest.at("datasets").items()) {
    datasets.emplace_back(name, load_dataset(resolve(path.get<std::string>())));
  }
  std::sort(datasets.begin(), datasets.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  // One predictor per training dataset, backed by the union of its
  // per-evaluation completion files.
  std::map<std::string, Predictor> models;
  std::map<std::string, std::map<std::string, Verdict>> lookup;
  for (const auto& [train_name, files] : manifest.at("completions").items()) {
    auto& table = lookup[train_name];
    for (const auto& [eval_name, path] : files.items()) {
      (void)eval_name;
      for (const auto& [id, verdict] :
           predictions_from_completions(resolve(path.get<std::string>()))) {
        table[id] = verdict;
      }
    }
    models[train_name] = [&table, train_name](const Sample& s) {
      auto it = table.find(s.id);
      if (it == table.end()) {
        throw std::runtime_error("predictor '" + train_name + "' has no completion for sample '" +
                                 s.id + "'");
      }
      return it->second;
    };
  }

  TransferMatrix matrix = transfer_matrix(models, datasets);
  std::cout << render_transfer_table(matrix);
  return 0;
}

int cmd_pairs(const std::filesystem::path& dataset_path,
              const std::filesystem::path& completions_path) {
  std::vector<Sample> samples = load_dataset(dataset_path);

  std::map<std::string, int> golds;
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const Sample& s : samples) {
    golds[s.id] = s.label;
    if (s.counterfactual_pair_id && s.id < *s.counterfactual_pair_id) {
      pairs.emplace_back(s.id, *s.counterfactual_pair_id);
    }
  }
  if (pairs.empty()) throw std::runtime_error("dataset has no counterfactual pairs");

  std::map<std::string, Verdict> preds = predictions_from_completions(completions_path);
  double accuracy = counterfactual_pair_accuracy(preds, golds, pairs);
  std::cout << "pairs " << pairs.size() << "\n";
  std::cout << "pair_accuracy " << format_one_decimal(accuracy * 100.0) << "\n";
  return 0;
}

int cmd_rubric(const std::filesystem::path& scores_path) {
  std::vector<RubricScore> scores = load_rubric_scores(scores_path);
  RubricReport report = aggregate_rubric(scores);
  std::cout << render_rubric_report(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MuPHIRM desk-scale training and evaluation"};
  app.require_subcommand(1);

  std::filesystem::path dataset_path, completions_path, lexicon_path, config_path, manifest_path,
      scores_path;
  std::optional<std::filesystem::path> opt_out, opt_config, opt_completions, opt_checkpoint;
  std::string dataset_name = "train";
  std::string run_name;
  bool cold = false;

  CLI::App* score = app.add_subcommand("score", "Reward breakdowns for a completions file");
  score->add_option("--dataset", dataset_path, "dataset JSONL")->required();
  score->add_option("--completions", completions_path, "completions JSONL")->required();
  score->add_option("--lexicon", lexicon_path, "lexicon JSON")->required();
  score->add_option("--config", opt_config, "config JSON for reward/evidence weights");
  score->add_option("--out", opt_out, "output path (default stdout)");

  CLI::App* train_sft = app.add_subcommand("train-sft", "SFT warmup of the classification head");
  train_sft->add_option("--config", config_path, "config JSON")->required();
  train_sft->add_option("--dataset-name", dataset_name, "dataset_paths key (default train)");
  std::string sft_run = "sft";
  train_sft->add_option("--run", sft_run, "run directory name under output_dir");

  CLI::App* train_grpo_cmd = app.add_subcommand("train-grpo", "GRPO loop from a checkpoint");
  train_grpo_cmd->add_option("--config", config_path, "config JSON")->required();
  train_grpo_cmd->add_option("--dataset-name", dataset_name, "dataset_paths key (default train)");
  train_grpo_cmd->add_option("--checkpoint", opt_checkpoint, "warm-start policy checkpoint");
  train_grpo_cmd->add_flag("--cold", cold, "start from an untrained policy");
  std::string grpo_run = "grpo";
  train_grpo_cmd->add_option("--run", grpo_run, "run directory name under output_dir");

  CLI::App* eval = app.add_subcommand("eval", "Accuracy and macro-F1 on a dataset");
  eval->add_option("--dataset", dataset_path, "dataset JSONL")->required();
  eval->add_option("--completions", opt_completions, "completions JSONL");
  eval->add_option("--checkpoint", opt_checkpoint, "policy checkpoint (greedy decoding)");

  CLI::App* transfer = app.add_subcommand("transfer", "Cross-dataset macro-F1 matrix");
  transfer->add_option("--manifest", manifest_path, "manifest JSON")->required();

  CLI::App* pairs = app.add_subcommand("pairs", "Counterfactual pair accuracy");
  pairs->add_option("--dataset", dataset_path, "dataset JSONL with pair links")->required();
  pairs->add_option("--completions", completions_path, "completions JSONL")->required();

  CLI::App* rubric = app.add_subcommand("rubric", "Aggregate judge rubric scores");
  rubric->add_option("--scores", scores_path, "rubric scores JSONL")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (score->parsed()) {
      return cmd_score(dataset_path, completions_path, lexicon_path, opt_config, opt_out);
    }
    if (train_sft->parsed()) return cmd_train_sft(config_path, dataset_name, sft_run);
    if (train_grpo_cmd->parsed()) {
      return cmd_train_grpo(config_path, dataset_name, grpo_run, opt_checkpoint, cold);
    }
    if (eval->parsed()) return cmd_eval(dataset_path, opt_completions, opt_checkpoint);
    if (transfer->parsed()) return cmd_transfer(manifest_path);
    if (pairs->parsed()) return cmd_pairs(dataset_path, completions_path);
    if (rubric->parsed()) return cmd_rubric(scores_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
