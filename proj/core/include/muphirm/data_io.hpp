#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "muphirm/grpo.hpp"
#include "muphirm/metrics.hpp"
#include "muphirm/rationale.hpp"
#include "muphirm/rewards.hpp"

namespace muphirm {

// Experiment configuration. File-relative paths resolve against the config
// file's directory; referenced lexicon and dataset files must exist at
// load time.
struct TrainConfig {
  GrpoConfig grpo;
  RewardWeights reward_weights;
  EvidenceWeights evidence_weights;
  std::filesystem::path lexicon_path;
  std::map<std::string, std::filesystem::path> dataset_paths;
  int sft_epochs = 300;
  double sft_learning_rate = 0.5;
  int grpo_steps = 500;
  int batch_size = 16;
  std::filesystem::path output_dir = "runs";
  std::uint64_t seed = 0;
};

TrainConfig load_train_config(const std::filesystem::path& path);

// Parses config JSON; `base_dir` anchors relative paths, and referenced
// files are checked for existence when `check_paths` is set.
TrainConfig parse_train_config(std::string_view json_text, const std::filesystem::path& base_dir,
                               bool check_paths, std::string_view origin);

// Serialization inverse of parse_train_config (semantically identical on
// round trip).
std::string train_config_to_json(const TrainConfig& config);

// Line-delimited JSON dataset records with fields id, embedded_text,
// label, and optional harm_class, harm_subclass, gold_rationale, dataset,
// counterfactual_pair_id, feature_id. Rejects duplicate ids, labels
// outside {0,1}, MuPHI records whose harm_class presence disagrees with
// the label, and counterfactual links that dangle or point at a same-label
// sample. Errors name the line number and field.
std::vector<Sample> load_dataset(const std::filesystem::path& path);
std::vector<Sample> parse_dataset(std::istream& in, std::string_view origin);
void write_dataset(const std::filesystem::path& path, std::span<const Sample> samples);

// One model completion for a dataset sample.
struct CompletionRecord {
  std::string sample_id;
  std::string completion;
};

std::vector<CompletionRecord> load_completions(const std::filesystem::path& path);
void write_completions(const std::filesystem::path& path,
                       std::span<const CompletionRecord> records);

std::vector<RubricScore> load_rubric_scores(const std::filesystem::path& path);

std::string step_record_to_json(const TrainStepRecord& record);
TrainStepRecord step_record_from_json(std::string_view json_text);

std::string reward_record_to_json(std::string_view sample_id, const RewardBreakdown& breakdown);

// Write-temp-then-rename; the destination never holds partial contents.
void atomic_write_file(const std::filesystem::path& path, std::string_view contents);

// Synthetic separable desk corpus: two feature classes alternating over
// n_samples, gold label equal to the class, first eight samples linked as
// counterfactual pairs. Deterministic.
std::vector<Sample> make_desk_corpus(int n_samples);

// Creates <output_dir>/<run_name>, writes the config snapshot (seed
// included) there, and returns the run directory.
std::filesystem::path prepare_run_dir(const TrainConfig& config, std::string_view run_name);

}  // namespace muphirm
