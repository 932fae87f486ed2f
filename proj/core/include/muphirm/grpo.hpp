#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "muphirm/rationale.hpp"
#include "muphirm/toy_policy.hpp"

namespace muphirm {

struct GrpoConfig {
  int group_size = 8;            // G
  double kl_coefficient = 0.03;  // lambda
  double epsilon = 1e-6;         // advantage denominator stabilizer
  // Desk-scale default; the reference setup uses 1e-7 against a 7B model,
  // which would not move this policy in any reasonable number of steps.
  double learning_rate = 1e-2;
  int ppo_epochs = 3;
  double temperature = 1.0;
  int max_response_length = 350;
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument
};

// G rollouts for one sample: completions, rewards, per-token
// log-probabilities under the sampling and reference policies, and
// group-normalized advantages.
struct RolloutGroup {
  std::string sample_id;
  int feature_id = 0;
  std::vector<std::vector<int>> completions;
  std::vector<double> rewards;
  std::vector<std::vector<double>> log_probs;
  std::vector<std::vector<double>> ref_log_probs;
  std::vector<double> advantages;

  int group_size() const { return static_cast<int>(completions.size()); }
  void validate() const;  // throws on inconsistent sizes or G < 2
};

// (R_g - mean) / (population std + epsilon). A constant-reward group maps
// to exactly zero advantages. Throws below two rewards.
std::vector<double> normalize_advantages(std::span<const double> rewards, double epsilon);

// Sampled per-sequence KL estimate: the summed per-token log-ratio between
// the sampling and reference policies. Throws on length mismatch.
double kl_estimate(std::span<const double> log_probs, std::span<const double> ref_log_probs);

// Mean over groups of (1/G) sum_g advantage_g * sequence-log-prob, minus
// kl_coefficient times the mean per-completion KL estimate. Evaluated on
// the groups' stored log-probabilities.
double grpo_objective(std::span<const RolloutGroup> groups, const GrpoConfig& config);

using RewardFn = std::function<double(const Sample&, const std::string&)>;

// Samples G completions per sample under `policy`, scores them, and fills
// in reference log-probabilities and normalized advantages.
std::vector<RolloutGroup> collect_rollouts(const ToyPolicy& policy, const ToyPolicy& ref_policy,
                                           std::span<const Sample> batch,
                                           const RewardFn& reward_fn, const GrpoConfig& config,
                                           std::uint64_t seed);

// grpo_objective with the completions' log-probabilities recomputed under
// `policy` at the config temperature (advantages, rewards, and reference
// log-probs stay fixed). This is the surrogate the gradient differentiates.
double objective_for_policy(const ToyPolicy& policy, std::span<const RolloutGroup> groups,
                            const GrpoConfig& config);

// Analytic gradient of objective_for_policy with respect to the policy's
// context table (score-function gradient of the advantage term plus the
// log-ratio KL term's pull toward the reference).
std::vector<double> objective_gradient(const ToyPolicy& policy,
                                       std::span<const RolloutGroup> groups,
                                       const GrpoConfig& config);

struct StepReport {
  int step = 0;
  double mean_reward = 0;
  double mean_kl = 0;
  double objective = 0;
};

// One GRPO update: rollout collection, then ppo_epochs gradient-ascent
// passes over the same rollouts with recomputed log-probs. The report is
// taken at rollout time, before any update. Identical seeds give
// bit-identical reports.
StepReport grpo_step(ToyPolicy& policy, const ToyPolicy& ref_policy,
                     std::span<const Sample> batch, const RewardFn& reward_fn,
                     const GrpoConfig& config, std::uint64_t rng_seed);

// A step report extended with greedy-decoding quality on the full corpus,
// evaluated after the step's update.
struct TrainStepRecord {
  int step = 0;
  double mean_reward = 0;
  double mean_kl = 0;
  double objective = 0;
  double greedy_accuracy = 0;     // greedy verdict == gold label
  double greedy_mean_format = 0;  // mean format reward of greedy decodes
};

struct TrainResult {
  std::vector<TrainStepRecord> steps;
};

// Runs `steps` GRPO steps over the corpus in a seeded round-robin order of
// `batch_size` samples per step.
TrainResult train_grpo(ToyPolicy& policy, const ToyPolicy& ref_policy,
                       std::span<const Sample> corpus, const RewardFn& reward_fn,
                       const GrpoConfig& config, int steps, int batch_size);

// Greedy-decoding verdict accuracy and mean format reward over a corpus.
std::pair<double, double> greedy_corpus_quality(const ToyPolicy& policy,
                                                std::span<const Sample> corpus);

// Deterministic seed derivation for nested sampling streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace muphirm
