#include "muphirm/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

#include "muphirm/rewards.hpp"

namespace muphirm {
namespace {

double sum_of(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0);
}

std::size_t total_completions(std::span<const RolloutGroup> groups) {
  std::size_t n = 0;
  for (const RolloutGroup& g : groups) n += g.completions.size();
  return n;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over the combined value
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void GrpoConfig::validate() const {
  if (group_size < 2) throw std::invalid_argument("GrpoConfig: group_size must be >= 2");
  if (!(epsilon > 0)) throw std::invalid_argument("GrpoConfig: epsilon must be positive");
  if (kl_coefficient < 0) throw std::invalid_argument("GrpoConfig: kl_coefficient must be >= 0");
  if (!(learning_rate > 0)) throw std::invalid_argument("GrpoConfig: learning_rate must be positive");
  if (ppo_epochs < 1) throw std::invalid_argument("GrpoConfig: ppo_epochs must be >= 1");
  if (!(temperature > 0)) throw std::invalid_argument("GrpoConfig: temperature must be positive");
  if (max_response_length < 1) {
    throw std::invalid_argument("GrpoConfig: max_response_length must be >= 1");
  }
}

void RolloutGroup::validate() const {
  std::size_t g = completions.size();
  if (g < 2) throw std::invalid_argument("RolloutGroup: group size must be >= 2");
  if (rewards.size() != g || log_probs.size() != g || ref_log_probs.size() != g ||
      advantages.size() != g) {
    throw std::invalid_argument("RolloutGroup: per-completion lists differ in length");
  }
  for (std::size_t i = 0; i < g; ++i) {
    if (log_probs[i].size() != completions[i].size() ||
        ref_log_probs[i].size() != completions[i].size()) {
      throw std::invalid_argument("RolloutGroup: per-token lists differ from completion length");
    }
  }
}

std::vector<double> normalize_advantages(std::span<const double> rewards, double epsilon) {
  if (rewards.size() < 2) {
    throw std::invalid_argument("normalize_advantages: need at least two rewards");
  }
  if (epsilon < 0) throw std::invalid_argument("normalize_advantages: negative epsilon");

  auto [lo, hi] = std::minmax_element(rewards.begin(), rewards.end());
  if (*lo == *hi) {
    // Constant rewards carry no signal; avoid ulp-level mean noise.
    return std::vector<double>(rewards.size(), 0.0);
  }

  double n = static_cast<double>(rewards.size());
  double mean = sum_of(rewards) / n;
  double var = 0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  double sigma = std::sqrt(var / n);  // population std

  std::vector<double> advantages(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    advantages[i] = (rewards[i] - mean) / (sigma + epsilon);
  }
  return advantages;
}

double kl_estimate(std::span<const double> log_probs, std::span<const double> ref_log_probs) {
  if (log_probs.size() != ref_log_probs.size()) {
    throw std::invalid_argument("kl_estimate: sequences differ in length");
  }
  double sum = 0;
  for (std::size_t i = 0; i < log_probs.size(); ++i) sum += log_probs[i] - ref_log_probs[i];
  return sum;
}

double grpo_objective(std::span<const RolloutGroup> groups, const GrpoConfig& config) {
  if (groups.empty()) throw std::invalid_argument("grpo_objective: no groups");

  double policy_term = 0;
  double kl_sum = 0;
  for (const RolloutGroup& group : groups) {
    group.validate();
    double group_term = 0;
    for (std::size_t g = 0; g < group.completions.size(); ++g) {
      group_term += group.advantages[g] * sum_of(group.log_probs[g]);
      kl_sum += kl_estimate(group.log_probs[g], group.ref_log_probs[g]);
    }
    policy_term += group_term / static_cast<double>(group.group_size());
  }
  policy_term /= static_cast<double>(groups.size());
  double mean_kl = kl_sum / static_cast<double>(total_completions(groups));
  return policy_term - config.kl_coefficient * mean_kl;
}

std::vector<RolloutGroup> collect_rollouts(const ToyPolicy& policy, const ToyPolicy& ref_policy,
                                           std::span<const Sample> batch,
                                           const RewardFn& reward_fn, const GrpoConfig& config,
                                           std::uint64_t seed) {
  config.validate();
  if (batch.empty()) throw std::invalid_argument("collect_rollouts: empty batch");

  int max_len = std::min(config.max_response_length, policy.max_len());
  std::vector<RolloutGroup> groups;
  groups.reserve(batch.size());

  for (std::size_t s = 0; s < batch.size(); ++s) {
    const Sample& sample = batch[s];
    RolloutGroup group;
    group.sample_id = sample.id;
    group.feature_id = sample.feature_id;

    for (int g = 0; g < config.group_size; ++g) {
      std::uint64_t rollout_seed = mix_seed(seed, s * 0x10000ULL + static_cast<std::uint64_t>(g));
      GenerationResult gen = generate(policy, sample, config.temperature, max_len, rollout_seed);
      std::string text = render_completion(policy, gen.tokens);

      double reward = 0;
      try {
        reward = reward_fn(sample, text);
      } catch (const std::exception& e) {
        throw std::runtime_error("grpo rollout: reward_fn failed for sample '" + sample.id +
                                 "': " + e.what());
      }

      group.ref_log_probs.push_back(
          token_log_probs(ref_policy, sample, gen.tokens, config.temperature));
      group.completions.push_back(std::move(gen.tokens));
      group.log_probs.push_back(std::move(gen.log_probs));
      group.rewards.push_back(reward);
    }
    group.advantages = normalize_advantages(group.rewards, config.epsilon);
    groups.push_back(std::move(group));
  }
  return groups;
}

double objective_for_policy(const ToyPolicy& policy, std::span<const RolloutGroup> groups,
                            const GrpoConfig& config) {
  if (groups.empty()) throw std::invalid_argument("objective_for_policy: no groups");

  double policy_term = 0;
  double kl_sum = 0;
  for (const RolloutGroup& group : groups) {
    group.validate();
    Sample probe;
    probe.feature_id = group.feature_id;
    double group_term = 0;
    for (std::size_t g = 0; g < group.completions.size(); ++g) {
      std::vector<double> lp =
          token_log_probs(policy, probe, group.completions[g], config.temperature);
      double seq_lp = sum_of(lp);
      group_term += group.advantages[g] * seq_lp;
      kl_sum += seq_lp - sum_of(group.ref_log_probs[g]);
    }
    policy_term += group_term / static_cast<double>(group.group_size());
  }
  policy_term /= static_cast<double>(groups.size());
  double mean_kl = kl_sum / static_cast<double>(total_completions(groups));
  return policy_term - config.kl_coefficient * mean_kl;
}

std::vector<double> objective_gradient(const ToyPolicy& policy,
                                       std::span<const RolloutGroup> groups,
                                       const GrpoConfig& config) {
  if (groups.empty()) throw std::invalid_argument("objective_gradient: no groups");

  std::vector<double> grad(policy.context_table().size(), 0.0);
  double n_groups = static_cast<double>(groups.size());
  double n_total = static_cast<double>(total_completions(groups));
  int vocab = policy.vocab_size();

  for (const RolloutGroup& group : groups) {
    group.validate();
    int feature = policy.feature_slot(group.feature_id);
    for (std::size_t g = 0; g < group.completions.size(); ++g) {
      // d objective / d seq-log-prob for this completion
      double weight = group.advantages[g] / (n_groups * static_cast<double>(group.group_size())) -
                      config.kl_coefficient / n_total;
      if (weight == 0) continue;

      int prev = policy.start_index();
      const std::vector<int>& tokens = group.completions[g];
      for (std::size_t t = 0; t < tokens.size(); ++t) {
        int bucket = policy.bucket_of(static_cast<int>(t));
        std::vector<double> lp = policy.row_log_probs(feature, bucket, prev, config.temperature);
        std::size_t row = policy.context_row_offset(feature, bucket, prev);
        int chosen = tokens[t];
        for (int v = 0; v < vocab; ++v) {
          double p = std::exp(lp[static_cast<std::size_t>(v)]);
          double one_hot = v == chosen ? 1.0 : 0.0;
          grad[row + static_cast<std::size_t>(v)] +=
              weight * (one_hot - p) / config.temperature;
        }
        prev = chosen;
      }
    }
  }
  return grad;
}

StepReport grpo_step(ToyPolicy& policy, const ToyPolicy& ref_policy,
                     std::span<const Sample> batch, const RewardFn& reward_fn,
                     const GrpoConfig& config, std::uint64_t rng_seed) {
  config.validate();
  std::vector<RolloutGroup> groups =
      collect_rollouts(policy, ref_policy, batch, reward_fn, config, rng_seed);

  StepReport report;
  double reward_sum = 0;
  double kl_sum = 0;
  std::size_t n = 0;
  for (const RolloutGroup& group : groups) {
    for (std::size_t g = 0; g < group.completions.size(); ++g) {
      reward_sum += group.rewards[g];
      kl_sum += kl_estimate(group.log_probs[g], group.ref_log_probs[g]);
      ++n;
    }
  }
  report.mean_reward = reward_sum / static_cast<double>(n);
  report.mean_kl = kl_sum / static_cast<double>(n);
  report.objective = grpo_objective(groups, config);

  for (int epoch = 0; epoch < config.ppo_epochs; ++epoch) {
    std::vector<double> grad = objective_gradient(policy, groups, config);
    std::span<double> table = policy.context_table();
    for (std::size_t i = 0; i < table.size(); ++i) {
      table[i] += config.learning_rate * grad[i];
    }
  }
  return report;
}

std::pair<double, double> greedy_corpus_quality(const ToyPolicy& policy,
                                                std::span<const Sample> corpus) {
  if (corpus.empty()) throw std::invalid_argument("greedy_corpus_quality: empty corpus");

  // Greedy decodes depend only on the feature slot; cache per slot.
  std::map<int, std::pair<Verdict, double>> by_slot;
  long correct = 0;
  double format_sum = 0;
  for (const Sample& sample : corpus) {
    int slot = policy.feature_slot(sample.feature_id);
    auto it = by_slot.find(slot);
    if (it == by_slot.end()) {
      GenerationResult gen = generate_greedy(policy, sample, policy.max_len());
      ParsedCompletion parsed = parse_completion(render_completion(policy, gen.tokens));
      it = by_slot.emplace(slot, std::make_pair(parsed.verdict, format_reward(parsed))).first;
    }
    const auto& [verdict, format] = it->second;
    int predicted = verdict == Verdict::kHarmful ? 1 : verdict == Verdict::kBenign ? 0 : -1;
    if (predicted == sample.label) ++correct;
    format_sum += format;
  }
  double n = static_cast<double>(corpus.size());
  return {static_cast<double>(correct) / n, format_sum / n};
}

TrainResult train_grpo(ToyPolicy& policy, const ToyPolicy& ref_policy,
                       std::span<const Sample> corpus, const RewardFn& reward_fn,
                       const GrpoConfig& config, int steps, int batch_size) {
  config.validate();
  if (corpus.empty()) throw std::invalid_argument("train_grpo: empty corpus");
  if (steps < 1) throw std::invalid_argument("train_grpo: steps must be positive");
  if (batch_size < 1) throw std::invalid_argument("train_grpo: batch_size must be positive");

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 shuffle_rng(mix_seed(config.seed, 0xba7c4));
  std::shuffle(order.begin(), order.end(), shuffle_rng);

  TrainResult result;
  result.steps.reserve(static_cast<std::size_t>(steps));
  std::size_t cursor = 0;
  for (int step = 1; step <= steps; ++step) {
    std::vector<Sample> batch;
    batch.reserve(static_cast<std::size_t>(batch_size));
    for (int i = 0; i < batch_size; ++i) {
      batch.push_back(corpus[order[cursor]]);
      cursor = (cursor + 1) % order.size();
    }

    StepReport report = grpo_step(policy, ref_policy, batch, reward_fn, config,
                                  mix_seed(config.seed, static_cast<std::uint64_t>(step)));

    TrainStepRecord record;
    record.step = step;
    record.mean_reward = report.mean_reward;
    record.mean_kl = report.mean_kl;
    record.objective = report.objective;
    auto [accuracy, mean_format] = greedy_corpus_quality(policy, corpus);
    record.greedy_accuracy = accuracy;
    record.greedy_mean_format = mean_format;
    result.steps.push_back(record);
  }
  return result;
}

}  // namespace muphirm
