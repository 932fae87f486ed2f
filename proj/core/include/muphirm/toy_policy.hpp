#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "muphirm/rationale.hpp"

namespace muphirm {

// A small autoregressive categorical policy over a template-token
// vocabulary, the desk-scale stand-in for a VLM. The policy conditions on
// a sample's feature_id (the image proxy), a position bucket, and the
// previous token; logits live in a dense table. An end-of-sequence token
// is appended to the supplied vocabulary and renders as nothing.
//
// Generation is read-only on parameters and safe to call concurrently;
// sft_warmup and gradient updates need exclusive access.
class ToyPolicy {
 public:
  // Tokens may contain spaces (they render joined by single spaces) but
  // not newlines. Throws on duplicate or newline-bearing tokens.
  ToyPolicy(std::vector<std::string> vocab, int n_features, int n_buckets, int max_len);

  int vocab_size() const { return static_cast<int>(vocab_.size()); }
  const std::vector<std::string>& vocab() const { return vocab_; }
  int n_features() const { return n_features_; }
  int n_buckets() const { return n_buckets_; }
  int max_len() const { return max_len_; }
  int eos_index() const { return eos_; }

  // Pseudo previous-token index used at the first position.
  int start_index() const { return vocab_size(); }

  // Index of an exact token string, or -1.
  int token_index(std::string_view token) const;

  int bucket_of(int position) const;
  int feature_slot(int feature_id) const;

  // Flat logits, laid out [feature][bucket][previous-token][token].
  std::span<double> context_table() { return context_table_; }
  std::span<const double> context_table() const { return context_table_; }
  std::size_t context_row_offset(int feature_slot, int bucket, int prev) const;

  // Classification head, laid out [feature][2], logit order (benign, harmful).
  std::span<double> cls_head() { return cls_head_; }
  std::span<const double> cls_head() const { return cls_head_; }

  // log softmax(row / temperature); temperature must be positive.
  std::vector<double> row_log_probs(int feature_slot, int bucket, int prev,
                                    double temperature) const;

  // True when the vocabulary carries the three structural tags and both
  // label tokens.
  bool has_rationale_vocab() const;

 private:
  std::vector<std::string> vocab_;
  int n_features_;
  int n_buckets_;
  int max_len_;
  int eos_;
  std::vector<double> context_table_;
  std::vector<double> cls_head_;
};

// The standard desk-scale policy: structural tags, label tokens, and
// multi-word phrase tokens aligned with the default lexicon so a
// well-formed template completion earns full format and evidence rewards.
ToyPolicy make_rationale_policy(int n_features, int max_len = 12);

struct GenerationResult {
  std::vector<int> tokens;        // includes the end token when sampled
  std::vector<double> log_probs;  // exact under the sampling distribution
};

// Ancestral sampling up to max_len tokens or the end token. Identical
// seeds give identical results.
GenerationResult generate(const ToyPolicy& policy, const Sample& sample, double temperature,
                          int max_len, std::uint64_t seed);

// Deterministic argmax decoding (the temperature -> 0 limit).
GenerationResult generate_greedy(const ToyPolicy& policy, const Sample& sample, int max_len);

// Joins tokens with single spaces, skipping the end token.
std::string render_completion(const ToyPolicy& policy, std::span<const int> tokens);

// Per-token log-probabilities of a fixed token sequence (teacher forcing).
// Throws on out-of-range token ids.
std::vector<double> token_log_probs(const ToyPolicy& policy, const Sample& sample,
                                    std::span<const int> tokens, double temperature);

// Sum of per-token log-probabilities at temperature 1.
double sequence_log_prob(const ToyPolicy& policy, const Sample& sample,
                         std::span<const int> tokens);

struct SftResult {
  std::vector<double> epoch_loss;  // mean cross-entropy at the start of each epoch
};

// Warmup: full-batch gradient descent of the classification head's
// cross-entropy against gold labels. Afterwards the verdict-token
// distribution is initialized from the head: the logits of HARMFUL/BENIGN
// after a [VERDICT] token are set from cls_head, so the warm policy's
// greedy verdict matches the head's prediction. Requires the rationale
// vocabulary; throws on an empty training set.
SftResult sft_warmup(ToyPolicy& policy, std::span<const Sample> train, int epochs, double lr,
                     std::uint64_t seed);

// Gaussian-ish parameter noise for randomized test instances.
void randomize_parameters(ToyPolicy& policy, double scale, std::uint64_t seed);

// Versioned text checkpoint; parameters round-trip bit-exactly.
void save_checkpoint(const ToyPolicy& policy, const std::filesystem::path& path);
ToyPolicy load_checkpoint(const std::filesystem::path& path);

}  // namespace muphirm
