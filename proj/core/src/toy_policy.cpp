#include "muphirm/toy_policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace muphirm {
namespace {

constexpr std::string_view kCheckpointMagic = "muphirm-policy-v1";
constexpr std::string_view kEosToken = "</s>";

double uniform_unit(std::mt19937_64& rng) {
  // 53-bit mantissa in [0, 1); engine output is standardized, so this is
  // reproducible across platforms (std distributions are not).
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<double> softmax_from_log_probs(const std::vector<double>& log_probs) {
  std::vector<double> p(log_probs.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(log_probs[i]);
  return p;
}

}  // namespace

ToyPolicy::ToyPolicy(std::vector<std::string> vocab, int n_features, int n_buckets, int max_len)
    : vocab_(std::move(vocab)), n_features_(n_features), n_buckets_(n_buckets),
      max_len_(max_len) {
  if (vocab_.empty()) throw std::invalid_argument("ToyPolicy: empty vocabulary");
  if (n_features_ < 1 || n_buckets_ < 1 || max_len_ < 1) {
    throw std::invalid_argument("ToyPolicy: dimensions must be positive");
  }
  std::set<std::string_view> seen;
  for (const std::string& token : vocab_) {
    if (token.find('\n') != std::string::npos) {
      throw std::invalid_argument("ToyPolicy: token contains a newline: " + token);
    }
    if (!seen.insert(token).second) {
      throw std::invalid_argument("ToyPolicy: duplicate token: " + token);
    }
  }
  if (seen.count(kEosToken) > 0) {
    throw std::invalid_argument("ToyPolicy: the end token is reserved");
  }
  vocab_.push_back(std::string(kEosToken));
  eos_ = static_cast<int>(vocab_.size()) - 1;

  std::size_t v = vocab_.size();
  context_table_.assign(static_cast<std::size_t>(n_features_) * n_buckets_ * (v + 1) * v, 0.0);
  cls_head_.assign(static_cast<std::size_t>(n_features_) * 2, 0.0);
}

int ToyPolicy::token_index(std::string_view token) const {
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (vocab_[i] == token) return static_cast<int>(i);
  }
  return -1;
}

int ToyPolicy::bucket_of(int position) const {
  return std::min(position, n_buckets_ - 1);
}

int ToyPolicy::feature_slot(int feature_id) const {
  if (feature_id < 0) throw std::invalid_argument("ToyPolicy: negative feature_id");
  return feature_id % n_features_;
}

std::size_t ToyPolicy::context_row_offset(int feature_slot, int bucket, int prev) const {
  std::size_t v = vocab_.size();
  return ((static_cast<std::size_t>(feature_slot) * n_buckets_ + bucket) * (v + 1) + prev) * v;
}

std::vector<double> ToyPolicy::row_log_probs(int feature_slot, int bucket, int prev,
                                             double temperature) const {
  if (temperature <= 0) throw std::invalid_argument("ToyPolicy: temperature must be positive");
  std::size_t offset = context_row_offset(feature_slot, bucket, prev);
  std::size_t v = vocab_.size();

  std::vector<double> z(v);
  double max_z = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v; ++i) {
    z[i] = context_table_[offset + i] / temperature;
    max_z = std::max(max_z, z[i]);
  }
  double sum = 0;
  for (std::size_t i = 0; i < v; ++i) sum += std::exp(z[i] - max_z);
  double log_norm = max_z + std::log(sum);
  for (std::size_t i = 0; i < v; ++i) z[i] -= log_norm;
  return z;
}

bool ToyPolicy::has_rationale_vocab() const {
  return token_index("[GROUNDING]") >= 0 && token_index("[INFERENCE]") >= 0 &&
         token_index("[VERDICT]") >= 0 && token_index("HARMFUL") >= 0 &&
         token_index("BENIGN") >= 0;
}

ToyPolicy make_rationale_policy(int n_features, int max_len) {
  // Phrase tokens are chosen so a one-of-each-tag template completion
  // lands above the 35-word format floor and fires the default lexicon's
  // visual, textual, and bridge indicators.
  std::vector<std::string> vocab = {
      "[GROUNDING]",
      "[INFERENCE]",
      "[VERDICT]",
      "HARMFUL",
      "BENIGN",
      "the image shows a person holding a sign in a busy scene",
      "the caption text reads bold words across the top",
      "together the image and text because of their pairing implies a clear message",
      "this pairing promotes violence and incites hatred against the group",
      "the message is harmless and positive with no threat present",
      "overall the composition is striking and memorable to viewers",
      "the sign and the words form one combined statement for the audience",
      "viewers see the scene and the caption as a single unit",
  };
  int n_buckets = std::min(max_len, 12);
  return ToyPolicy(std::move(vocab), n_features, n_buckets, max_len);
}

GenerationResult generate(const ToyPolicy& policy, const Sample& sample, double temperature,
                          int max_len, std::uint64_t seed) {
  if (temperature <= 0) throw std::invalid_argument("generate: temperature must be positive");
  std::mt19937_64 rng(seed);
  int feature = policy.feature_slot(sample.feature_id);
  int limit = std::min(max_len, policy.max_len());

  GenerationResult result;
  int prev = policy.start_index();
  for (int t = 0; t < limit; ++t) {
    std::vector<double> lp = policy.row_log_probs(feature, policy.bucket_of(t), prev, temperature);
    std::vector<double> p = softmax_from_log_probs(lp);

    double u = uniform_unit(rng);
    int token = policy.vocab_size() - 1;
    double cumulative = 0;
    for (int v = 0; v < policy.vocab_size(); ++v) {
      cumulative += p[static_cast<std::size_t>(v)];
      if (u < cumulative) {
        token = v;
        break;
      }
    }

    result.tokens.push_back(token);
    result.log_probs.push_back(lp[static_cast<std::size_t>(token)]);
    if (token == policy.eos_index()) break;
    prev = token;
  }
  return result;
}

GenerationResult generate_greedy(const ToyPolicy& policy, const Sample& sample, int max_len) {
  int feature = policy.feature_slot(sample.feature_id);
  int limit = std::min(max_len, policy.max_len());

  GenerationResult result;
  int prev = policy.start_index();
  for (int t = 0; t < limit; ++t) {
    std::vector<double> lp = policy.row_log_probs(feature, policy.bucket_of(t), prev, 1.0);
    int token = static_cast<int>(std::max_element(lp.begin(), lp.end()) - lp.begin());
    result.tokens.push_back(token);
    result.log_probs.push_back(lp[static_cast<std::size_t>(token)]);
    if (token == policy.eos_index()) break;
    prev = token;
  }
  return result;
}

std::string render_completion(const ToyPolicy& policy, std::span<const int> tokens) {
  std::string text;
  for (int token : tokens) {
    if (token == policy.eos_index()) continue;
    if (token < 0 || token >= policy.vocab_size()) {
      throw std::invalid_argument("render_completion: token id out of range");
    }
    if (!text.empty()) text.push_back(' ');
    text += policy.vocab()[static_cast<std::size_t>(token)];
  }
  return text;
}

std::vector<double> token_log_probs(const ToyPolicy& policy, const Sample& sample,
                                    std::span<const int> tokens, double temperature) {
  int feature = policy.feature_slot(sample.feature_id);
  std::vector<double> out;
  out.reserve(tokens.size());
  int prev = policy.start_index();
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    int token = tokens[t];
    if (token < 0 || token >= policy.vocab_size()) {
      throw std::invalid_argument("token_log_probs: unknown token id");
    }
    std::vector<double> lp =
        policy.row_log_probs(feature, policy.bucket_of(static_cast<int>(t)), prev, temperature);
    out.push_back(lp[static_cast<std::size_t>(token)]);
    prev = token;
  }
  return out;
}

double sequence_log_prob(const ToyPolicy& policy, const Sample& sample,
                         std::span<const int> tokens) {
  std::vector<double> lp = token_log_probs(policy, sample, tokens, 1.0);
  double sum = 0;
  for (double x : lp) sum += x;
  return sum;
}

SftResult sft_warmup(ToyPolicy& policy, std::span<const Sample> train, int epochs, double lr,
                     std::uint64_t seed) {
  (void)seed;  // full-batch descent; recorded in run artifacts, not used here
  if (train.empty()) throw std::invalid_argument("sft_warmup: empty training set");
  if (!policy.has_rationale_vocab()) {
    throw std::invalid_argument("sft_warmup: policy lacks the rationale vocabulary");
  }
  if (epochs < 1) throw std::invalid_argument("sft_warmup: epochs must be positive");

  std::span<double> head = policy.cls_head();
  SftResult result;
  result.epoch_loss.reserve(static_cast<std::size_t>(epochs));
  std::vector<double> grad(head.size());

  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0;
    for (const Sample& s : train) {
      int f = policy.feature_slot(s.feature_id);
      double z0 = head[static_cast<std::size_t>(2 * f)];
      double z1 = head[static_cast<std::size_t>(2 * f + 1)];
      double m = std::max(z0, z1);
      double log_norm = m + std::log(std::exp(z0 - m) + std::exp(z1 - m));
      double lp0 = z0 - log_norm;
      double lp1 = z1 - log_norm;
      loss += s.label == 1 ? -lp1 : -lp0;
      double p0 = std::exp(lp0);
      double p1 = std::exp(lp1);
      grad[static_cast<std::size_t>(2 * f)] += p0 - (s.label == 0 ? 1.0 : 0.0);
      grad[static_cast<std::size_t>(2 * f + 1)] += p1 - (s.label == 1 ? 1.0 : 0.0);
    }
    double n = static_cast<double>(train.size());
    result.epoch_loss.push_back(loss / n);
    for (std::size_t i = 0; i < head.size(); ++i) head[i] -= lr * grad[i] / n;
  }

  // Warm-start the verdict token distribution from the trained head.
  int verdict_tag = policy.token_index("[VERDICT]");
  int harmful = policy.token_index("HARMFUL");
  int benign = policy.token_index("BENIGN");
  for (int f = 0; f < policy.n_features(); ++f) {
    for (int b = 0; b < policy.n_buckets(); ++b) {
      std::size_t row = policy.context_row_offset(f, b, verdict_tag);
      policy.context_table()[row + static_cast<std::size_t>(benign)] =
          head[static_cast<std::size_t>(2 * f)];
      policy.context_table()[row + static_cast<std::size_t>(harmful)] =
          head[static_cast<std::size_t>(2 * f + 1)];
    }
  }
  return result;
}

void randomize_parameters(ToyPolicy& policy, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto noise = [&]() {
    // sum of uniforms, mean 0; good enough for test instances
    double s = 0;
    for (int i = 0; i < 4; ++i) s += uniform_unit(rng) - 0.5;
    return scale * s;
  };
  for (double& w : policy.context_table()) w = noise();
  for (double& w : policy.cls_head()) w = noise();
}

void save_checkpoint(const ToyPolicy& policy, const std::filesystem::path& path) {
  std::ostringstream out;
  out << kCheckpointMagic << "\n";
  out << policy.n_features() << " " << policy.n_buckets() << " "
      << (policy.vocab_size() - 1) << " " << policy.max_len() << "\n";
  for (int i = 0; i + 1 < policy.vocab_size(); ++i) {
    out << policy.vocab()[static_cast<std::size_t>(i)] << "\n";
  }

  char buf[64];
  auto emit = [&](std::span<const double> values, std::string_view name) {
    out << name << " " << values.size() << "\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%a", values[i]);
      out << buf << (i + 1 == values.size() ? "\n" : " ");
    }
  };
  emit(policy.context_table(), "context_table");
  emit(policy.cls_head(), "cls_head");

  std::ofstream file(path, std::ios::trunc);
  if (!file) throw std::runtime_error("cannot write checkpoint: " + path.string());
  file << out.str();
  if (!file.flush()) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

ToyPolicy load_checkpoint(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) throw std::runtime_error("cannot open checkpoint: " + path.string());

  std::string line;
  if (!std::getline(file, line) || line != kCheckpointMagic) {
    throw std::runtime_error("not a policy checkpoint (bad header): " + path.string());
  }
  int n_features = 0, n_buckets = 0, vocab_size = 0, max_len = 0;
  if (!(file >> n_features >> n_buckets >> vocab_size >> max_len) || vocab_size < 1) {
    throw std::runtime_error("corrupt checkpoint dimensions: " + path.string());
  }
  std::getline(file, line);  // finish the dimension line

  std::vector<std::string> vocab;
  vocab.reserve(static_cast<std::size_t>(vocab_size));
  for (int i = 0; i < vocab_size; ++i) {
    if (!std::getline(file, line)) {
      throw std::runtime_error("corrupt checkpoint vocabulary: " + path.string());
    }
    vocab.push_back(line);
  }

  ToyPolicy policy(std::move(vocab), n_features, n_buckets, max_len);

  auto read_block = [&](std::span<double> target, std::string_view name) {
    std::string label;
    std::size_t count = 0;
    if (!(file >> label >> count) || label != name || count != target.size()) {
      throw std::runtime_error("corrupt checkpoint block '" + std::string(name) +
                               "': " + path.string());
    }
    std::string token;
    for (std::size_t i = 0; i < count; ++i) {
      if (!(file >> token)) {
        throw std::runtime_error("truncated checkpoint block '" + std::string(name) +
                                 "': " + path.string());
      }
      target[i] = std::strtod(token.c_str(), nullptr);
    }
  };
  read_block(policy.context_table(), "context_table");
  read_block(policy.cls_head(), "cls_head");
  return policy;
}

}  // namespace muphirm
