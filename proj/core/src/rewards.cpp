#include "muphirm/rewards.hpp"

#include <algorithm>

namespace muphirm {

double outcome_reward(int gold_label, Verdict verdict) {
  if (verdict == Verdict::kInvalid) return -3.0;
  int predicted = verdict == Verdict::kHarmful ? 1 : 0;
  return predicted == gold_label ? 0.2 : -2.0;
}

double format_reward(const ParsedCompletion& parsed) {
  double grounding = parsed.grounding_count == 1 ? 0.25 : -0.25;
  double inference = parsed.inference_count == 1 ? 0.25 : -0.25;
  double verdict_tag = parsed.verdict_count == 1 ? 0.25 : -0.35;

  bool valid_single_label =
      parsed.verdict != Verdict::kInvalid && !parsed.conflicting_verdicts;
  double label = valid_single_label ? 0.25 : -0.35;

  double length = 0.0;
  if (parsed.word_count >= 60 && parsed.word_count <= 240) {
    length = 0.15;
  } else if (parsed.word_count < 35 || parsed.word_count > 420) {
    length = -0.20;
  }

  double conflict = parsed.conflicting_verdicts ? -0.50 : 0.0;

  double sum = grounding + inference + verdict_tag + label + length + conflict;
  return std::clamp(sum, -1.0, 1.0);
}

double evidence_reward(std::string_view completion, const Lexicon& lexicon,
                       const EvidenceWeights& weights) {
  int visual = indicator(completion, lexicon.visual_terms);
  int textual = indicator(completion, lexicon.textual_terms);
  int bridge = indicator(completion, lexicon.bridge_terms);
  int all = (visual == 1 && textual == 1 && bridge == 1) ? 1 : 0;
  int generic = indicator(completion, lexicon.generic_patterns);

  double score = weights.visual * visual + weights.textual * textual +
                 weights.bridge * bridge + weights.all * all - weights.generic * generic;
  return std::max(-0.5, std::min(1.0, score));
}

double consistency_reward(const ParsedCompletion& parsed, const Lexicon& lexicon) {
  if (parsed.verdict == Verdict::kInvalid) return -0.5;

  PhraseCounts c = phrase_counts(rationale_body(parsed.raw), lexicon);
  if (parsed.verdict == Verdict::kHarmful) {
    if (c.benign > c.harm && c.negated > 0) return -0.75;
    if (c.harm > c.benign) return 1.0;
    return 0.35;
  }
  // Benign verdict: the contradiction check comes before the support check.
  if (c.harm > c.benign + c.negated + 1) return -0.75;
  if (c.benign > 0 || c.negated > 0) return 1.0;
  return 0.35;
}

RewardBreakdown total_reward(const Sample& sample, std::string_view completion,
                             const Lexicon& lexicon, const EvidenceWeights& evidence_weights,
                             const RewardWeights& reward_weights) {
  ParsedCompletion parsed = parse_completion(completion);

  RewardBreakdown r;
  r.outcome = outcome_reward(sample.label, parsed.verdict);
  r.format = format_reward(parsed);
  r.evidence = evidence_reward(completion, lexicon, evidence_weights);
  r.consistency = consistency_reward(parsed, lexicon);
  r.total = reward_weights.outcome * r.outcome + reward_weights.format * r.format +
            reward_weights.evidence * r.evidence + reward_weights.consistency * r.consistency;
  return r;
}

}  // namespace muphirm
