#pragma once

#include <string_view>

#include "muphirm/lexicon.hpp"
#include "muphirm/rationale.hpp"

namespace muphirm {

// Coefficients of the evidence-alignment indicators (visual, textual,
// bridge, all-three bonus, generic penalty).
struct EvidenceWeights {
  double visual = 0.3;   // a
  double textual = 0.3;  // b
  double bridge = 0.35;  // c
  double all = 0.15;     // d
  double generic = 0.3;  // e
};

// Mixing weights of the four reward components in the total.
struct RewardWeights {
  double outcome = 5.0;
  double format = 0.15;
  double evidence = 0.07;
  double consistency = 0.02;
};

struct RewardBreakdown {
  double outcome = 0;      // in {-3, +0.2, -2.0}
  double format = 0;       // in [-1, 1]
  double evidence = 0;     // in [-0.5, 1.0]
  double consistency = 0;  // in {-0.75, -0.5, +0.35, +1.0}
  double total = 0;        // weighted sum of the four
};

// -3 for an invalid verdict, +0.2 on a match, -2.0 on a mismatch.
double outcome_reward(int gold_label, Verdict verdict);

// Structural, length, and conflict terms summed and clipped to [-1, 1]:
// +-0.25 per exactly-one grounding/inference tag, +0.25/-0.35 for exactly
// one verdict tag and for a valid non-conflicting label, +0.15 for a word
// count in [60, 240] or -0.20 below 35 / above 420, -0.50 on conflicting
// verdicts.
double format_reward(const ParsedCompletion& parsed);

// Indicator-weighted cross-modal evidence score over the full completion
// text, clamped to [-0.5, 1.0]. The all-three bonus fires only when the
// visual, textual, and bridge indicators all fire.
double evidence_reward(std::string_view completion, const Lexicon& lexicon,
                       const EvidenceWeights& weights);

// Agreement between the rationale body's phrase counts and the verdict.
// -0.5 without a valid verdict; for a harmful verdict +1.0 when harm
// phrases dominate, -0.75 on a benign-dominant body with negations, else
// +0.35; for a benign verdict -0.75 when harm phrases exceed
// benign + negated + 1, +1.0 when any benign or negated phrase appears,
// else +0.35. The -0.75 contradiction checks are evaluated first.
double consistency_reward(const ParsedCompletion& parsed, const Lexicon& lexicon);

// Parses once, evaluates all four components, and combines them.
RewardBreakdown total_reward(const Sample& sample, std::string_view completion,
                             const Lexicon& lexicon, const EvidenceWeights& evidence_weights,
                             const RewardWeights& reward_weights);

}  // namespace muphirm
