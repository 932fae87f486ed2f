#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace muphirm {

// Extracted final label of a completion. kInvalid means no parseable label
// was found; only kBenign/kHarmful ever compare equal to a gold label.
enum class Verdict { kBenign = 0, kHarmful = 1, kInvalid = 2 };

enum class HarmClass { kHateSpeech, kPhysicalHarm, kPorn, kFraud };

std::string_view to_string(Verdict v);
std::string_view to_string(HarmClass c);
std::optional<HarmClass> harm_class_from_string(std::string_view s);

// Source-dataset tag. Known benchmarks keep their canonical kind; anything
// else is kOther with the free-form name preserved.
struct DatasetId {
  enum class Kind { kMuPHI, kFHM, kHarmC, kHarmP, kOther };

  Kind kind = Kind::kOther;
  std::string name = "Other";

  static DatasetId from_string(std::string_view s);
  bool operator==(const DatasetId&) const = default;
};

// One image-text instance. The image itself is abstracted to feature_id,
// an integer index a desk-scale policy can condition on.
struct Sample {
  std::string id;
  std::string embedded_text;
  int label = 0;  // 0 = benign, 1 = harmful
  std::optional<HarmClass> harm_class;
  std::optional<std::string> harm_subclass;
  std::optional<std::string> gold_rationale;
  DatasetId dataset;
  std::optional<std::string> counterfactual_pair_id;
  int feature_id = 0;
};

// A completion decomposed into its tag sections.
//
// Tag matching is case-sensitive on the literal tokens [GROUNDING],
// [INFERENCE], [VERDICT], and a tag only counts when it stands alone as a
// whitespace-delimited token ("X[GROUNDING]Y" does not count).
struct ParsedCompletion {
  std::string raw;
  int grounding_count = 0;
  int inference_count = 0;
  int verdict_count = 0;
  std::optional<std::string> grounding_text;  // first [GROUNDING] section
  std::optional<std::string> inference_text;  // first [INFERENCE] section
  std::optional<std::string> verdict_text;    // last [VERDICT] section
  Verdict verdict = Verdict::kInvalid;
  int word_count = 0;
  bool conflicting_verdicts = false;
};

// Total over arbitrary input: malformed text yields verdict = kInvalid,
// never a failure.
//
// The final verdict comes from the text after the last [VERDICT] tag. When
// no verdict tag is present, a trailing line of the form "LABEL: 0" or
// "LABEL: 1" (the last nonempty line) still defines it. conflicting_verdicts
// is set when two verdict-bearing sections extract valid but disagreeing
// labels.
ParsedCompletion parse_completion(std::string_view text);

// Case-insensitive label extraction from a verdict section body. An
// explicit "LABEL: 0/1" form outranks HARMFUL/BENIGN keyword mentions;
// within a tier the last occurrence wins. kInvalid when neither appears.
Verdict extract_verdict(std::string_view verdict_text);

// Number of maximal whitespace-delimited tokens.
int word_count(std::string_view text);

// The rationale portion of a completion: text after the first [INFERENCE]
// tag and before the following [VERDICT] tag. When either tag is missing
// the whole completion is used, so phrase-count rewards stay defined for
// malformed output.
std::string rationale_body(std::string_view completion);

}  // namespace muphirm
