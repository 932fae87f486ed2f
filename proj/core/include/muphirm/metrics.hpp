#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "muphirm/rationale.hpp"

namespace muphirm {

// Per-class confusion counts; tp+fp+tn+fn equals the number of samples.
struct ConfusionCounts {
  long tp = 0;
  long fp = 0;
  long tn = 0;
  long fn = 0;
};

struct ClassificationResult {
  double accuracy = 0;
  double macro_f1 = 0;
  ConfusionCounts harmful;
  ConfusionCounts benign;
};

// Confusion counts of `preds` against binary `golds` for class `cls`
// (0 or 1). Invalid predictions never count as positives for any class.
ConfusionCounts confusion_for_class(std::span<const Verdict> preds, std::span<const int> golds,
                                    int cls);

// Accuracy and unweighted mean of the per-class F1 scores. Invalid
// predictions are wrong for both classes. A class with no gold or
// predicted members scores F1 = 1; no gold members but spurious
// predictions scores F1 = 0. Throws on empty or mismatched input.
ClassificationResult accuracy_and_macro_f1(std::span<const Verdict> preds,
                                           std::span<const int> golds);

using Predictor = std::function<Verdict(const Sample&)>;

// Cross-dataset macro-F1 grid: one row per training dataset, one column
// per evaluation dataset, with the in-domain cell on the diagonal.
struct TransferMatrix {
  std::vector<std::string> datasets;
  std::vector<std::vector<double>> macro_f1;  // [train][eval]
  std::vector<double> delta;                  // in-domain minus mean out-of-domain
};

// Drop from in-domain performance to average out-of-domain performance.
double transfer_delta(std::span<const double> row, std::size_t in_domain_index);

// Evaluates every predictor on every dataset. Each dataset name must have
// a predictor under the same name; throws when one is missing or fewer
// than two datasets are given.
TransferMatrix transfer_matrix(
    const std::map<std::string, Predictor>& models,
    const std::vector<std::pair<std::string, std::vector<Sample>>>& datasets);

// Plain-text rendering with one row per training dataset, in-domain cells
// bracketed, and a trailing delta column.
std::string render_transfer_table(const TransferMatrix& matrix);

// Macro-F1 on a held-out-class evaluation subset. The subset may contain
// only benign samples and harmful samples of the held-out class; anything
// else throws.
double leave_one_class_out_eval(std::span<const Verdict> preds, std::span<const Sample> subset,
                                HarmClass held_out);

// Fraction of pairs whose members are both classified correctly. Throws on
// a dangling pair id or a pair without opposite gold labels.
double counterfactual_pair_accuracy(
    const std::map<std::string, Verdict>& preds, const std::map<std::string, int>& golds,
    std::span<const std::pair<std::string, std::string>> pairs);

// One judge scoring of a rationale: four 0-3 dimensions and a binary one.
struct RubricScore {
  int visual_grounding = 0;        // VG, 0-3
  int text_grounding = 0;          // TG, 0-3
  int cross_modal = 0;             // CM, 0-3
  int harm_mechanism = 0;          // HM, 0-3
  int verdict_consistency = 0;     // VC, 0-1

  void validate() const;  // throws on out-of-range values
};

struct RubricDimensionSummary {
  double valid_pct = 0;  // share of scores >= 2 (VC: = 1), in percent
  double mean = 0;
};

struct RubricReport {
  RubricDimensionSummary visual_grounding;
  RubricDimensionSummary text_grounding;
  RubricDimensionSummary cross_modal;
  RubricDimensionSummary harm_mechanism;
  RubricDimensionSummary verdict_consistency;
  std::size_t count = 0;
};

// Percentage of valid examples and mean score per rubric dimension.
RubricReport aggregate_rubric(std::span<const RubricScore> scores);

std::string render_rubric_report(const RubricReport& report);

// Formats a number to one decimal, rounding halves away from zero; table
// values are reported this way.
std::string format_one_decimal(double value);

}  // namespace muphirm
