#include "muphirm/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace muphirm {
namespace {

double f1_from_counts(const ConfusionCounts& c) {
  long denom = 2 * c.tp + c.fp + c.fn;
  if (denom == 0) return 1.0;  // class absent from golds and preds
  return 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

int predicted_class(Verdict v) {
  switch (v) {
    case Verdict::kBenign: return 0;
    case Verdict::kHarmful: return 1;
    case Verdict::kInvalid: return -1;
  }
  return -1;
}

}  // namespace

ConfusionCounts confusion_for_class(std::span<const Verdict> preds, std::span<const int> golds,
                                    int cls) {
  ConfusionCounts c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    bool predicted = predicted_class(preds[i]) == cls;
    bool actual = golds[i] == cls;
    if (predicted && actual) ++c.tp;
    else if (predicted && !actual) ++c.fp;
    else if (!predicted && actual) ++c.fn;
    else ++c.tn;
  }
  return c;
}

ClassificationResult accuracy_and_macro_f1(std::span<const Verdict> preds,
                                           std::span<const int> golds) {
  if (preds.empty()) throw std::invalid_argument("accuracy_and_macro_f1: empty input");
  if (preds.size() != golds.size()) {
    throw std::invalid_argument("accuracy_and_macro_f1: preds and golds differ in length");
  }

  ClassificationResult r;
  long correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (predicted_class(preds[i]) == golds[i]) ++correct;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(preds.size());
  r.harmful = confusion_for_class(preds, golds, 1);
  r.benign = confusion_for_class(preds, golds, 0);
  r.macro_f1 = 0.5 * (f1_from_counts(r.harmful) + f1_from_counts(r.benign));
  return r;
}

double transfer_delta(std::span<const double> row, std::size_t in_domain_index) {
  if (row.size() < 2) throw std::invalid_argument("transfer_delta: need at least two datasets");
  if (in_domain_index >= row.size()) {
    throw std::invalid_argument("transfer_delta: in-domain index out of range");
  }
  double out_sum = 0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i != in_domain_index) out_sum += row[i];
  }
  double out_mean = out_sum / static_cast<double>(row.size() - 1);
  return row[in_domain_index] - out_mean;
}

TransferMatrix transfer_matrix(
    const std::map<std::string, Predictor>& models,
    const std::vector<std::pair<std::string, std::vector<Sample>>>& datasets) {
  if (datasets.size() < 2) {
    throw std::invalid_argument("transfer_matrix: need at least two datasets");
  }

  TransferMatrix m;
  for (const auto& [name, samples] : datasets) {
    if (models.find(name) == models.end()) {
      throw std::runtime_error("transfer_matrix: missing predictor for dataset '" + name + "'");
    }
    if (samples.empty()) {
      throw std::invalid_argument("transfer_matrix: dataset '" + name + "' is empty");
    }
    m.datasets.push_back(name);
  }

  for (const auto& [train_name, _] : datasets) {
    const Predictor& predictor = models.at(train_name);
    std::vector<double> row;
    for (const auto& [eval_name, samples] : datasets) {
      std::vector<Verdict> preds;
      std::vector<int> golds;
      preds.reserve(samples.size());
      golds.reserve(samples.size());
      for (const Sample& s : samples) {
        preds.push_back(predictor(s));
        golds.push_back(s.label);
      }
      row.push_back(accuracy_and_macro_f1(preds, golds).macro_f1);
    }
    m.macro_f1.push_back(std::move(row));
  }

  for (std::size_t i = 0; i < m.macro_f1.size(); ++i) {
    m.delta.push_back(transfer_delta(m.macro_f1[i], i));
  }
  return m;
}

std::string render_transfer_table(const TransferMatrix& matrix) {
  std::ostringstream out;
  out << "train";
  for (const std::string& name : matrix.datasets) out << "\t->" << name;
  out << "\tdelta\n";
  for (std::size_t r = 0; r < matrix.datasets.size(); ++r) {
    out << matrix.datasets[r];
    for (std::size_t c = 0; c < matrix.datasets.size(); ++c) {
      std::string cell = format_one_decimal(matrix.macro_f1[r][c] * 100.0);
      if (r == c) {
        out << "\t[" << cell << "]";
      } else {
        out << "\t" << cell;
      }
    }
    out << "\t" << format_one_decimal(matrix.delta[r] * 100.0) << "\n";
  }
  return out.str();
}

double leave_one_class_out_eval(std::span<const Verdict> preds, std::span<const Sample> subset,
                                HarmClass held_out) {
  if (subset.empty()) throw std::invalid_argument("leave_one_class_out_eval: empty subset");
  if (preds.size() != subset.size()) {
    throw std::invalid_argument("leave_one_class_out_eval: preds and subset differ in length");
  }
  std::vector<int> golds;
  golds.reserve(subset.size());
  for (const Sample& s : subset) {
    if (s.label == 1 && (!s.harm_class.has_value() || *s.harm_class != held_out)) {
      throw std::invalid_argument(
          "leave_one_class_out_eval: harmful sample '" + s.id +
          "' is not of the held-out class");
    }
    golds.push_back(s.label);
  }
  return accuracy_and_macro_f1(preds, golds).macro_f1;
}

double counterfactual_pair_accuracy(
    const std::map<std::string, Verdict>& preds, const std::map<std::string, int>& golds,
    std::span<const std::pair<std::string, std::string>> pairs) {
  if (pairs.empty()) throw std::invalid_argument("counterfactual_pair_accuracy: no pairs");

  auto lookup = [&](const std::string& id) {
    auto p = preds.find(id);
    auto g = golds.find(id);
    if (p == preds.end() || g == golds.end()) {
      throw std::runtime_error("counterfactual_pair_accuracy: dangling pair id '" + id + "'");
    }
    return std::make_pair(p->second, g->second);
  };

  long both_correct = 0;
  for (const auto& [id_a, id_b] : pairs) {
    auto [pred_a, gold_a] = lookup(id_a);
    auto [pred_b, gold_b] = lookup(id_b);
    if (gold_a == gold_b) {
      throw std::runtime_error("counterfactual_pair_accuracy: pair (" + id_a + ", " + id_b +
                               ") does not have opposite labels");
    }
    bool a_ok = predicted_class(pred_a) == gold_a;
    bool b_ok = predicted_class(pred_b) == gold_b;
    if (a_ok && b_ok) ++both_correct;
  }
  return static_cast<double>(both_correct) / static_cast<double>(pairs.size());
}

void RubricScore::validate() const {
  auto check = [](int value, int hi, const char* dim) {
    if (value < 0 || value > hi) {
      throw std::invalid_argument(std::string("rubric score out of range for ") + dim);
    }
  };
  check(visual_grounding, 3, "visual_grounding");
  check(text_grounding, 3, "text_grounding");
  check(cross_modal, 3, "cross_modal");
  check(harm_mechanism, 3, "harm_mechanism");
  check(verdict_consistency, 1, "verdict_consistency");
}

RubricReport aggregate_rubric(std::span<const RubricScore> scores) {
  if (scores.empty()) throw std::invalid_argument("aggregate_rubric: empty score list");

  auto summarize = [&](auto field, int valid_threshold) {
    RubricDimensionSummary s;
    long valid = 0;
    double sum = 0;
    for (const RubricScore& score : scores) {
      int value = field(score);
      if (value >= valid_threshold) ++valid;
      sum += value;
    }
    s.valid_pct = 100.0 * static_cast<double>(valid) / static_cast<double>(scores.size());
    s.mean = sum / static_cast<double>(scores.size());
    return s;
  };

  for (const RubricScore& score : scores) score.validate();

  RubricReport report;
  report.visual_grounding = summarize([](const RubricScore& s) { return s.visual_grounding; }, 2);
  report.text_grounding = summarize([](const RubricScore& s) { return s.text_grounding; }, 2);
  report.cross_modal = summarize([](const RubricScore& s) { return s.cross_modal; }, 2);
  report.harm_mechanism = summarize([](const RubricScore& s) { return s.harm_mechanism; }, 2);
  report.verdict_consistency =
      summarize([](const RubricScore& s) { return s.verdict_consistency; }, 1);
  report.count = scores.size();
  return report;
}

std::string render_rubric_report(const RubricReport& report) {
  std::ostringstream out;
  out << "dimension\tvalid_pct\tmean\n";
  auto row = [&](const char* name, const RubricDimensionSummary& s) {
    out << name << "\t" << format_one_decimal(s.valid_pct) << "\t"
        << format_one_decimal(s.mean) << "\n";
  };
  row("VG", report.visual_grounding);
  row("TG", report.text_grounding);
  row("CM", report.cross_modal);
  row("HM", report.harm_mechanism);
  row("VC", report.verdict_consistency);
  return out.str();
}

std::string format_one_decimal(double value) {
  double scaled = value * 10.0;
  double rounded = std::round(scaled);  // halves away from zero
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f", rounded / 10.0);
  return std::string(buf);
}

}  // namespace muphirm
