#include "muphirm/rationale.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <vector>

namespace muphirm {
namespace {

constexpr std::string_view kGroundingTag = "[GROUNDING]";
constexpr std::string_view kInferenceTag = "[INFERENCE]";
constexpr std::string_view kVerdictTag = "[VERDICT]";

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

struct TagHit {
  std::size_t pos;   // offset of '['
  std::size_t end;   // one past ']'
  int kind;          // 0 grounding, 1 inference, 2 verdict
};

// A tag counts only when whitespace-delimited on both sides.
std::vector<TagHit> find_tags(std::string_view text) {
  std::vector<TagHit> hits;
  constexpr std::array<std::string_view, 3> tags{kGroundingTag, kInferenceTag, kVerdictTag};
  for (int kind = 0; kind < 3; ++kind) {
    std::string_view tag = tags[static_cast<std::size_t>(kind)];
    std::size_t from = 0;
    while (true) {
      std::size_t pos = text.find(tag, from);
      if (pos == std::string_view::npos) break;
      from = pos + 1;
      bool left_ok = pos == 0 || is_space(text[pos - 1]);
      std::size_t end = pos + tag.size();
      bool right_ok = end == text.size() || is_space(text[end]);
      if (left_ok && right_ok) hits.push_back({pos, end, kind});
    }
  }
  std::sort(hits.begin(), hits.end(), [](const TagHit& a, const TagHit& b) { return a.pos < b.pos; });
  return hits;
}

std::string trimmed(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

// Case-insensitive search for needle with word boundaries (non-alnum on
// both sides). Returns offsets of every occurrence.
std::vector<std::size_t> find_word_ci(std::string_view text, std::string_view needle) {
  std::vector<std::size_t> out;
  if (needle.empty() || text.size() < needle.size()) return out;
  for (std::size_t i = 0; i + needle.size() <= text.size(); ++i) {
    bool match = true;
    for (std::size_t j = 0; j < needle.size(); ++j) {
      if (lower(text[i + j]) != lower(needle[j])) {
        match = false;
        break;
      }
    }
    if (!match) continue;
    if (i > 0 && is_alnum(text[i - 1])) continue;
    std::size_t end = i + needle.size();
    if (end < text.size() && is_alnum(text[end])) continue;
    out.push_back(i);
  }
  return out;
}

// Matches "LABEL : 0/1" case-insensitively starting at `i`; the digit must
// not be followed by another digit. Returns one past the digit, or npos.
std::size_t match_label_form(std::string_view text, std::size_t i, int* value) {
  constexpr std::string_view kWord = "label";
  if (i > 0 && is_alnum(text[i - 1])) return std::string_view::npos;
  if (i + kWord.size() > text.size()) return std::string_view::npos;
  for (std::size_t j = 0; j < kWord.size(); ++j) {
    if (lower(text[i + j]) != kWord[j]) return std::string_view::npos;
  }
  std::size_t p = i + kWord.size();
  while (p < text.size() && (text[p] == ' ' || text[p] == '\t')) ++p;
  if (p >= text.size() || text[p] != ':') return std::string_view::npos;
  ++p;
  while (p < text.size() && (text[p] == ' ' || text[p] == '\t')) ++p;
  if (p >= text.size() || (text[p] != '0' && text[p] != '1')) return std::string_view::npos;
  if (p + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[p + 1]))) {
    return std::string_view::npos;
  }
  *value = text[p] - '0';
  return p + 1;
}

// Verdict from a trailing "LABEL: 0/1" line: only the last nonempty line
// qualifies, and it must contain nothing else.
Verdict trailing_label_verdict(std::string_view text) {
  std::size_t end = text.size();
  while (end > 0) {
    std::size_t begin = text.rfind('\n', end - 1);
    std::size_t line_start = begin == std::string_view::npos ? 0 : begin + 1;
    std::string_view line = text.substr(line_start, end - line_start);
    std::string t = trimmed(line);
    if (!t.empty()) {
      int value = 0;
      std::size_t after = match_label_form(t, 0, &value);
      if (after != std::string_view::npos && after == t.size()) {
        return value == 1 ? Verdict::kHarmful : Verdict::kBenign;
      }
      return Verdict::kInvalid;
    }
    if (begin == std::string_view::npos) break;
    end = begin;
  }
  return Verdict::kInvalid;
}

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kBenign: return "benign";
    case Verdict::kHarmful: return "harmful";
    case Verdict::kInvalid: return "invalid";
  }
  return "invalid";
}

std::string_view to_string(HarmClass c) {
  switch (c) {
    case HarmClass::kHateSpeech: return "hate_speech";
    case HarmClass::kPhysicalHarm: return "physical_harm";
    case HarmClass::kPorn: return "porn";
    case HarmClass::kFraud: return "fraud";
  }
  return "hate_speech";
}

std::optional<HarmClass> harm_class_from_string(std::string_view s) {
  if (s == "hate_speech") return HarmClass::kHateSpeech;
  if (s == "physical_harm") return HarmClass::kPhysicalHarm;
  if (s == "porn") return HarmClass::kPorn;
  if (s == "fraud") return HarmClass::kFraud;
  return std::nullopt;
}

DatasetId DatasetId::from_string(std::string_view s) {
  if (s == "MuPHI") return {Kind::kMuPHI, "MuPHI"};
  if (s == "FHM") return {Kind::kFHM, "FHM"};
  if (s == "HarmC") return {Kind::kHarmC, "HarmC"};
  if (s == "HarmP") return {Kind::kHarmP, "HarmP"};
  return {Kind::kOther, std::string(s)};
}

int word_count(std::string_view text) {
  int count = 0;
  bool in_token = false;
  for (char c : text) {
    if (is_space(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++count;
    }
  }
  return count;
}

Verdict extract_verdict(std::string_view verdict_text) {
  // Tier 1: explicit LABEL: 0/1 forms, last one wins.
  Verdict label_form = Verdict::kInvalid;
  for (std::size_t i = 0; i < verdict_text.size(); ++i) {
    int value = 0;
    if (match_label_form(verdict_text, i, &value) != std::string_view::npos) {
      label_form = value == 1 ? Verdict::kHarmful : Verdict::kBenign;
    }
  }
  if (label_form != Verdict::kInvalid) return label_form;

  // Tier 2: HARMFUL/BENIGN keywords, last one wins.
  auto harmful = find_word_ci(verdict_text, "HARMFUL");
  auto benign = find_word_ci(verdict_text, "BENIGN");
  if (harmful.empty() && benign.empty()) return Verdict::kInvalid;
  if (harmful.empty()) return Verdict::kBenign;
  if (benign.empty()) return Verdict::kHarmful;
  return harmful.back() > benign.back() ? Verdict::kHarmful : Verdict::kBenign;
}

ParsedCompletion parse_completion(std::string_view text) {
  ParsedCompletion out;
  out.raw = std::string(text);
  out.word_count = word_count(text);

  std::vector<TagHit> tags = find_tags(text);

  auto section_end = [&](std::size_t from_index) {
    return from_index + 1 < tags.size() ? tags[from_index + 1].pos : text.size();
  };

  int last_verdict_index = -1;
  std::vector<Verdict> verdict_assertions;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const TagHit& hit = tags[i];
    std::string_view body = text.substr(hit.end, section_end(i) - hit.end);
    switch (hit.kind) {
      case 0:
        if (out.grounding_count == 0) out.grounding_text = trimmed(body);
        ++out.grounding_count;
        break;
      case 1:
        if (out.inference_count == 0) out.inference_text = trimmed(body);
        ++out.inference_count;
        break;
      case 2:
        ++out.verdict_count;
        last_verdict_index = static_cast<int>(i);
        verdict_assertions.push_back(extract_verdict(body));
        break;
    }
  }

  if (last_verdict_index >= 0) {
    const TagHit& hit = tags[static_cast<std::size_t>(last_verdict_index)];
    std::string_view body =
        text.substr(hit.end, section_end(static_cast<std::size_t>(last_verdict_index)) - hit.end);
    out.verdict_text = trimmed(body);
    out.verdict = verdict_assertions.back();
  } else {
    out.verdict = trailing_label_verdict(text);
  }

  bool saw_harmful = false, saw_benign = false;
  for (Verdict v : verdict_assertions) {
    saw_harmful = saw_harmful || v == Verdict::kHarmful;
    saw_benign = saw_benign || v == Verdict::kBenign;
  }
  out.conflicting_verdicts = saw_harmful && saw_benign;
  return out;
}

std::string rationale_body(std::string_view completion) {
  std::vector<TagHit> tags = find_tags(completion);
  std::size_t inference_end = std::string_view::npos;
  for (const TagHit& hit : tags) {
    if (hit.kind == 1) {
      inference_end = hit.end;
      break;
    }
  }
  if (inference_end == std::string_view::npos) return std::string(completion);

  std::size_t verdict_pos = std::string_view::npos;
  for (const TagHit& hit : tags) {
    if (hit.kind == 2 && hit.pos >= inference_end) verdict_pos = hit.pos;
  }
  if (verdict_pos == std::string_view::npos) return std::string(completion);
  return std::string(completion.substr(inference_end, verdict_pos - inference_end));
}

}  // namespace muphirm
