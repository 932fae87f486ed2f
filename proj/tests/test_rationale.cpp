#include "muphirm/rationale.hpp"

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

using namespace muphirm;

namespace {

// Independent whitespace-token counter for the word_count oracle.
int split_count(const std::string& text) {
  std::istringstream in(text);
  std::string token;
  int n = 0;
  while (in >> token) ++n;
  return n;
}

}  // namespace

TEST_CASE("word_count basics") {
  CHECK(word_count("") == 0);
  CHECK(word_count("a b  c") == 3);
  CHECK(word_count("   ") == 0);
  CHECK(word_count("\tone\ntwo three ") == 3);
}

TEST_CASE("word_count matches an independent splitter on a 240-token fixture") {
  std::string fixture;
  for (int i = 0; i < 240; ++i) {
    if (i > 0) fixture += i % 7 == 0 ? "\n" : " ";
    fixture += "tok" + std::to_string(i);
  }
  CHECK(split_count(fixture) == 240);
  CHECK(word_count(fixture) == 240);
}

TEST_CASE("extract_verdict keyword and label forms") {
  CHECK(extract_verdict("HARMFUL because ...") == Verdict::kHarmful);
  CHECK(extract_verdict("LABEL: 0") == Verdict::kBenign);
  CHECK(extract_verdict("label : 1") == Verdict::kHarmful);
  CHECK(extract_verdict("this is benign") == Verdict::kBenign);
  CHECK(extract_verdict("") == Verdict::kInvalid);
  CHECK(extract_verdict("nothing to see") == Verdict::kInvalid);
}

TEST_CASE("extract_verdict precedence: LABEL line outranks keywords") {
  CHECK(extract_verdict("this is harmful. LABEL: 0") == Verdict::kBenign);
  CHECK(extract_verdict("BENIGN ... LABEL: 1 trailing words") == Verdict::kHarmful);
}

TEST_CASE("extract_verdict last occurrence wins within a tier") {
  CHECK(extract_verdict("HARMFUL no wait BENIGN") == Verdict::kBenign);
  CHECK(extract_verdict("LABEL: 1 ... LABEL: 0") == Verdict::kBenign);
}

TEST_CASE("extract_verdict word boundaries") {
  CHECK(extract_verdict("unharmful content here") == Verdict::kInvalid);
  CHECK(extract_verdict("harmfully phrased") == Verdict::kInvalid);
  CHECK(extract_verdict("LABEL: 10") == Verdict::kInvalid);
  CHECK(extract_verdict("mislabel: 1") == Verdict::kInvalid);
}

TEST_CASE("parse_completion minimal well-formed completion") {
  ParsedCompletion p = parse_completion("[GROUNDING] a [INFERENCE] b [VERDICT] HARMFUL");
  CHECK(p.grounding_count == 1);
  CHECK(p.inference_count == 1);
  CHECK(p.verdict_count == 1);
  CHECK(p.verdict == Verdict::kHarmful);
  CHECK_FALSE(p.conflicting_verdicts);
  CHECK(p.word_count == 6);
  CHECK(p.grounding_text.value() == "a");
  CHECK(p.inference_text.value() == "b");
  CHECK(p.verdict_text.value() == "HARMFUL");
}

TEST_CASE("parse_completion empty input") {
  ParsedCompletion p = parse_completion("");
  CHECK(p.grounding_count == 0);
  CHECK(p.inference_count == 0);
  CHECK(p.verdict_count == 0);
  CHECK(p.verdict == Verdict::kInvalid);
  CHECK(p.word_count == 0);
  CHECK_FALSE(p.conflicting_verdicts);
  CHECK_FALSE(p.grounding_text.has_value());
}

TEST_CASE("parse_completion conflicting verdicts") {
  // Hand trace: two verdict tags; first section extracts Harmful, second
  // Benign; final verdict comes from the last section.
  ParsedCompletion p = parse_completion("[VERDICT] HARMFUL ... [VERDICT] BENIGN");
  CHECK(p.verdict_count == 2);
  CHECK(p.conflicting_verdicts);
  CHECK(p.verdict == Verdict::kBenign);
}

TEST_CASE("parse_completion agreeing duplicate verdicts do not conflict") {
  ParsedCompletion p = parse_completion("[VERDICT] HARMFUL and [VERDICT] HARMFUL again");
  CHECK(p.verdict_count == 2);
  CHECK_FALSE(p.conflicting_verdicts);
  CHECK(p.verdict == Verdict::kHarmful);
}

TEST_CASE("tag counting requires stand-alone tags") {
  ParsedCompletion p = parse_completion("X[GROUNDING]Y sees [INFERENCE] things");
  CHECK(p.grounding_count == 0);
  CHECK(p.inference_count == 1);

  // Tags are case-sensitive.
  CHECK(parse_completion("[grounding] x").grounding_count == 0);
}

TEST_CASE("verdict from a trailing LABEL line without verdict tags") {
  ParsedCompletion p = parse_completion("some freeform analysis\nLABEL: 1\n");
  CHECK(p.verdict_count == 0);
  CHECK(p.verdict == Verdict::kHarmful);

  // Only the last nonempty line counts.
  ParsedCompletion q = parse_completion("LABEL: 1\nmore words after");
  CHECK(q.verdict == Verdict::kInvalid);
}

TEST_CASE("empty section bodies still count as tags") {
  ParsedCompletion p = parse_completion("[GROUNDING] [INFERENCE] [VERDICT] BENIGN");
  CHECK(p.grounding_count == 1);
  CHECK(p.inference_count == 1);
  CHECK(p.grounding_text.value().empty());
  CHECK(p.verdict == Verdict::kBenign);
}

TEST_CASE("rationale_body extraction") {
  CHECK(rationale_body("[GROUNDING] g [INFERENCE] the middle part [VERDICT] HARMFUL") ==
        " the middle part ");
  // Missing tags fall back to the whole completion.
  CHECK(rationale_body("no tags at all") == "no tags at all");
  CHECK(rationale_body("[INFERENCE] but no verdict") == "[INFERENCE] but no verdict");
}

TEST_CASE("parse_completion totality and idempotence over random bytes") {
  std::mt19937_64 rng(20250810);
  for (int iter = 0; iter < 2000; ++iter) {
    std::size_t len = rng() % 200;
    std::string text;
    text.reserve(len);
    for (std::size_t i = 0; i < len; ++i) {
      if (rng() % 8 == 0) {
        const char* frags[] = {"[GROUNDING]", "[INFERENCE]", "[VERDICT]",
                               " HARMFUL ",   " BENIGN ",    "LABEL: 1"};
        text += frags[rng() % 6];
      } else {
        text.push_back(static_cast<char>(rng() % 256));
      }
    }
    ParsedCompletion p = parse_completion(text);
    CHECK(p.word_count == split_count(text));
    CHECK(p.raw == text);
    if (p.conflicting_verdicts) CHECK(p.verdict_count >= 2);

    ParsedCompletion again = parse_completion(p.raw);
    CHECK(again.grounding_count == p.grounding_count);
    CHECK(again.inference_count == p.inference_count);
    CHECK(again.verdict_count == p.verdict_count);
    CHECK(again.verdict == p.verdict);
    CHECK(again.conflicting_verdicts == p.conflicting_verdicts);
  }
}

TEST_CASE("harm class and dataset parsing") {
  CHECK(harm_class_from_string("fraud") == HarmClass::kFraud);
  CHECK_FALSE(harm_class_from_string("Fraud").has_value());
  CHECK(DatasetId::from_string("MuPHI").kind == DatasetId::Kind::kMuPHI);
  DatasetId other = DatasetId::from_string("desk");
  CHECK(other.kind == DatasetId::Kind::kOther);
  CHECK(other.name == "desk");
}
