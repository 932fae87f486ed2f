#include "muphirm/rewards.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "doctest.h"

using namespace muphirm;

namespace {

Lexicon tiny_lexicon() {
  Lexicon lex;
  lex.visual_terms = {"image", "person", "scene"};
  lex.textual_terms = {"text", "caption", "words"};
  lex.bridge_terms = {"together", "because", "implies"};
  lex.generic_patterns = {"clearly harmful", "just is"};
  lex.harm_phrases = {"promotes violence", "incites hatred", "threat"};
  lex.benign_phrases = {"harmless", "positive", "no harm"};
  lex.negation_markers = {"not", "no", "never"};
  return lex;
}

ParsedCompletion parsed_with(int grounding, int inference, int verdict_tags, Verdict verdict,
                             int words, bool conflict) {
  ParsedCompletion p;
  p.grounding_count = grounding;
  p.inference_count = inference;
  p.verdict_count = verdict_tags;
  p.verdict = verdict;
  p.word_count = words;
  p.conflicting_verdicts = conflict;
  return p;
}

std::string repeated_words(int n) {
  std::string out;
  for (int i = 0; i < n; ++i) {
    if (i > 0) out += " ";
    out += "w";
  }
  return out;
}

Sample harmful_sample() {
  Sample s;
  s.id = "s1";
  s.embedded_text = "x";
  s.label = 1;
  return s;
}

// A completion earning every positive branch: one of each tag, all three
// evidence indicator classes, harm-dominant body, 100 words.
std::string perfect_completion() {
  std::string grounding =
      "[GROUNDING] the image shows a person in a scene and the caption text words are visible";
  std::string inference =
      "[INFERENCE] together the text and image because of their pairing implies a threat since it "
      "promotes violence and incites hatred";
  std::string padding = repeated_words(100 - word_count(grounding) - word_count(inference) - 2);
  return grounding + " " + inference + " " + padding + " [VERDICT] HARMFUL";
}

}  // namespace

TEST_CASE("outcome reward branches") {
  CHECK(outcome_reward(1, Verdict::kHarmful) == 0.2);
  CHECK(outcome_reward(0, Verdict::kBenign) == 0.2);
  CHECK(outcome_reward(1, Verdict::kInvalid) == -3.0);
  CHECK(outcome_reward(0, Verdict::kInvalid) == -3.0);
  CHECK(outcome_reward(0, Verdict::kHarmful) == -2.0);
  CHECK(outcome_reward(1, Verdict::kBenign) == -2.0);
}

TEST_CASE("format reward: well-formed completion clips to 1.0") {
  // 4 * 0.25 + 0.15 = 1.15 -> 1.0
  ParsedCompletion p = parsed_with(1, 1, 1, Verdict::kHarmful, 100, false);
  CHECK(format_reward(p) == 1.0);
}

TEST_CASE("format reward: empty completion clips to -1.0") {
  // -0.25 - 0.25 - 0.35 - 0.35 - 0.20 = -1.40 -> -1.0
  ParsedCompletion p = parsed_with(0, 0, 0, Verdict::kInvalid, 0, false);
  CHECK(format_reward(p) == -1.0);
}

TEST_CASE("format reward: middle length band contributes zero") {
  // 300 words: in (240, 420], length term 0, sum exactly 1.0
  ParsedCompletion p = parsed_with(1, 1, 1, Verdict::kBenign, 300, false);
  CHECK(format_reward(p) == 1.0);
  // 40 words: in [35, 60), also 0
  CHECK(format_reward(parsed_with(1, 1, 1, Verdict::kBenign, 40, false)) == 1.0);
}

TEST_CASE("format reward: length band boundaries") {
  auto at_words = [](int w) { return format_reward(parsed_with(1, 1, 1, Verdict::kHarmful, w, false)); };
  CHECK(at_words(60) == 1.0);             // 1.0 + 0.15 clipped
  CHECK(at_words(240) == 1.0);
  CHECK(at_words(59) == 1.0);             // exactly 1.0, no bonus
  CHECK(at_words(241) == 1.0);
  CHECK(at_words(35) == 1.0);
  CHECK(at_words(34) == doctest::Approx(0.8).epsilon(1e-12));   // 1.0 - 0.20
  CHECK(at_words(421) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(at_words(420) == 1.0);
}

TEST_CASE("format reward: conflict and duplicate-tag penalties") {
  // conflict: 0.25+0.25+(-0.35 two tags)+(-0.35 conflict label)+0.15-0.50
  ParsedCompletion p = parsed_with(1, 1, 2, Verdict::kHarmful, 100, true);
  CHECK(format_reward(p) == doctest::Approx(0.25 + 0.25 - 0.35 - 0.35 + 0.15 - 0.50));

  // missing verdict tag but trailing label: R3 penalty, R4 bonus
  ParsedCompletion q = parsed_with(1, 1, 0, Verdict::kBenign, 100, false);
  CHECK(format_reward(q) == doctest::Approx(0.25 + 0.25 - 0.35 + 0.25 + 0.15));
}

TEST_CASE("evidence reward fixture values") {
  Lexicon lex = tiny_lexicon();
  EvidenceWeights w;

  // all three indicator classes, no generic: 0.3+0.3+0.35+0.15 = 1.1 -> 1.0
  CHECK(evidence_reward("the image and the text together", lex, w) == 1.0);
  // nothing fires
  CHECK(evidence_reward("nothing relevant here", lex, w) == 0.0);
  // only a generic pattern: -e = -0.3, inside the range, no clipping
  CHECK(evidence_reward("it just is", lex, w) == doctest::Approx(-0.3).epsilon(1e-12));
  // visual only
  CHECK(evidence_reward("an image", lex, w) == doctest::Approx(0.3).epsilon(1e-12));
  // visual+textual without bridge: no all-three bonus
  CHECK(evidence_reward("image with text", lex, w) == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("evidence reward respects custom weights and the lower clip") {
  Lexicon lex = tiny_lexicon();
  EvidenceWeights w;
  w.generic = 0.9;
  // only generic fires: -0.9 clips to -0.5
  CHECK(evidence_reward("it just is", lex, w) == -0.5);
}

TEST_CASE("consistency reward branches") {
  Lexicon lex = tiny_lexicon();

  SUBCASE("invalid verdict") {
    ParsedCompletion p = parse_completion("no verdict here");
    CHECK(consistency_reward(p, lex) == -0.5);
  }
  SUBCASE("harmful verdict with harm-dominant body") {
    ParsedCompletion p = parse_completion(
        "[INFERENCE] promotes violence and incites hatred and a threat [VERDICT] HARMFUL");
    CHECK(consistency_reward(p, lex) == 1.0);  // c = (3,0,0)
  }
  SUBCASE("harmful verdict, benign-dominant body with negation") {
    ParsedCompletion p = parse_completion(
        "[INFERENCE] harmless and positive with no threat [VERDICT] HARMFUL");
    // c_benign=2 > c_harm=0, c_neg=1 -> -0.75
    CHECK(consistency_reward(p, lex) == -0.75);
  }
  SUBCASE("harmful verdict, neutral body") {
    ParsedCompletion p = parse_completion("[INFERENCE] nothing at all [VERDICT] HARMFUL");
    CHECK(consistency_reward(p, lex) == 0.35);
  }
  SUBCASE("benign verdict contradiction outranks support") {
    // counts (4,1,1): 4 > 1+1+1 -> -0.75 even though c_benign > 0
    ParsedCompletion p = parse_completion(
        "[INFERENCE] threat threat threat threat positive but never a threat "
        "[VERDICT] BENIGN");
    // c_harm counts: four bare "threat" + one negated ("never a threat")
    CHECK(consistency_reward(p, lex) == -0.75);
  }
  SUBCASE("benign verdict supported by benign or negated phrases") {
    ParsedCompletion p = parse_completion("[INFERENCE] it is harmless [VERDICT] BENIGN");
    CHECK(consistency_reward(p, lex) == 1.0);
    ParsedCompletion q = parse_completion("[INFERENCE] not a threat [VERDICT] BENIGN");
    CHECK(consistency_reward(q, lex) == 1.0);
  }
  SUBCASE("benign verdict, neutral body") {
    ParsedCompletion p = parse_completion("[INFERENCE] nothing at all [VERDICT] BENIGN");
    CHECK(consistency_reward(p, lex) == 0.35);
  }
}

TEST_CASE("total reward: perfect completion scores 1.24 under default weights") {
  Lexicon lex = tiny_lexicon();
  std::string completion = perfect_completion();

  ParsedCompletion parsed = parse_completion(completion);
  REQUIRE(parsed.word_count == 100);
  REQUIRE(parsed.verdict == Verdict::kHarmful);

  RewardBreakdown r = total_reward(harmful_sample(), completion, lex, {}, {});
  CHECK(r.outcome == 0.2);
  CHECK(r.format == 1.0);
  CHECK(r.evidence == 1.0);
  CHECK(r.consistency == 1.0);
  CHECK(r.total == doctest::Approx(1.24).epsilon(1e-9));
}

TEST_CASE("total reward: empty completion scores -15.16") {
  Lexicon lex = tiny_lexicon();
  RewardBreakdown r = total_reward(harmful_sample(), "", lex, {}, {});
  CHECK(r.outcome == -3.0);
  CHECK(r.format == -1.0);
  CHECK(r.evidence == 0.0);
  CHECK(r.consistency == -0.5);
  CHECK(r.total == doctest::Approx(-15.16).epsilon(1e-9));
}

TEST_CASE("total reward: zero weights zero the total") {
  Lexicon lex = tiny_lexicon();
  RewardWeights zero{0, 0, 0, 0};
  CHECK(total_reward(harmful_sample(), perfect_completion(), lex, {}, zero).total == 0.0);
  CHECK(total_reward(harmful_sample(), "", lex, {}, zero).total == 0.0);
}

TEST_CASE("total reward is linear in the weights") {
  Lexicon lex = tiny_lexicon();
  std::string completion = "[GROUNDING] image [INFERENCE] threat [VERDICT] HARMFUL";
  RewardBreakdown base = total_reward(harmful_sample(), completion, lex, {}, {});

  RewardWeights doubled{10.0, 0.30, 0.14, 0.04};
  RewardBreakdown twice = total_reward(harmful_sample(), completion, lex, {}, doubled);
  CHECK(twice.total == doctest::Approx(2.0 * base.total).epsilon(1e-12));
}

TEST_CASE("flipping a wrong verdict to right moves the total by exactly 11.0") {
  // Neutral rationale body holds the consistency branch at +0.35 for both
  // verdicts, so the delta is w_outcome * (0.2 - (-2.0)) = 11.0.
  Lexicon lex = tiny_lexicon();
  std::string wrong = "[GROUNDING] a [INFERENCE] plain words here [VERDICT] BENIGN";
  std::string right = "[GROUNDING] a [INFERENCE] plain words here [VERDICT] HARMFUL";
  RewardBreakdown rw = total_reward(harmful_sample(), wrong, lex, {}, {});
  RewardBreakdown rr = total_reward(harmful_sample(), right, lex, {}, {});
  CHECK(rw.consistency == rr.consistency);
  CHECK(rr.total - rw.total == doctest::Approx(11.0).epsilon(1e-9));
}

TEST_CASE("reward ranges hold under fuzzed inputs") {
  Lexicon lex = tiny_lexicon();
  std::mt19937_64 rng(424242);
  Sample s = harmful_sample();
  for (int iter = 0; iter < 1500; ++iter) {
    std::string text;
    std::size_t len = rng() % 150;
    for (std::size_t i = 0; i < len; ++i) {
      if (rng() % 6 == 0) {
        const char* frags[] = {"[GROUNDING] ", "[INFERENCE] ", "[VERDICT] ",
                               "HARMFUL ",     "BENIGN ",      "threat harmless "};
        text += frags[rng() % 6];
      } else {
        text.push_back(static_cast<char>('a' + rng() % 27));
        if (rng() % 4 == 0) text.push_back(' ');
      }
    }
    s.label = static_cast<int>(rng() % 2);
    RewardBreakdown r = total_reward(s, text, lex, {}, {});

    bool outcome_ok = r.outcome == -3.0 || r.outcome == 0.2 || r.outcome == -2.0;
    CHECK(outcome_ok);
    CHECK(r.format >= -1.0);
    CHECK(r.format <= 1.0);
    CHECK(r.evidence >= -0.5);
    CHECK(r.evidence <= 1.0);
    bool consistency_ok = r.consistency == -0.75 || r.consistency == -0.5 ||
                          r.consistency == 0.35 || r.consistency == 1.0;
    CHECK(consistency_ok);
  }
}
