#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace muphirm {

// Phrase dictionaries backing the evidence-alignment indicators and the
// consistency phrase counts. Entries are lowercase; matching against
// completion text is case-insensitive with word boundaries (a term never
// matches inside a longer word: "image" does not fire on "pilgrimage").
// Multi-word entries match as contiguous token sequences, so punctuation
// and whitespace runs between words are ignored.
struct Lexicon {
  std::set<std::string> visual_terms;
  std::set<std::string> textual_terms;
  std::set<std::string> bridge_terms;
  std::set<std::string> generic_patterns;
  std::set<std::string> harm_phrases;
  std::set<std::string> benign_phrases;
  std::set<std::string> negation_markers;
};

// Loads and validates a lexicon file (JSON object with one string array
// per Lexicon field). Throws std::runtime_error naming the offending field
// on I/O failure or schema violation: every set must be non-empty, entries
// lowercase, and harm_phrases disjoint from benign_phrases.
Lexicon load_lexicon(const std::filesystem::path& path);

// Parses/validates lexicon JSON text; `origin` labels error messages.
Lexicon parse_lexicon(std::string_view json_text, std::string_view origin);

// Lowercased alphanumeric-run tokens of `text`, the unit of all matching.
std::vector<std::string> lexicon_tokens(std::string_view text);

// 1 iff any term in the set occurs in the text as a word-boundary match.
int indicator(std::string_view text, const std::set<std::string>& terms);

struct PhraseCounts {
  int harm = 0;    // c_harm
  int benign = 0;  // c_benign
  int negated = 0; // c_neg
};

// Occurrence counts of harm/benign phrases in a rationale body. A harm
// phrase with a negation marker in the 3 tokens preceding it counts toward
// `negated` instead of `harm`, so harm + negated always equals the total
// number of harm-phrase occurrences.
PhraseCounts phrase_counts(std::string_view rationale_body, const Lexicon& lexicon);

}  // namespace muphirm
