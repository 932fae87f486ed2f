#include "muphirm/lexicon.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace muphirm {
namespace {

using nlohmann::json;

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

bool matches_at(const std::vector<std::string>& tokens, std::size_t pos,
                const std::vector<std::string>& phrase) {
  if (phrase.empty() || pos + phrase.size() > tokens.size()) return false;
  for (std::size_t j = 0; j < phrase.size(); ++j) {
    if (tokens[pos + j] != phrase[j]) return false;
  }
  return true;
}

std::set<std::string> read_term_set(const json& doc, const std::string& field,
                                    std::string_view origin) {
  auto fail = [&](const std::string& why) -> std::set<std::string> {
    throw std::runtime_error(std::string(origin) + ": lexicon field '" + field + "' " + why);
  };
  if (!doc.contains(field)) return fail("is missing");
  const json& arr = doc.at(field);
  if (!arr.is_array()) return fail("must be an array of strings");
  std::set<std::string> out;
  for (const json& item : arr) {
    if (!item.is_string()) return fail("must be an array of strings");
    std::string term = item.get<std::string>();
    for (char c : term) {
      if (std::isupper(static_cast<unsigned char>(c))) {
        return fail("entry '" + term + "' must be lowercase");
      }
    }
    if (tokenize(term).empty()) return fail("entry '" + term + "' has no matchable tokens");
    out.insert(std::move(term));
  }
  if (out.empty()) return fail("must be non-empty");
  return out;
}

}  // namespace

std::vector<std::string> lexicon_tokens(std::string_view text) { return tokenize(text); }

Lexicon parse_lexicon(std::string_view json_text, std::string_view origin) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string(origin) + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object()) {
    throw std::runtime_error(std::string(origin) + ": lexicon file must be a JSON object");
  }

  Lexicon lex;
  lex.visual_terms = read_term_set(doc, "visual_terms", origin);
  lex.textual_terms = read_term_set(doc, "textual_terms", origin);
  lex.bridge_terms = read_term_set(doc, "bridge_terms", origin);
  lex.generic_patterns = read_term_set(doc, "generic_patterns", origin);
  lex.harm_phrases = read_term_set(doc, "harm_phrases", origin);
  lex.benign_phrases = read_term_set(doc, "benign_phrases", origin);
  lex.negation_markers = read_term_set(doc, "negation_markers", origin);

  for (const std::string& phrase : lex.harm_phrases) {
    if (lex.benign_phrases.count(phrase) > 0) {
      throw std::runtime_error(std::string(origin) +
                               ": lexicon field 'harm_phrases' overlaps benign_phrases on '" +
                               phrase + "'");
    }
  }
  return lex;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open lexicon file: " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_lexicon(buffer.str(), path.string());
}

int indicator(std::string_view text, const std::set<std::string>& terms) {
  std::vector<std::string> tokens = tokenize(text);
  for (const std::string& term : terms) {
    std::vector<std::string> phrase = tokenize(term);
    if (phrase.empty()) continue;
    for (std::size_t pos = 0; pos + phrase.size() <= tokens.size(); ++pos) {
      if (matches_at(tokens, pos, phrase)) return 1;
    }
  }
  return 0;
}

PhraseCounts phrase_counts(std::string_view rationale_body, const Lexicon& lexicon) {
  std::vector<std::string> tokens = tokenize(rationale_body);
  PhraseCounts counts;

  // Negation window: 3 tokens preceding the phrase start.
  auto negated_before = [&](std::size_t start) {
    std::size_t window_begin = start >= 3 ? start - 3 : 0;
    for (const std::string& marker : lexicon.negation_markers) {
      std::vector<std::string> phrase = tokenize(marker);
      for (std::size_t pos = window_begin; pos < start; ++pos) {
        if (pos + phrase.size() <= start && matches_at(tokens, pos, phrase)) return true;
      }
    }
    return false;
  };

  for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
    for (const std::string& term : lexicon.harm_phrases) {
      if (matches_at(tokens, pos, tokenize(term))) {
        if (negated_before(pos)) {
          ++counts.negated;
        } else {
          ++counts.harm;
        }
      }
    }
    for (const std::string& term : lexicon.benign_phrases) {
      if (matches_at(tokens, pos, tokenize(term))) ++counts.benign;
    }
  }
  return counts;
}

}  // namespace muphirm
