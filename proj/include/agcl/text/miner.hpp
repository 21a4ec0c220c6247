#pragma once

#include "agcl/sample.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace agcl::text {

/// Severity adjectives per cluster, disease keywords per class id, and
/// negation cues. Entries may span several tokens ("negative for").
struct Lexicon {
  std::array<std::vector<std::string>, 3> clusters;  // indexed by Severity
  std::vector<std::vector<std::string>> keywords;     // indexed by class id
  std::vector<std::string> negation_cues;

  /// Throws if clusters share a term or any entry is empty.
  void validate() const;
};

Lexicon default_lexicon(int num_classes);
nlohmann::json to_json(const Lexicon& lexicon);
Lexicon lexicon_from_json(const nlohmann::json& j);

struct Mention {
  int disease = 0;
  std::string severity_term;        // empty when no adjective attached
  std::optional<Severity> cluster;  // set iff severity_term is non-empty
  bool negated = false;
  int sentence_index = 0;
};

/// Lowercased word tokens; hyphenated words stay whole.
std::vector<std::string> tokenize(std::string_view sentence);
std::vector<std::string> split_sentences(std::string_view text);

/// Sentence-scoped extraction. Each severity adjective attaches to the nearest
/// disease keyword of its sentence by token distance (ties go to the keyword
/// that follows). A mention is negated iff a negation cue occurs before its
/// keyword in the same sentence; negated mentions carry no severity.
std::vector<Mention> parse_report(std::string_view text, const Lexicon& lexicon);

/// Maximum severity per class over non-negated mentions.
std::map<int, Severity> assign_dsl(const std::vector<Mention>& mentions);

}  // namespace agcl::text
