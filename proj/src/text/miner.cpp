#include "agcl/text/miner.hpp"
#include "agcl/vocabulary.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <set>
#include <stdexcept>

namespace agcl::text {

void Lexicon::validate() const {
  std::set<std::string> seen;
  for (const auto& cluster : clusters) {
    for (const auto& term : cluster) {
      if (term.empty()) throw std::invalid_argument("Lexicon: empty severity term");
      if (!seen.insert(term).second) {
        throw std::invalid_argument("Lexicon: severity term '" + term + "' appears in two clusters");
      }
    }
  }
  for (const auto& kws : keywords) {
    for (const auto& k : kws) {
      if (k.empty()) throw std::invalid_argument("Lexicon: empty disease keyword");
    }
  }
}

Lexicon default_lexicon(int num_classes) {
  Lexicon lex;
  for (int s = 0; s < 3; ++s) lex.clusters[s] = severity_terms(static_cast<Severity>(s));
  for (int c = 0; c < num_classes && c < kMaxClasses; ++c) lex.keywords.push_back({kDiseases[c].keyword});
  lex.negation_cues = default_negation_cues();
  return lex;
}

nlohmann::json to_json(const Lexicon& lexicon) {
  nlohmann::json diseases = nlohmann::json::array();
  for (std::size_t c = 0; c < lexicon.keywords.size(); ++c) {
    diseases.push_back({{"id", c}, {"keywords", lexicon.keywords[c]}});
  }
  return {{"clusters",
           {{"mild", lexicon.clusters[0]}, {"moderate", lexicon.clusters[1]}, {"severe", lexicon.clusters[2]}}},
          {"diseases", diseases},
          {"negation_cues", lexicon.negation_cues}};
}

Lexicon lexicon_from_json(const nlohmann::json& j) {
  Lexicon lex;
  for (const auto& [name, terms] : j.at("clusters").items()) {
    lex.clusters[static_cast<int>(severity_from_string(name))] = terms.get<std::vector<std::string>>();
  }
  for (const auto& d : j.at("diseases")) {
    const auto id = d.at("id").get<std::size_t>();
    if (lex.keywords.size() <= id) lex.keywords.resize(id + 1);
    lex.keywords[id] = d.at("keywords").get<std::vector<std::string>>();
  }
  lex.negation_cues = j.value("negation_cues", default_negation_cues());
  lex.validate();
  return lex;
}

std::vector<std::string> tokenize(std::string_view sentence) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : sentence) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isalnum(u) || ch == '-' || ch == '\'') {
      current.push_back(static_cast<char>(std::tolower(u)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : text) {
    if (ch == '.' || ch == '!' || ch == '?' || ch == ';' || ch == '\n') {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  if (current.find_first_not_of(" \t\r") != std::string::npos) out.push_back(std::move(current));
  return out;
}

namespace {

/// Start positions of every occurrence of `phrase` (already tokenized).
std::vector<int> find_phrase(const std::vector<std::string>& tokens, const std::vector<std::string>& phrase) {
  std::vector<int> hits;
  if (phrase.empty() || phrase.size() > tokens.size()) return hits;
  for (std::size_t i = 0; i + phrase.size() <= tokens.size(); ++i) {
    if (std::equal(phrase.begin(), phrase.end(), tokens.begin() + static_cast<long>(i))) {
      hits.push_back(static_cast<int>(i));
    }
  }
  return hits;
}

struct KeywordHit {
  int disease;
  int begin, end;  // token span [begin, end)
  int best_severity = -1;
  std::string term;
};

int span_distance(int pos, int len, const KeywordHit& k) {
  if (pos + len <= k.begin) return k.begin - (pos + len - 1);
  if (pos >= k.end) return pos - (k.end - 1);
  return 0;
}

}  // namespace

std::vector<Mention> parse_report(std::string_view text, const Lexicon& lexicon) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw std::invalid_argument("parse_report: empty report text");
  }
  std::vector<Mention> mentions;
  const auto sentences = split_sentences(text);
  for (std::size_t si = 0; si < sentences.size(); ++si) {
    const auto tokens = tokenize(sentences[si]);
    if (tokens.empty()) continue;

    std::vector<KeywordHit> hits;
    for (std::size_t c = 0; c < lexicon.keywords.size(); ++c) {
      for (const auto& kw : lexicon.keywords[c]) {
        const auto phrase = tokenize(kw);
        for (int pos : find_phrase(tokens, phrase)) {
          hits.push_back({static_cast<int>(c), pos, pos + static_cast<int>(phrase.size()), -1, {}});
        }
      }
    }
    if (hits.empty()) continue;
    std::sort(hits.begin(), hits.end(), [](const KeywordHit& a, const KeywordHit& b) {
      return a.begin != b.begin ? a.begin < b.begin : a.disease < b.disease;
    });

    int first_cue = static_cast<int>(tokens.size());
    for (const auto& cue : lexicon.negation_cues) {
      for (int pos : find_phrase(tokens, tokenize(cue))) first_cue = std::min(first_cue, pos);
    }

    for (int sev = 0; sev < 3; ++sev) {
      for (const auto& term : lexicon.clusters[sev]) {
        const auto phrase = tokenize(term);
        const int len = static_cast<int>(phrase.size());
        for (int pos : find_phrase(tokens, phrase)) {
          KeywordHit* nearest = nullptr;
          int best = 0;
          for (auto& k : hits) {
            const int d = span_distance(pos, len, k);
            // on a tie prefer the keyword the adjective modifies from the left
            if (!nearest || d < best || (d == best && k.begin > pos && nearest->begin < pos)) {
              nearest = &k;
              best = d;
            }
          }
          if (nearest && sev > nearest->best_severity) {
            nearest->best_severity = sev;
            nearest->term = term;
          }
        }
      }
    }

    for (const auto& k : hits) {
      Mention m;
      m.disease = k.disease;
      m.sentence_index = static_cast<int>(si);
      m.negated = first_cue < k.begin;
      if (!m.negated && k.best_severity >= 0) {
        m.severity_term = k.term;
        m.cluster = static_cast<Severity>(k.best_severity);
      }
      mentions.push_back(std::move(m));
    }
  }
  return mentions;
}

std::map<int, Severity> assign_dsl(const std::vector<Mention>& mentions) {
  std::map<int, Severity> dsl;
  for (const auto& m : mentions) {
    if (m.negated || !m.cluster) continue;
    auto [it, inserted] = dsl.emplace(m.disease, *m.cluster);
    if (!inserted && static_cast<int>(*m.cluster) > static_cast<int>(it->second)) it->second = *m.cluster;
  }
  return dsl;
}

}  // namespace agcl::text
