#pragma once

#include "agcl/sample.hpp"

#include <array>
#include <string>
#include <vector>

namespace agcl {

/// Disease vocabulary shared by the generator and the default lexicon. One
/// entry per available shape generator, so this also caps the class count.
struct DiseaseTerm {
  const char* name;
  const char* keyword;
};

inline constexpr std::array<DiseaseTerm, 8> kDiseases = {{
    {"Atelectasis", "atelectasis"},
    {"Cardiomegaly", "cardiomegaly"},
    {"Effusion", "effusion"},
    {"Infiltration", "infiltration"},
    {"Mass", "mass"},
    {"Nodule", "nodule"},
    {"Pneumonia", "pneumonia"},
    {"Pneumothorax", "pneumothorax"},
}};

inline constexpr int kMaxClasses = static_cast<int>(kDiseases.size());

/// Severity adjectives per cluster, as radiologists write them.
inline const std::vector<std::string>& severity_terms(Severity s) {
  static const std::array<std::vector<std::string>, 3> terms = {{
      {"minimal", "tiny", "small", "mild"},
      {"middle-size", "moderate"},
      {"remarkable", "large", "severe"},
  }};
  return terms[static_cast<int>(s)];
}

inline const std::vector<std::string>& default_negation_cues() {
  static const std::vector<std::string> cues = {"no", "not", "without", "negative for", "free of"};
  return cues;
}

std::vector<std::string> disease_names(int num_classes);

}  // namespace agcl
