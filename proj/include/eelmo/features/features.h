#ifndef EELMO_FEATURES_FEATURES_H_
#define EELMO_FEATURES_FEATURES_H_

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "eelmo/corpus/priors.h"
#include "eelmo/netcore/parameter.h"
#include "eelmo/netcore/tape.h"

namespace eelmo::features {

// Soft one-hot projection of a scalar in [0, 1]:
//   p_i = exp(-(softplus(rho_i) * |x - c_i|)^2).
struct BinLayer {
  net::Parameter centers;  // [d]
  net::Parameter rho;      // [d], sharpness = softplus(rho)

  // Centers evenly spaced over [0, 1] (0.5 when d = 1) and sharpness d.
  static BinLayer Init(const std::string &prefix, std::size_t d);
  std::size_t d() const { return centers.tensor().size(); }
  std::vector<net::Parameter *> All() { return {&centers, &rho}; }
};

net::Var BinProject(net::Tape &tape, net::Var x, BinLayer &layer);
// Same values without a tape.
std::vector<double> BinProjectValues(double x, const BinLayer &layer);

inline constexpr std::size_t kLexicalFeatures = 10;
using LexicalVector = std::array<double, kLexicalFeatures>;

// In order: exact match; mention is prefix of title; mention is suffix of
// title; title is prefix of mention; title is suffix of mention; mention
// contained in title; title contained in mention; 1 - normalized Levenshtein
// distance; character-bigram Jaccard; fraction of mention tokens found in
// the title. Inputs are normalized first; prefix, suffix and containment
// compare whole tokens. Throws FeatureError if either string is empty after
// normalization.
LexicalVector LexicalFeatures(std::string_view mention, std::string_view title);

// p(e | m) from the table; 0 when the mention or the pair is absent.
double PriorFeature(std::string_view mention, std::string_view entity,
                    const corpus::CandidateTable &priors);

struct FeatureBundle {
  double prior = 0.0;
  LexicalVector lexical{};
};

// Byte-level edit distance.
std::size_t Levenshtein(std::string_view a, std::string_view b);

}  // namespace eelmo::features

#endif  // EELMO_FEATURES_FEATURES_H_
