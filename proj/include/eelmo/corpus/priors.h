#ifndef EELMO_CORPUS_PRIORS_H_
#define EELMO_CORPUS_PRIORS_H_

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "eelmo/corpus/corpus.h"

namespace eelmo::corpus {

inline constexpr std::size_t kDefaultCandidateCap = 30;

// Lowercase (ASCII) and collapse whitespace runs to a single space.
std::string NormalizeMention(std::string_view mention);

struct Candidate {
  std::string entity;  // knowledge-base key
  double prior = 0.0;

  bool operator==(const Candidate &) const = default;
};

// Normalized mention -> candidates sorted by descending prior (ties by key).
// The same type serves as the prior model: with cap 0 nothing is dropped and
// every list sums to 1.
class CandidateTable {
 public:
  // Throws ValidationError if the list is unsorted, has a duplicate entity,
  // or a prior outside (0, 1].
  void Set(const std::string &mention, std::vector<Candidate> candidates);

  // Looks up NormalizeMention(mention). nullptr when absent.
  const std::vector<Candidate> *Find(std::string_view mention) const;
  // p(e|m), 0 when the pair is absent.
  double Prior(std::string_view mention, std::string_view entity) const;

  std::size_t size() const { return lists_.size(); }
  const std::map<std::string, std::vector<Candidate>> &lists() const {
    return lists_;
  }
  // Keeps the first `cap` entries of every list (0 = unlimited).
  void Cap(std::size_t cap);

  // TSV: mention<TAB>entity<TAB>prior, lists contiguous and in rank order.
  static CandidateTable Parse(const std::string &text);
  static CandidateTable Load(const std::string &path);
  std::string Format() const;
  void Save(const std::string &path) const;

 private:
  std::map<std::string, std::vector<Candidate>> lists_;
};

using PriorModel = CandidateTable;

// p(e|m) = count(m -> e) / count(m -> anything) over normalized surfaces,
// then capped (cap 0 = unlimited).
CandidateTable BuildPriors(const std::vector<Paragraph> &paragraphs,
                           std::size_t cap = kDefaultCandidateCap);

// Fraction of gold mentions whose gold entity is among their candidates.
// 0 for a corpus without mentions.
double CandidateRecall(const std::vector<Paragraph> &paragraphs,
                       const CandidateTable &table);

}  // namespace eelmo::corpus

#endif  // EELMO_CORPUS_PRIORS_H_
