#ifndef EELMO_CORPUS_CORPUS_H_
#define EELMO_CORPUS_CORPUS_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace eelmo::corpus {

// Gold-annotated span. Positions are 1-based and inclusive.
struct Mention {
  int start = 0;
  int end = 0;
  std::string entity;   // knowledge-base key
  std::string surface;  // space-joined tokens of the span

  int length() const { return end - start + 1; }
  bool operator==(const Mention &) const = default;
};

struct Paragraph {
  std::string doc_id;
  std::vector<std::string> tokens;
  std::vector<Mention> mentions;  // sorted by start, non-overlapping

  int length() const { return static_cast<int>(tokens.size()); }
  bool operator==(const Paragraph &) const = default;
};

// Checks the paragraph invariants, sorts mentions and fills in surfaces.
// Throws ValidationError.
void Validate(Paragraph &paragraph);

// Line-delimited JSON, one paragraph per line:
//   {"doc_id": "d1", "tokens": ["a", "b"],
//    "mentions": [{"start": 1, "end": 1, "entity": "E3"}]}
std::vector<Paragraph> LoadCorpus(const std::string &path);
std::vector<Paragraph> ParseCorpus(const std::string &text);
std::string FormatParagraph(const Paragraph &paragraph);
void WriteCorpus(const std::string &path,
                 const std::vector<Paragraph> &paragraphs);

struct Split {
  std::vector<Paragraph> train;
  std::vector<Paragraph> dev;
  std::vector<Paragraph> test;
};

// Seeded partition by document. Sizes are round(ratio * n_docs) for train
// and dev; test takes the remainder. Paragraph order within a part follows
// the input order.
Split SplitByDocument(const std::vector<Paragraph> &paragraphs,
                      std::array<double, 3> ratios, std::uint64_t seed);

// Total gold links.
std::size_t CountMentions(const std::vector<Paragraph> &paragraphs);

}  // namespace eelmo::corpus

#endif  // EELMO_CORPUS_CORPUS_H_
