#ifndef EELMO_CORPUS_INDEXED_H_
#define EELMO_CORPUS_INDEXED_H_

#include <cstdint>
#include <string>
#include <vector>

#include "eelmo/corpus/corpus.h"
#include "eelmo/corpus/vocab.h"

namespace eelmo::corpus {

struct IndexedMention {
  int start = 0;  // 1-based inclusive, as in Mention
  int end = 0;
  EntityId entity{};
  std::string surface;
};

// Paragraph with the virtual BOS / EOS tokens at positions 0 and T+1.
struct IndexedParagraph {
  std::string doc_id;
  std::vector<WordId> words;                     // T + 2
  std::vector<std::vector<std::int32_t>> chars;  // T + 2 rows of max_chars
  std::vector<std::string> tokens;               // T, surface forms
  std::vector<IndexedMention> mentions;

  int length() const { return static_cast<int>(words.size()) - 2; }
};

// Throws ValidationError when a gold entity is missing from the inventory.
IndexedParagraph IndexParagraph(const Paragraph &paragraph,
                                const Vocabulary &vocab,
                                const CharAlphabet &alphabet,
                                const EntityInventory &inventory,
                                std::size_t max_chars);

std::vector<IndexedParagraph> IndexCorpus(
    const std::vector<Paragraph> &paragraphs, const Vocabulary &vocab,
    const CharAlphabet &alphabet, const EntityInventory &inventory,
    std::size_t max_chars);

}  // namespace eelmo::corpus

#endif  // EELMO_CORPUS_INDEXED_H_
