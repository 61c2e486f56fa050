#include "eelmo/corpus/indexed.h"

#include "eelmo/errors.h"

namespace eelmo::corpus {

IndexedParagraph IndexParagraph(const Paragraph &p, const Vocabulary &vocab,
                                const CharAlphabet &alphabet,
                                const EntityInventory &inventory,
                                std::size_t max_chars) {
  IndexedParagraph out;
  out.doc_id = p.doc_id;
  out.tokens = p.tokens;
  out.words.push_back(Vocabulary::kBos);
  out.chars.push_back(alphabet.EncodeSentinel(Vocabulary::kBos, max_chars));
  for (const std::string &t : p.tokens) {
    out.words.push_back(vocab.Lookup(t));
    out.chars.push_back(alphabet.Encode(t, max_chars));
  }
  out.words.push_back(Vocabulary::kEos);
  out.chars.push_back(alphabet.EncodeSentinel(Vocabulary::kEos, max_chars));
  for (const Mention &m : p.mentions) {
    auto id = inventory.Find(m.entity);
    if (!id) {
      throw ValidationError("paragraph '" + p.doc_id +
                            "' links to unknown entity '" + m.entity + "'");
    }
    out.mentions.push_back({m.start, m.end, *id, m.surface});
  }
  return out;
}

std::vector<IndexedParagraph> IndexCorpus(
    const std::vector<Paragraph> &paragraphs, const Vocabulary &vocab,
    const CharAlphabet &alphabet, const EntityInventory &inventory,
    std::size_t max_chars) {
  std::vector<IndexedParagraph> out;
  out.reserve(paragraphs.size());
  for (const Paragraph &p : paragraphs) {
    out.push_back(IndexParagraph(p, vocab, alphabet, inventory, max_chars));
  }
  return out;
}

}  // namespace eelmo::corpus
