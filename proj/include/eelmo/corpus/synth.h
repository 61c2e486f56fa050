#ifndef EELMO_CORPUS_SYNTH_H_
#define EELMO_CORPUS_SYNTH_H_

#include <cstdint>
#include <string>
#include <vector>

#include "eelmo/corpus/corpus.h"
#include "eelmo/corpus/vocab.h"

namespace eelmo::corpus {

struct SynthSpec {
  std::size_t n_entities = 25;
  std::size_t n_paragraphs = 200;
  std::size_t ambiguity = 2;   // entities sharing one alias
  std::size_t vocab_size = 300;  // distinct surface words
  std::uint64_t seed = 1;

  std::size_t min_tokens = 8;
  std::size_t max_tokens = 14;
  std::size_t max_mentions = 2;
  double topic_rate = 0.7;  // share of filler tokens from the topic words
  std::size_t max_paragraphs_per_doc = 3;
};

// Entities come in alias groups of `ambiguity` members; every member of a
// group is mentioned by the same alias string, so only context tells them
// apart. Each entity owns a disjoint set of topic words, and its title is
// the alias followed by its first topic word. Paragraphs are about one
// entity, drawn by popularity, and fill non-mention slots with its topic
// words or shared background words.
struct SynthCorpus {
  std::vector<Paragraph> paragraphs;
  EntityInventory inventory;
  Vocabulary vocab;
  std::vector<std::vector<std::string>> topic_words;  // per entity
  std::vector<std::string> aliases;                   // per entity
};

// Throws ParameterError for zero extents, ambiguity > n_entities, or a
// vocabulary too small to give every entity a topic word.
SynthCorpus SynthesizeCorpus(const SynthSpec &spec);

}  // namespace eelmo::corpus

#endif  // EELMO_CORPUS_SYNTH_H_
