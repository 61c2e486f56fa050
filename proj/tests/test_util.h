#ifndef EELMO_TESTS_TEST_UTIL_H_
#define EELMO_TESTS_TEST_UTIL_H_

#include <string>
#include <vector>

#include "eelmo/corpus/indexed.h"
#include "eelmo/corpus/synth.h"
#include "eelmo/lm/model.h"
#include "eelmo/netcore/rng.h"

namespace eelmo::testing {

// Small synthetic corpus with its inventories and indexed paragraphs.
struct Fixture {
  corpus::SynthCorpus synth;
  corpus::CharAlphabet alphabet;
  std::vector<corpus::IndexedParagraph> indexed;
  std::size_t max_chars = 8;
};

inline Fixture MakeFixture(std::size_t n_paragraphs = 12, std::size_t n_entities = 6,
                           std::size_t vocab = 40, std::uint64_t seed = 5) {
  corpus::SynthSpec spec;
  spec.n_entities = n_entities;
  spec.n_paragraphs = n_paragraphs;
  spec.vocab_size = vocab;
  spec.min_tokens = 3;
  spec.max_tokens = 6;
  spec.seed = seed;
  Fixture f;
  f.synth = corpus::SynthesizeCorpus(spec);
  f.alphabet = corpus::CharAlphabet::Build(f.synth.paragraphs);
  f.indexed = corpus::IndexCorpus(f.synth.paragraphs, f.synth.vocab, f.alphabet,
                                  f.synth.inventory, f.max_chars);
  return f;
}

// Tiny extents so finite differences stay cheap.
inline lm::LmShape TinyShape(const Fixture &f, std::size_t d_h = 4) {
  lm::LmShape shape;
  shape.encoder.char_cnn.alphabet = f.alphabet.size();
  shape.encoder.char_cnn.d_char = 3;
  shape.encoder.char_cnn.widths = {1, 2};
  shape.encoder.char_cnn.filters_per_width = 3;
  shape.encoder.char_cnn.max_chars = f.max_chars;
  shape.encoder.char_cnn.d_tok = 5;
  shape.encoder.d_h = d_h;
  shape.encoder.layers = 2;
  shape.vocab = f.synth.vocab.size();
  shape.entities = f.synth.inventory.size();
  return shape;
}

inline lm::LmModel TinyModel(const Fixture &f, std::uint64_t seed = 3,
                             std::size_t d_h = 4) {
  net::SeededRng rng(seed);
  lm::LmModel model = lm::LmModel::Init(TinyShape(f, d_h), rng);
  lm::InitEntityEmbeddings(f.synth.inventory, model);
  return model;
}

// Overwrites every value with Uniform(-scale, scale). Unit-scale weights
// keep gates away from both saturation and vanishing gradients, which is
// where finite differences are informative.
inline void Randomize(const std::vector<net::Parameter *> &params, double scale,
                      std::uint64_t seed) {
  net::SeededRng rng(seed);
  for (net::Parameter *p : params) {
    for (double &v : p->tensor().values()) v = rng.Uniform(-scale, scale);
  }
}

}  // namespace eelmo::testing

#endif  // EELMO_TESTS_TEST_UTIL_H_
