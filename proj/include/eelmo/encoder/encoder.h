#ifndef EELMO_ENCODER_ENCODER_H_
#define EELMO_ENCODER_ENCODER_H_

#include <cstdint>
#include <vector>

#include "eelmo/corpus/indexed.h"
#include "eelmo/netcore/layers.h"
#include "eelmo/netcore/parameter.h"
#include "eelmo/netcore/rng.h"
#include "eelmo/netcore/tape.h"

namespace eelmo::encoder {

struct EncoderShape {
  net::CharCnnShape char_cnn;
  std::size_t d_h = 32;
  std::size_t layers = 2;
  // Adds a layer's input to its output for layers above the first.
  bool residual = false;
};

struct EncoderParams {
  EncoderShape shape;
  net::CharCnnParams char_cnn;
  std::vector<net::LstmParams> forward;   // one per layer
  std::vector<net::LstmParams> backward;  // one per layer

  static EncoderParams Init(const EncoderShape &shape, net::SeededRng &rng);

  std::vector<net::Parameter *> CharParams();
  std::vector<net::Parameter *> RecurrentParams();
  std::vector<net::Parameter *> All();
};

// Positions 0..T+1 with BOS at 0 and EOS at T+1. Every state is a Var on the
// tape the sequence was encoded on.
struct EncodedSequence {
  net::Var token_reprs;                       // [(T+2) x d_tok]
  std::vector<std::vector<net::Var>> forward;   // [layer][k] -> h, d_h
  std::vector<std::vector<net::Var>> backward;  // [layer][k] -> h, d_h

  std::size_t positions() const { return forward.empty() ? 0 : forward[0].size(); }
  net::Var ForwardTop(std::size_t k) const { return forward.back().at(k); }
  net::Var BackwardTop(std::size_t k) const { return backward.back().at(k); }
};

// Forward stack runs left to right, backward stack right to left, both from
// zero states. Layer j reads layer j-1's hidden states.
EncodedSequence Encode(net::Tape &tape,
                       const std::vector<std::vector<std::int32_t>> &chars,
                       EncoderParams &params);

inline EncodedSequence Encode(net::Tape &tape,
                              const corpus::IndexedParagraph &paragraph,
                              EncoderParams &params) {
  return Encode(tape, paragraph.chars, params);
}

}  // namespace eelmo::encoder

#endif  // EELMO_ENCODER_ENCODER_H_
