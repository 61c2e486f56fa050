#ifndef EELMO_NETCORE_LAYERS_H_
#define EELMO_NETCORE_LAYERS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "eelmo/netcore/parameter.h"
#include "eelmo/netcore/rng.h"
#include "eelmo/netcore/tape.h"

namespace eelmo::net {

// Extents of the character convolution stage.
struct CharCnnShape {
  std::size_t alphabet = 0;
  std::size_t d_char = 16;
  std::vector<std::size_t> widths = {1, 2, 3};
  std::size_t filters_per_width = 8;
  std::size_t max_chars = 16;
  std::size_t d_tok = 32;
};

struct CharCnnParams {
  CharCnnShape shape;
  Parameter embedding;               // [alphabet x d_char]
  std::vector<Parameter> filters;    // per width: [(w*d_char) x filters]
  std::vector<Parameter> biases;     // per width: [filters]
  Parameter projection;              // [(widths*filters) x d_tok]
  Parameter projection_bias;         // [d_tok]

  static CharCnnParams Init(const std::string &prefix, CharCnnShape shape,
                            SeededRng &rng);
  std::vector<Parameter *> All();
};

// Embedding -> per-width convolution -> max over time -> concatenation ->
// affine projection. Returns [n_tokens x d_tok].
Var CharConvEncode(Tape &tape,
                   const std::vector<std::vector<std::int32_t>> &char_ids,
                   CharCnnParams &params);

struct LstmParams {
  std::size_t d_in = 0;
  std::size_t d_h = 0;
  Parameter w;     // [d_in x 4d_h]
  Parameter u;     // [d_h x 4d_h]
  Parameter bias;  // [4d_h], gates ordered input, forget, candidate, output

  static LstmParams Init(const std::string &prefix, std::size_t d_in,
                         std::size_t d_h, SeededRng &rng);
  std::vector<Parameter *> All();
};

// One recurrent step; state = [h; c], returns [h'; c'].
Var RecurrentCellStep(Tape &tape, Var x, Var state, LstmParams &params);

// Uniform(-scale, scale) matrix.
Tensor UniformTensor(Shape shape, double scale, SeededRng &rng);

}  // namespace eelmo::net

#endif  // EELMO_NETCORE_LAYERS_H_
