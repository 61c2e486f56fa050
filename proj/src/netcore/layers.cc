#include "eelmo/netcore/layers.h"

#include <cmath>

#include "eelmo/errors.h"

namespace eelmo::net {

Tensor UniformTensor(Shape shape, double scale, SeededRng &rng) {
  Tensor t(std::move(shape));
  for (double &x : t.values()) x = rng.Uniform(-scale, scale);
  return t;
}

CharCnnParams CharCnnParams::Init(const std::string &prefix,
                                  CharCnnShape shape, SeededRng &rng) {
  if (shape.alphabet == 0 || shape.d_char == 0 || shape.widths.empty() ||
      shape.filters_per_width == 0 || shape.d_tok == 0) {
    throw ParameterError("char cnn extents must be positive");
  }
  for (std::size_t w : shape.widths) {
    if (w == 0 || w > shape.max_chars) {
      throw ParameterError("char cnn width " + std::to_string(w) +
                           " incompatible with max_chars " +
                           std::to_string(shape.max_chars));
    }
  }
  CharCnnParams p;
  p.shape = shape;
  p.embedding = Parameter(prefix + "char_embedding",
                          UniformTensor({shape.alphabet, shape.d_char}, 0.5, rng));
  for (std::size_t w : shape.widths) {
    const std::size_t fan_in = w * shape.d_char;
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    const std::string tag = prefix + "conv_w" + std::to_string(w);
    p.filters.emplace_back(
        tag, UniformTensor({fan_in, shape.filters_per_width}, scale, rng));
    p.biases.emplace_back(
        tag + "_bias",
        UniformTensor({shape.filters_per_width}, 0.1, rng));
  }
  const std::size_t pooled = shape.widths.size() * shape.filters_per_width;
  p.projection = Parameter(
      prefix + "char_projection",
      UniformTensor({pooled, shape.d_tok},
                    1.0 / std::sqrt(static_cast<double>(pooled)), rng));
  p.projection_bias = Parameter(prefix + "char_projection_bias",
                                UniformTensor({shape.d_tok}, 0.1, rng));
  return p;
}

std::vector<Parameter *> CharCnnParams::All() {
  std::vector<Parameter *> out{&embedding};
  for (std::size_t i = 0; i < filters.size(); ++i) {
    out.push_back(&filters[i]);
    out.push_back(&biases[i]);
  }
  out.push_back(&projection);
  out.push_back(&projection_bias);
  return out;
}

Var CharConvEncode(Tape &tape,
                   const std::vector<std::vector<std::int32_t>> &char_ids,
                   CharCnnParams &params) {
  std::vector<Var> filters, biases;
  for (std::size_t i = 0; i < params.filters.size(); ++i) {
    filters.push_back(tape.Leaf(params.filters[i]));
    biases.push_back(tape.Leaf(params.biases[i]));
  }
  Var pooled = tape.CharConvPool(char_ids, tape.Leaf(params.embedding),
                                 params.shape.widths, filters, biases);
  return tape.Affine(pooled, tape.Leaf(params.projection),
                     tape.Leaf(params.projection_bias));
}

LstmParams LstmParams::Init(const std::string &prefix, std::size_t d_in,
                            std::size_t d_h, SeededRng &rng) {
  if (d_in == 0 || d_h == 0) throw ParameterError("lstm extents must be positive");
  LstmParams p;
  p.d_in = d_in;
  p.d_h = d_h;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_h));
  p.w = Parameter(prefix + "w", UniformTensor({d_in, 4 * d_h}, scale, rng));
  p.u = Parameter(prefix + "u", UniformTensor({d_h, 4 * d_h}, scale, rng));
  Tensor bias({4 * d_h});
  for (std::size_t k = 0; k < d_h; ++k) bias[d_h + k] = 1.0;  // forget gate
  p.bias = Parameter(prefix + "bias", std::move(bias));
  return p;
}

std::vector<Parameter *> LstmParams::All() { return {&w, &u, &bias}; }

Var RecurrentCellStep(Tape &tape, Var x, Var state, LstmParams &params) {
  return tape.LstmCell(x, state, tape.Leaf(params.w), tape.Leaf(params.u),
                       tape.Leaf(params.bias));
}

}  // namespace eelmo::net
