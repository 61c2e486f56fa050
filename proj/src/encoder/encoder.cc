#include "eelmo/encoder/encoder.h"

#include <string>

#include "eelmo/errors.h"

namespace eelmo::encoder {

EncoderParams EncoderParams::Init(const EncoderShape &shape,
                                  net::SeededRng &rng) {
  if (shape.layers == 0) throw ParameterError("encoder needs at least one layer");
  if (shape.d_h == 0) throw ParameterError("encoder d_h must be positive");
  EncoderParams p;
  p.shape = shape;
  p.char_cnn = net::CharCnnParams::Init("encoder/", shape.char_cnn, rng);
  for (std::size_t j = 0; j < shape.layers; ++j) {
    const std::size_t d_in = j == 0 ? shape.char_cnn.d_tok : shape.d_h;
    const std::string layer = std::to_string(j + 1);
    p.forward.push_back(
        net::LstmParams::Init("encoder/forward" + layer + "/", d_in, shape.d_h, rng));
    p.backward.push_back(
        net::LstmParams::Init("encoder/backward" + layer + "/", d_in, shape.d_h, rng));
  }
  return p;
}

std::vector<net::Parameter *> EncoderParams::CharParams() { return char_cnn.All(); }

std::vector<net::Parameter *> EncoderParams::RecurrentParams() {
  std::vector<net::Parameter *> out;
  for (std::size_t j = 0; j < forward.size(); ++j) {
    for (net::Parameter *p : forward[j].All()) out.push_back(p);
    for (net::Parameter *p : backward[j].All()) out.push_back(p);
  }
  return out;
}

std::vector<net::Parameter *> EncoderParams::All() {
  std::vector<net::Parameter *> out = CharParams();
  for (net::Parameter *p : RecurrentParams()) out.push_back(p);
  return out;
}

namespace {

std::vector<net::Var> RunLayer(net::Tape &tape, const std::vector<net::Var> &inputs,
                               net::LstmParams &cell, bool reverse, bool residual) {
  const std::size_t n = inputs.size();
  const std::size_t d_h = cell.d_h;
  std::vector<net::Var> out(n);
  net::Var state = tape.Constant(net::Tensor({2 * d_h}));
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t k = reverse ? n - 1 - step : step;
    state = net::RecurrentCellStep(tape, inputs[k], state, cell);
    net::Var h = tape.Slice(state, 0, d_h);
    out[k] = residual ? tape.Add(h, inputs[k]) : h;
  }
  return out;
}

}  // namespace

EncodedSequence Encode(net::Tape &tape,
                       const std::vector<std::vector<std::int32_t>> &chars,
                       EncoderParams &params) {
  if (chars.size() < 2) {
    throw ContractError("encoder input needs BOS and EOS positions");
  }
  EncodedSequence seq;
  seq.token_reprs = net::CharConvEncode(tape, chars, params.char_cnn);
  std::vector<net::Var> rows(chars.size());
  for (std::size_t k = 0; k < chars.size(); ++k) {
    rows[k] = tape.Row(seq.token_reprs, k);
  }
  std::vector<net::Var> fwd_in = rows, bwd_in = rows;
  for (std::size_t j = 0; j < params.shape.layers; ++j) {
    const bool residual = params.shape.residual && j > 0;
    seq.forward.push_back(RunLayer(tape, fwd_in, params.forward[j], false, residual));
    seq.backward.push_back(RunLayer(tape, bwd_in, params.backward[j], true, residual));
    fwd_in = seq.forward.back();
    bwd_in = seq.backward.back();
  }
  return seq;
}

}  // namespace eelmo::encoder
