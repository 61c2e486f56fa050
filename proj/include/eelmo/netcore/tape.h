#ifndef EELMO_NETCORE_TAPE_H_
#define EELMO_NETCORE_TAPE_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

#include "eelmo/netcore/parameter.h"
#include "eelmo/netcore/tensor.h"

namespace eelmo::net {

// Handle to a value recorded on a Tape.
struct Var {
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::size_t id = kNone;
  bool valid() const { return id != kNone; }
};

// Reverse-mode differentiation tape. Every op computes its value eagerly and
// records a closure that pushes the output gradient to its inputs. Backward()
// walks the tape in reverse and then adds leaf gradients into the bound
// Parameters. A tape is single-use and single-threaded; build one per
// example.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  Var Constant(Tensor value);
  // A parameter enters the tape once; repeated calls return the same Var.
  // Frozen parameters enter as constants and receive no gradient.
  Var Leaf(Parameter &param);

  const Tensor &value(Var v) const { return nodes_.at(v.id).value; }
  double scalar(Var v) const;
  // Gradient of the last Backward() target w.r.t. v (empty if v got none).
  std::span<const double> grad(Var v) const { return nodes_.at(v.id).grad; }
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1. loss must hold exactly one value.
  void Backward(Var loss);

  // --- elementwise and structural ops ------------------------------------
  Var Add(Var a, Var b);
  Var Sub(Var a, Var b);
  Var Mul(Var a, Var b);
  Var Scale(Var a, double factor);
  Var MulConstant(Var a, const Tensor &mask);
  Var Relu(Var a);
  Var Tanh(Var a);
  Var Sigmoid(Var a);
  Var Sum(Var a);
  Var Dot(Var a, Var b);
  // Elementwise sum / mean of equally sized values.
  Var AddN(std::span<const Var> terms);
  Var Mean(std::span<const Var> terms);
  // Rank-1 concatenation of the flattened inputs.
  Var Concat(std::span<const Var> parts);
  Var Slice(Var a, std::size_t offset, std::size_t length);
  Var Row(Var matrix, std::size_t row);
  // Row of a table; records the row as touched on the bound Parameter.
  Var GatherRow(Var table, std::size_t row);

  // --- layer kernels -----------------------------------------------------
  // x[n x a] (or [a]) * w[a x b] + bias[b].
  Var Affine(Var x, Var w, Var bias);

  // One LSTM step. state = [h; c] (2*d_h); returns the new [h'; c'].
  // Gate blocks of w[d_in x 4d_h], u[d_h x 4d_h], bias[4d_h] are ordered
  // input, forget, candidate, output.
  Var LstmCell(Var x, Var state, Var w, Var u, Var bias);

  // Character convolution with max-over-time pooling. char_ids holds one
  // equal-length id sequence per token. For each width, filters[i] is
  // [(width*d_char) x n_filters] and biases[i] is [n_filters]. Output is
  // [n_tokens x (widths * n_filters)], width blocks in the given order.
  Var CharConvPool(const std::vector<std::vector<std::int32_t>> &char_ids,
                   Var embedding, std::span<const std::size_t> widths,
                   std::span<const Var> filters, std::span<const Var> biases);

  // -log(exp(s_t) / (exp(s_t) + sum_n exp(s_n))), s_v = context . table[v].
  Var SampledSoftmaxLoss(Var context, Var table, std::size_t target,
                         std::span<const std::size_t> negatives);

  // p_i = exp(-(softplus(rho_i) * |x - centers_i|)^2). x is a scalar.
  Var BinProject(Var x, Var centers, Var rho);

  // -log softmax(scores)[gold]; each score is a scalar Var.
  Var SoftmaxCrossEntropy(std::span<const Var> scores, std::size_t gold);

  // SoftmaxCrossEntropy(scores) - SoftmaxCrossEntropy(reference), formed
  // from score changes so it carries no O(1) rounding. Same gradient.
  Var SoftmaxCrossEntropyChange(std::span<const Var> scores, std::size_t gold,
                                std::span<const double> reference);

 private:
  struct Node {
    Tensor value;
    std::vector<double> grad;
    std::function<void()> backward;
    bool requires_grad = false;
    Parameter *param = nullptr;
    std::vector<std::size_t> touched;
  };

  Var Push(Tensor value, bool requires_grad, std::function<void()> backward);
  // Gradient buffer of node id, allocated on demand; nullptr when the node
  // does not need one.
  double *GradPtr(std::size_t id);
  bool Needs(Var v) const { return nodes_[v.id].requires_grad; }
  const std::vector<double> &Values(Var v) const {
    return nodes_[v.id].value.storage();
  }
  void Check(Var v) const;

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter *, std::size_t> leaves_;
};

double Softplus(double x);
double SigmoidValue(double x);

}  // namespace eelmo::net

#endif  // EELMO_NETCORE_TAPE_H_
