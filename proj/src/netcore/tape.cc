#include "eelmo/netcore/tape.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "eelmo/errors.h"
#include "eelmo/netcore/kernels.h"

namespace eelmo::net {

double Softplus(double x) {
  if (x > 30.0) return x;
  return std::log1p(std::exp(x));
}

double SigmoidValue(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

std::string Describe(const Tensor &t) { return ShapeString(t.shape()); }

}  // namespace

void Tape::Check(Var v) const {
  if (!v.valid() || v.id >= nodes_.size()) {
    throw ContractError("variable does not belong to this tape");
  }
}

Var Tape::Push(Tensor value, bool requires_grad,
               std::function<void()> backward) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  if (requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

double *Tape::GradPtr(std::size_t id) {
  Node &node = nodes_[id];
  if (!node.requires_grad) return nullptr;
  if (node.grad.empty()) node.grad.assign(node.value.size(), 0.0);
  return node.grad.data();
}

Var Tape::Constant(Tensor value) { return Push(std::move(value), false, {}); }

Var Tape::Leaf(Parameter &param) {
  auto it = leaves_.find(&param);
  if (it != leaves_.end()) return Var{it->second};
  Var v = Push(param.tensor(), param.trainable(), [] {});
  nodes_[v.id].value.clear_grad();
  nodes_[v.id].param = &param;
  leaves_.emplace(&param, v.id);
  return v;
}

double Tape::scalar(Var v) const {
  Check(v);
  const Tensor &t = nodes_[v.id].value;
  if (t.size() != 1) {
    throw DimensionError("expected a scalar, got shape " + Describe(t));
  }
  return t[0];
}

void Tape::Backward(Var loss) {
  Check(loss);
  if (nodes_[loss.id].value.size() != 1) {
    throw DimensionError("backward target must be scalar, got shape " +
                         Describe(nodes_[loss.id].value));
  }
  for (Node &node : nodes_) node.grad.clear();
  if (!nodes_[loss.id].requires_grad) return;
  GradPtr(loss.id)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node &node = nodes_[i];
    if (!node.requires_grad || node.grad.empty() || !node.backward) continue;
    // Closures only touch gradient buffers; nodes_ never reallocates here.
    node.backward();
  }
  for (Node &node : nodes_) {
    if (node.param == nullptr) continue;
    for (std::size_t row : node.touched) node.param->MarkTouched(row);
    if (node.grad.empty()) continue;
    std::span<double> g = node.param->tensor().grad();
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += node.grad[k];
  }
}

// ---------------------------------------------------------------------------
// Elementwise and structural ops.

namespace {

void RequireSameSize(const Tensor &a, const Tensor &b, const char *op) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(op) + ": shapes " + Describe(a) +
                         " and " + Describe(b) + " differ");
  }
}

}  // namespace

Var Tape::Add(Var a, Var b) {
  Check(a);
  Check(b);
  RequireSameSize(value(a), value(b), "Add");
  Tensor out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += Values(b)[i];
  Var v = Push(std::move(out), Needs(a) || Needs(b), {});
  const std::size_t id = v.id;
  if (nodes_[id].requires_grad) {
    nodes_[id].backward = [this, a, b, id] {
      const std::vector<double> &g = nodes_[id].grad;
      for (Var in : {a, b}) {
        if (double *d = GradPtr(in.id)) {
          for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
        }
      }
    };
  }
  return v;
}

Var Tape::Sub(Var a, Var b) {
  return Add(a, Scale(b, -1.0));
}

Var Tape::Mul(Var a, Var b) {
  Check(a);
  Check(b);
  RequireSameSize(value(a), value(b), "Mul");
  Tensor out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= Values(b)[i];
  Var v = Push(std::move(out), Needs(a) || Needs(b), {});
  const std::size_t id = v.id;
  if (nodes_[id].requires_grad) {
    nodes_[id].backward = [this, a, b, id] {
      const std::vector<double> &g = nodes_[id].grad;
      if (double *da = GradPtr(a.id)) {
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * Values(b)[i];
      }
      if (double *db = GradPtr(b.id)) {
        for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * Values(a)[i];
      }
    };
  }
  return v;
}

Var Tape::Scale(Var a, double factor) {
  Check(a);
  Tensor out = value(a);
  for (double &x : out.values()) x *= factor;
  Var v = Push(std::move(out), Needs(a), {});
  const std::size_t id = v.id;
  if (nodes_[id].requires_grad) {
    nodes_[id].backward = [this, a, factor, id] {
      const std::vector<double> &g = nodes_[id].grad;
      double *d = GradPtr(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * factor;
    };
  }
  return v;
}

Var Tape::MulConstant(Var a, const Tensor &mask) {
  Check(a);
  RequireSameSize(value(a), mask, "MulConstant");
  Tensor out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  Var v = Push(std::move(out), Needs(a), {});
  const std::size_t id = v.id;
  if (nodes_[id].requires_grad) {
    nodes_[id].backward = [this, a, mask, id] {
      const std::vector<double> &g = nodes_[id].grad;
      double *d = GradPtr(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * mask[i];
    };
  }
  return v;
}

Var Tape::Relu(Var a) {
  Check(a);
  Tensor out = value(a);
  for (double &x : out.values()) x = x > 0.0 ? x : 0.0;
  Var v = Push(std::move(out), Needs(a), {});
  const std::size_t id = v.id;
  if (nodes_[id].requires_grad) {
    nodes_[id].backward = [this, a, id] {
      const std::vector<double> &g = nodes_[id].grad;
      double *d = GradPtr(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (Values(a)[i] > 0.0) d[i] += g[i];
      }
    };
  }
  return v;
}

Var Tape::Tanh(Var a) {
  Check(a);
  Tensor out = value(a);
  for (double &x : out.values()) x = std::tanh(x);
  Var v = Push(std::move(out), Needs(a), {});
  const std::size_t id = v.id;
  if (nodes_[id].requires_grad) {
    nodes_[id].backward = [this, a, id] {
      const std::vector<double> &g = nodes_[id].grad;
      const std::vector<double> &y = nodes_[id].value.storage();
      double *d = GradPtr(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) {
        d[i] += g[i] * (1.0 - y[i] * y[i]);
      }
    };
  }
  return v;
}

Var Tape::Sigmoid(Var a) {
  Check(a);
  Tensor out = value(a);
  for (double &x : out.values()) x = SigmoidValue(x);
  Var v = Push(std::move(out), Needs(a), {});
  const std::size_t id = v.id;
  if (nodes_[id].requires_grad) {
    nodes_[id].backward = [this, a, id] {
      const std::vector<double> &g = nodes_[id].grad;
      const std::vector<double> &y = nodes_[id].value.storage();
      double *d = GradPtr(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) {
        d[i] += g[i] * y[i] * (1.0 - y[i]);
      }
    };
  }
  return v;
}

Var Tape::Sum(Var a) {
  Check(a);
  double s = 0.0;
  for (double x : Values(a)) s += x;
  Var v = Push(Tensor::Scalar(s), Needs(a), {});
  const std::size_t id = v.id;
  if (nodes_[id].requires_grad) {
    nodes_[id].backward = [this, a, id] {
      const double g = nodes_[id].grad[0];
      double *d = GradPtr(a.id);
      for (std::size_t i = 0; i < value(a).size(); ++i) d[i] += g;
    };
  }
  return v;
}

Var Tape::Dot(Var a, Var b) {
  Check(a);
  Check(b);
  RequireSameSize(value(a), value(b), "Dot");
  double s = 0.0;
  for (std::size_t i = 0; i < value(a).size(); ++i) {
    s += Values(a)[i] * Values(b)[i];
  }
  Var v = Push(Tensor::Scalar(s), Needs(a) || Needs(b), {});
  const std::size_t id = v.id;
  if (nodes_[id].requires_grad) {
    nodes_[id].backward = [this, a, b, id] {
      const double g = nodes_[id].grad[0];
      const std::size_t n = value(a).size();
      if (double *da = GradPtr(a.id)) {
        for (std::size_t i = 0; i < n; ++i) da[i] += g * Values(b)[i];
      }
      if (double *db = GradPtr(b.id)) {
        for (std::size_t i = 0; i < n; ++i) db[i] += g * Values(a)[i];
      }
    };
  }
  return v;
}

Var Tape::AddN(std::span<const Var> terms) {
  if (terms.empty()) throw DegenerateSetError("AddN of zero terms");
  bool needs = false;
  for (Var t : terms) {
    Check(t);
    RequireSameSize(value(terms[0]), value(t), "AddN");
    needs = needs || Needs(t);
  }
  Tensor out = value(terms[0]);
  for (std::size_t k = 1; k < terms.size(); ++k) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += Values(terms[k])[i];
  }
  Var v = Push(std::move(out), needs, {});
  const std::size_t id = v.id;
  if (needs) {
    std::vector<Var> inputs(terms.begin(), terms.end());
    nodes_[id].backward = [this, inputs, id] {
      const std::vector<double> &g = nodes_[id].grad;
      for (Var in : inputs) {
        if (double *d = GradPtr(in.id)) {
          for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
        }
      }
    };
  }
  return v;
}

Var Tape::Mean(std::span<const Var> terms) {
  if (terms.empty()) throw DegenerateSetError("Mean of zero terms");
  return Scale(AddN(terms), 1.0 / static_cast<double>(terms.size()));
}

Var Tape::Concat(std::span<const Var> parts) {
  if (parts.empty()) throw DegenerateSetError("Concat of zero parts");
  std::vector<double> out;
  bool needs = false;
  for (Var p : parts) {
    Check(p);
    const std::vector<double> &vals = Values(p);
    out.insert(out.end(), vals.begin(), vals.end());
    needs = needs || Needs(p);
  }
  Var v = Push(Tensor::Vector(std::move(out)), needs, {});
  const std::size_t id = v.id;
  if (needs) {
    std::vector<Var> inputs(parts.begin(), parts.end());
    nodes_[id].backward = [this, inputs, id] {
      const std::vector<double> &g = nodes_[id].grad;
      std::size_t offset = 0;
      for (Var in : inputs) {
        const std::size_t n = value(in).size();
        if (double *d = GradPtr(in.id)) {
          for (std::size_t i = 0; i < n; ++i) d[i] += g[offset + i];
        }
        offset += n;
      }
    };
  }
  return v;
}

Var Tape::Slice(Var a, std::size_t offset, std::size_t length) {
  Check(a);
  if (length == 0 || offset + length > value(a).size()) {
    throw DimensionError("slice [" + std::to_string(offset) + ", " +
                         std::to_string(offset + length) +
                         ") outside shape " + Describe(value(a)));
  }
  std::vector<double> out(Values(a).begin() + static_cast<std::ptrdiff_t>(offset),
                          Values(a).begin() +
                              static_cast<std::ptrdiff_t>(offset + length));
  Var v = Push(Tensor::Vector(std::move(out)), Needs(a), {});
  const std::size_t id = v.id;
  if (nodes_[id].requires_grad) {
    nodes_[id].backward = [this, a, offset, id] {
      const std::vector<double> &g = nodes_[id].grad;
      double *d = GradPtr(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) d[offset + i] += g[i];
    };
  }
  return v;
}

Var Tape::Row(Var matrix, std::size_t row) {
  Check(matrix);
  const Tensor &m = value(matrix);
  if (m.rank() != 2 || row >= m.rows()) {
    throw DimensionError("row " + std::to_string(row) + " outside shape " +
                         Describe(m));
  }
  return Slice(matrix, row * m.cols(), m.cols());
}

Var Tape::GatherRow(Var table, std::size_t row) {
  Check(table);
  const Tensor &m = value(table);
  if (m.rank() != 2) {
    throw DimensionError("GatherRow needs a matrix, got " + Describe(m));
  }
  if (row >= m.rows()) {
    throw VocabularyError("row id " + std::to_string(row) +
                          " outside table of " + std::to_string(m.rows()) +
                          " rows");
  }
  if (nodes_[table.id].param != nullptr) nodes_[table.id].touched.push_back(row);
  return Slice(table, row * m.cols(), m.cols());
}

// ---------------------------------------------------------------------------
// Layer kernels.

Var Tape::Affine(Var x, Var w, Var bias) {
  Check(x);
  Check(w);
  Check(bias);
  const Tensor &xt = value(x);
  const Tensor &wt = value(w);
  const Tensor &bt = value(bias);
  const std::size_t n = xt.rank() == 1 ? 1 : xt.rows();
  const std::size_t a = xt.rank() == 1 ? xt.size() : xt.cols();
  if (wt.rank() != 2 || wt.rows() != a || bt.size() != wt.cols() ||
      xt.rank() > 2) {
    throw DimensionError("affine: input " + Describe(xt) + ", weights " +
                         Describe(wt) + ", bias " + Describe(bt) +
                         " do not conform");
  }
  const std::size_t b = wt.cols();
  Shape shape = xt.rank() == 1 ? Shape{b} : Shape{n, b};
  Tensor out(shape);
  kernels::MatMul(xt.values(), wt.values(), out.values(), n, a, b);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < b; ++j) out[i * b + j] += bt[j];
  }
  const bool needs = Needs(x) || Needs(w) || Needs(bias);
  Var v = Push(std::move(out), needs, {});
  const std::size_t id = v.id;
  if (needs) {
    nodes_[id].backward = [this, x, w, bias, n, a, b, id] {
      const std::vector<double> &g = nodes_[id].grad;
      if (double *dx = GradPtr(x.id)) {
        kernels::AccumulateABT(g, Values(w), std::span<double>(dx, n * a), n,
                               a, b);
      }
      if (double *dw = GradPtr(w.id)) {
        kernels::AccumulateATB(Values(x), g, std::span<double>(dw, a * b), n,
                               a, b);
      }
      if (double *db = GradPtr(bias.id)) {
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < b; ++j) db[j] += g[i * b + j];
        }
      }
    };
  }
  return v;
}

Var Tape::LstmCell(Var x, Var state, Var w, Var u, Var bias) {
  for (Var in : {x, state, w, u, bias}) Check(in);
  const Tensor &wt = value(w);
  const Tensor &ut = value(u);
  const std::size_t d_in = value(x).size();
  const std::size_t d_h = value(state).size() / 2;
  if (value(state).size() != 2 * d_h || d_h == 0 || wt.rank() != 2 ||
      wt.rows() != d_in || wt.cols() != 4 * d_h || ut.rank() != 2 ||
      ut.rows() != d_h || ut.cols() != 4 * d_h ||
      value(bias).size() != 4 * d_h) {
    throw DimensionError("lstm cell: input " + Describe(value(x)) +
                         ", state " + Describe(value(state)) + ", w " +
                         Describe(wt) + ", u " + Describe(ut) + ", bias " +
                         Describe(value(bias)) + " do not conform");
  }
  const std::size_t g4 = 4 * d_h;
  const std::vector<double> &h = Values(state);  // first d_h entries
  std::vector<double> z(g4), zh(g4);
  kernels::MatMul(Values(x), wt.values(), z, 1, d_in, g4);
  kernels::MatMul(std::span<const double>(h.data(), d_h), ut.values(), zh, 1,
                  d_h, g4);
  // gates = [i f g o] after activation
  std::vector<double> gates(g4);
  for (std::size_t k = 0; k < g4; ++k) {
    const double pre = z[k] + zh[k] + Values(bias)[k];
    gates[k] = (k >= 2 * d_h && k < 3 * d_h) ? std::tanh(pre)
                                              : SigmoidValue(pre);
  }
  std::vector<double> out(2 * d_h);
  std::vector<double> tanh_c(d_h);
  for (std::size_t k = 0; k < d_h; ++k) {
    const double ig = gates[k], fg = gates[d_h + k], cg = gates[2 * d_h + k],
                 og = gates[3 * d_h + k];
    const double c_new = fg * h[d_h + k] + ig * cg;
    tanh_c[k] = std::tanh(c_new);
    out[d_h + k] = c_new;
    out[k] = og * tanh_c[k];
  }
  const bool needs =
      Needs(x) || Needs(state) || Needs(w) || Needs(u) || Needs(bias);
  Var v = Push(Tensor::Vector(std::move(out)), needs, {});
  const std::size_t id = v.id;
  if (needs) {
    nodes_[id].backward = [this, x, state, w, u, bias, d_in, d_h, g4,
                           gates = std::move(gates),
                           tanh_c = std::move(tanh_c), id] {
      const std::vector<double> &g = nodes_[id].grad;
      const std::vector<double> &prev = Values(state);
      std::vector<double> dz(g4);
      std::vector<double> dc_prev(d_h);
      for (std::size_t k = 0; k < d_h; ++k) {
        const double ig = gates[k], fg = gates[d_h + k],
                     cg = gates[2 * d_h + k], og = gates[3 * d_h + k];
        const double dh = g[k];
        const double dc =
            g[d_h + k] + dh * og * (1.0 - tanh_c[k] * tanh_c[k]);
        dz[k] = dc * cg * ig * (1.0 - ig);
        dz[d_h + k] = dc * prev[d_h + k] * fg * (1.0 - fg);
        dz[2 * d_h + k] = dc * ig * (1.0 - cg * cg);
        dz[3 * d_h + k] = dh * tanh_c[k] * og * (1.0 - og);
        dc_prev[k] = dc * fg;
      }
      if (double *dx = GradPtr(x.id)) {
        kernels::AccumulateABT(dz, Values(w), std::span<double>(dx, d_in), 1,
                               d_in, g4);
      }
      if (double *ds = GradPtr(state.id)) {
        kernels::AccumulateABT(dz, Values(u), std::span<double>(ds, d_h), 1,
                               d_h, g4);
        for (std::size_t k = 0; k < d_h; ++k) ds[d_h + k] += dc_prev[k];
      }
      if (double *dw = GradPtr(w.id)) {
        kernels::AccumulateATB(Values(x), dz, std::span<double>(dw, d_in * g4),
                               1, d_in, g4);
      }
      if (double *du = GradPtr(u.id)) {
        kernels::AccumulateATB(
            std::span<const double>(Values(state).data(), d_h), dz,
            std::span<double>(du, d_h * g4), 1, d_h, g4);
      }
      if (double *db = GradPtr(bias.id)) {
        for (std::size_t k = 0; k < g4; ++k) db[k] += dz[k];
      }
    };
  }
  return v;
}

Var Tape::CharConvPool(const std::vector<std::vector<std::int32_t>> &char_ids,
                       Var embedding, std::span<const std::size_t> widths,
                       std::span<const Var> filters,
                       std::span<const Var> biases) {
  Check(embedding);
  if (char_ids.empty()) throw DegenerateSetError("no tokens to encode");
  if (widths.empty() || widths.size() != filters.size() ||
      widths.size() != biases.size()) {
    throw DimensionError("char conv: " + std::to_string(widths.size()) +
                         " widths, " + std::to_string(filters.size()) +
                         " filters, " + std::to_string(biases.size()) +
                         " biases");
  }
  const Tensor &emb = value(embedding);
  if (emb.rank() != 2) {
    throw DimensionError("char embedding must be a matrix, got " +
                         Describe(emb));
  }
  const std::size_t alphabet = emb.rows();
  const std::size_t d_char = emb.cols();
  const std::size_t len = char_ids[0].size();
  for (const auto &ids : char_ids) {
    if (ids.size() != len) {
      throw DimensionError("char sequences must share one padded length");
    }
    for (std::int32_t c : ids) {
      if (c < 0 || static_cast<std::size_t>(c) >= alphabet) {
        throw VocabularyError("char id " + std::to_string(c) +
                              " outside alphabet of " +
                              std::to_string(alphabet));
      }
    }
  }
  std::size_t n_filters = 0;
  for (std::size_t wi = 0; wi < widths.size(); ++wi) {
    Check(filters[wi]);
    Check(biases[wi]);
    const Tensor &f = value(filters[wi]);
    if (widths[wi] == 0 || widths[wi] > len || f.rank() != 2 ||
        f.rows() != widths[wi] * d_char ||
        value(biases[wi]).size() != f.cols() ||
        (wi > 0 && f.cols() != n_filters)) {
      throw DimensionError("char conv width " + std::to_string(widths[wi]) +
                           ": filter " + Describe(f) + ", bias " +
                           Describe(value(biases[wi])) + ", char length " +
                           std::to_string(len) + ", embedding " +
                           Describe(emb));
    }
    n_filters = f.cols();
  }
  const std::size_t n_tok = char_ids.size();
  const std::size_t out_cols = widths.size() * n_filters;
  Tensor out({n_tok, out_cols});
  // argmax[token][width][filter] = window start chosen by the max pool.
  std::vector<std::size_t> argmax(n_tok * out_cols);
  std::vector<double> window;
  for (std::size_t t = 0; t < n_tok; ++t) {
    const auto &ids = char_ids[t];
    for (std::size_t wi = 0; wi < widths.size(); ++wi) {
      const std::size_t w = widths[wi];
      const std::vector<double> &f = Values(filters[wi]);
      const std::vector<double> &b = Values(biases[wi]);
      window.assign(w * d_char, 0.0);
      for (std::size_t s = 0; s + w <= len; ++s) {
        for (std::size_t j = 0; j < w; ++j) {
          const auto row = emb.row(static_cast<std::size_t>(ids[s + j]));
          std::copy(row.begin(), row.end(), window.begin() + j * d_char);
        }
        for (std::size_t q = 0; q < n_filters; ++q) {
          double pre = b[q];
          for (std::size_t r = 0; r < w * d_char; ++r) {
            pre += window[r] * f[r * n_filters + q];
          }
          const std::size_t slot = t * out_cols + wi * n_filters + q;
          if (s == 0 || pre > out[slot]) {
            out[slot] = pre;
            argmax[slot] = s;
          }
        }
      }
    }
  }
  bool needs = Needs(embedding);
  for (std::size_t wi = 0; wi < widths.size(); ++wi) {
    needs = needs || Needs(filters[wi]) || Needs(biases[wi]);
  }
  Var v = Push(std::move(out), needs, {});
  const std::size_t id = v.id;
  if (needs) {
    std::vector<std::size_t> ws(widths.begin(), widths.end());
    std::vector<Var> fs(filters.begin(), filters.end());
    std::vector<Var> bs(biases.begin(), biases.end());
    nodes_[id].backward = [this, char_ids, embedding, ws, fs, bs, n_filters,
                           out_cols, d_char, argmax = std::move(argmax), id] {
      const std::vector<double> &g = nodes_[id].grad;
      double *de = GradPtr(embedding.id);
      const Tensor &emb = value(embedding);
      for (std::size_t t = 0; t < char_ids.size(); ++t) {
        const auto &ids = char_ids[t];
        for (std::size_t wi = 0; wi < ws.size(); ++wi) {
          const std::size_t w = ws[wi];
          const std::vector<double> &f = Values(fs[wi]);
          double *df = GradPtr(fs[wi].id);
          double *db = GradPtr(bs[wi].id);
          for (std::size_t q = 0; q < n_filters; ++q) {
            const std::size_t slot = t * out_cols + wi * n_filters + q;
            const double gq = g[slot];
            if (gq == 0.0) continue;
            const std::size_t s = argmax[slot];
            if (db) db[q] += gq;
            for (std::size_t j = 0; j < w; ++j) {
              const std::size_t c = static_cast<std::size_t>(ids[s + j]);
              for (std::size_t r = 0; r < d_char; ++r) {
                const std::size_t fr = (j * d_char + r) * n_filters + q;
                if (df) df[fr] += gq * emb.at(c, r);
                if (de) de[c * d_char + r] += gq * f[fr];
              }
            }
          }
        }
      }
    };
  }
  return v;
}

Var Tape::SampledSoftmaxLoss(Var context, Var table, std::size_t target,
                             std::span<const std::size_t> negatives) {
  Check(context);
  Check(table);
  const Tensor &tab = value(table);
  const Tensor &ctx = value(context);
  if (tab.rank() != 2 || tab.cols() != ctx.size()) {
    throw DimensionError("sampled softmax: context " + Describe(ctx) +
                         ", table " + Describe(tab) + " do not conform");
  }
  const std::size_t vocab = tab.rows();
  if (target >= vocab) {
    throw VocabularyError("target " + std::to_string(target) +
                          " outside output space of " + std::to_string(vocab));
  }
  if (negatives.empty()) {
    throw DegenerateSetError("sampled softmax needs at least one negative");
  }
  std::vector<std::size_t> ids;
  ids.reserve(negatives.size() + 1);
  ids.push_back(target);
  for (std::size_t n : negatives) {
    if (n == target) {
      throw ContractError("negative set contains the target " +
                          std::to_string(target));
    }
    if (n >= vocab) {
      throw VocabularyError("negative " + std::to_string(n) +
                            " outside output space of " +
                            std::to_string(vocab));
    }
    ids.push_back(n);
  }
  {
    std::vector<std::size_t> sorted(ids);
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ContractError("negatives must be drawn without replacement");
    }
  }
  const std::size_t d = ctx.size();
  std::vector<double> scores(ids.size());
  double max_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto row = tab.row(ids[i]);
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += ctx[k] * row[k];
    scores[i] = s;
    max_score = std::max(max_score, s);
  }
  double denom = 0.0;
  for (double s : scores) denom += std::exp(s - max_score);
  const double loss = std::log(denom) + max_score - scores[0];
  std::vector<double> probs(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    probs[i] = std::exp(scores[i] - max_score) / denom;
  }
  const bool needs = Needs(context) || Needs(table);
  Var v = Push(Tensor::Scalar(loss), needs, {});
  const std::size_t id = v.id;
  if (nodes_[table.id].param != nullptr) {
    for (std::size_t r : ids) nodes_[table.id].touched.push_back(r);
  }
  if (needs) {
    nodes_[id].backward = [this, context, table, ids = std::move(ids),
                           probs = std::move(probs), d, id] {
      const double g = nodes_[id].grad[0];
      double *dc = GradPtr(context.id);
      double *dt = GradPtr(table.id);
      const Tensor &tab = value(table);
      const std::vector<double> &ctx = Values(context);
      for (std::size_t i = 0; i < ids.size(); ++i) {
        const double ds = g * (probs[i] - (i == 0 ? 1.0 : 0.0));
        const auto row = tab.row(ids[i]);
        if (dc) {
          for (std::size_t k = 0; k < d; ++k) dc[k] += ds * row[k];
        }
        if (dt) {
          double *drow = dt + ids[i] * d;
          for (std::size_t k = 0; k < d; ++k) drow[k] += ds * ctx[k];
        }
      }
    };
  }
  return v;
}

Var Tape::BinProject(Var x, Var centers, Var rho) {
  Check(x);
  Check(centers);
  Check(rho);
  if (value(x).size() != 1 || value(centers).size() != value(rho).size() ||
      value(centers).size() == 0) {
    throw DimensionError("bin project: x " + Describe(value(x)) +
                         ", centers " + Describe(value(centers)) + ", rho " +
                         Describe(value(rho)) + " do not conform");
  }
  const std::size_t d = value(centers).size();
  const double xv = Values(x)[0];
  std::vector<double> out(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double eps = Softplus(Values(rho)[i]);
    const double u = eps * std::abs(xv - Values(centers)[i]);
    out[i] = std::exp(-u * u);
  }
  const bool needs = Needs(x) || Needs(centers) || Needs(rho);
  Var v = Push(Tensor::Vector(std::move(out)), needs, {});
  const std::size_t id = v.id;
  if (needs) {
    nodes_[id].backward = [this, x, centers, rho, d, id] {
      const std::vector<double> &g = nodes_[id].grad;
      const std::vector<double> &p = nodes_[id].value.storage();
      const double xv = Values(x)[0];
      double *dx = GradPtr(x.id);
      double *dcen = GradPtr(centers.id);
      double *drho = GradPtr(rho.id);
      for (std::size_t i = 0; i < d; ++i) {
        const double r = Values(rho)[i];
        const double eps = Softplus(r);
        const double diff = xv - Values(centers)[i];
        // p = exp(-eps^2 diff^2)
        const double dp_ddiff = -2.0 * eps * eps * diff * p[i];
        const double dp_deps = -2.0 * eps * diff * diff * p[i];
        if (dx) dx[0] += g[i] * dp_ddiff;
        if (dcen) dcen[i] -= g[i] * dp_ddiff;
        if (drho) drho[i] += g[i] * dp_deps * SigmoidValue(r);
      }
    };
  }
  return v;
}

Var Tape::SoftmaxCrossEntropy(std::span<const Var> scores, std::size_t gold) {
  if (scores.empty()) throw DegenerateSetError("no scores to normalize");
  if (gold >= scores.size()) {
    throw ContractError("gold index " + std::to_string(gold) +
                        " outside " + std::to_string(scores.size()) +
                        " scores");
  }
  std::vector<double> s(scores.size());
  bool needs = false;
  double max_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    s[i] = scalar(scores[i]);
    needs = needs || Needs(scores[i]);
    max_score = std::max(max_score, s[i]);
  }
  double denom = 0.0;
  for (double x : s) denom += std::exp(x - max_score);
  const double loss = std::log(denom) + max_score - s[gold];
  std::vector<double> probs(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    probs[i] = std::exp(s[i] - max_score) / denom;
  }
  Var v = Push(Tensor::Scalar(loss), needs, {});
  const std::size_t id = v.id;
  if (needs) {
    std::vector<Var> inputs(scores.begin(), scores.end());
    nodes_[id].backward = [this, inputs, probs = std::move(probs), gold, id] {
      const double g = nodes_[id].grad[0];
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (double *d = GradPtr(inputs[i].id)) {
          d[0] += g * (probs[i] - (i == gold ? 1.0 : 0.0));
        }
      }
    };
  }
  return v;
}

Var Tape::SoftmaxCrossEntropyChange(std::span<const Var> scores, std::size_t gold,
                                    std::span<const double> reference) {
  if (reference.size() != scores.size()) {
    throw DimensionError("reference has " + std::to_string(reference.size()) +
                         " scores, expected " + std::to_string(scores.size()));
  }
  Var full = SoftmaxCrossEntropy(scores, gold);
  const std::size_t n = scores.size();
  double ref_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) ref_max = std::max(ref_max, reference[i] - reference[gold]);
  std::vector<double> w(n);
  double w_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = std::exp(reference[i] - reference[gold] - ref_max);
    w_sum += w[i];
  }
  const double shift_gold = scalar(scores[gold]) - reference[gold];
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double delta = (scalar(scores[i]) - reference[i]) - shift_gold;
    acc += w[i] / w_sum * std::expm1(delta);
  }
  // Reuse the full node's backward; only the value changes.
  nodes_[full.id].value[0] = std::log1p(acc);
  return full;
}

}  // namespace eelmo::net
