#include "eelmo/netcore/optim.h"

#include <cmath>
#include <string>
#include <utility>

#include "eelmo/errors.h"

namespace eelmo::net {

namespace {

void RequireGrad(const Parameter &p) {
  if (!p.tensor().has_grad()) {
    throw StateError("parameter '" + p.id() + "' has no gradient");
  }
}

}  // namespace

void AdagradStep(Parameter &p, double lr) {
  if (!p.trainable()) return;
  RequireGrad(p);
  std::span<double> values = p.tensor().values();
  std::span<const double> grad = std::as_const(p.tensor()).grad();
  std::vector<double> &acc = p.state().accumulator;
  if (acc.size() != values.size()) acc.assign(values.size(), 0.0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double g = grad[i];
    if (g == 0.0) continue;
    acc[i] += g * g;
    values[i] -= lr * g / (std::sqrt(acc[i]) + kOptimizerEpsilon);
  }
}

void AdamStep(Parameter &p, const AdamOptions &options) {
  if (!p.trainable()) return;
  RequireGrad(p);
  std::span<double> values = p.tensor().values();
  std::span<const double> grad = std::as_const(p.tensor()).grad();
  OptimizerState &st = p.state();
  if (st.first_moment.size() != values.size()) {
    st.first_moment.assign(values.size(), 0.0);
    st.second_moment.assign(values.size(), 0.0);
    st.step = 0;
  }
  st.step += 1;
  const double t = static_cast<double>(st.step);
  const double correction1 = 1.0 - std::pow(options.beta1, t);
  const double correction2 = 1.0 - std::pow(options.beta2, t);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double g = grad[i];
    st.first_moment[i] = options.beta1 * st.first_moment[i] +
                         (1.0 - options.beta1) * g;
    st.second_moment[i] = options.beta2 * st.second_moment[i] +
                          (1.0 - options.beta2) * g * g;
    const double m_hat = st.first_moment[i] / correction1;
    const double v_hat = st.second_moment[i] / correction2;
    values[i] -= options.lr * m_hat / (std::sqrt(v_hat) + options.epsilon);
  }
}

void RenormalizeUnitSphere(std::span<const std::size_t> rows,
                           Parameter &table) {
  Tensor &t = table.tensor();
  if (t.rank() != 2) {
    throw DimensionError("unit-sphere projection needs a matrix, '" +
                         table.id() + "' has shape " +
                         ShapeString(t.shape()));
  }
  for (std::size_t r : rows) {
    if (r >= t.rows()) {
      throw VocabularyError("row " + std::to_string(r) + " outside '" +
                            table.id() + "'");
    }
    std::span<double> row = t.row(r);
    double sq = 0.0;
    for (double x : row) sq += x * x;
    const double norm = std::sqrt(sq);
    if (norm == 0.0) {
      throw NormalizationError("row " + std::to_string(r) + " of '" +
                               table.id() + "' has zero norm");
    }
    for (double &x : row) x /= norm;
  }
}

Tensor DropoutMask(std::size_t extent, double rate, SeededRng &rng,
                   bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ParameterError("dropout rate must lie in [0, 1), got " +
                         std::to_string(rate));
  }
  Tensor mask({extent});
  if (!training || rate == 0.0) {
    for (double &x : mask.values()) x = 1.0;
    return mask;
  }
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double &x : mask.values()) {
    x = rng.Uniform() < rate ? 0.0 : keep_scale;
  }
  return mask;
}

}  // namespace eelmo::net
