#include "eelmo/netcore/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "eelmo/errors.h"

namespace eelmo::net {

namespace {

double Evaluate(const LossBuilder &build) {
  Tape tape;
  const double loss = tape.scalar(build(tape));
  if (!std::isfinite(loss)) throw NumericError("gradcheck: non-finite loss");
  return loss;
}

}  // namespace

double RelativeError(double analytic, double numeric) {
  const double denom =
      std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradcheckResult Gradcheck(const LossBuilder &build,
                          const std::vector<Parameter *> &params,
                          double step) {
  if (!(step > 0.0)) throw ParameterError("gradcheck step must be positive");
  for (Parameter *p : params) p->ResetGrad();

  GradcheckResult result;
  {
    Tape tape;
    Var loss = build(tape);
    result.loss = tape.scalar(loss);
    if (!std::isfinite(result.loss)) {
      throw NumericError("gradcheck: non-finite loss");
    }
    tape.Backward(loss);
  }

  for (Parameter *p : params) {
    ParameterCheck check;
    check.id = p->id();
    std::span<double> values = p->tensor().values();
    std::vector<double> analytic(values.size(), 0.0);
    if (p->tensor().has_grad()) {
      auto g = std::as_const(p->tensor()).grad();
      analytic.assign(g.begin(), g.end());
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double plus = Evaluate(build);
      values[i] = saved - step;
      const double minus = Evaluate(build);
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * step);
      const double err = RelativeError(analytic[i], numeric);
      if (err > check.max_relative_error || i == 0) {
        check.max_relative_error = err;
        check.worst_index = i;
        check.analytic = analytic[i];
        check.numeric = numeric;
      }
    }
    result.max_relative_error =
        std::max(result.max_relative_error, check.max_relative_error);
    result.per_parameter.push_back(check);
  }
  for (Parameter *p : params) p->ResetGrad();
  return result;
}

}  // namespace eelmo::net
