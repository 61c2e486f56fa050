#ifndef EELMO_NETCORE_GRADCHECK_H_
#define EELMO_NETCORE_GRADCHECK_H_

#include <functional>
#include <string>
#include <vector>

#include "eelmo/netcore/parameter.h"
#include "eelmo/netcore/tape.h"

namespace eelmo::net {

// Builds a scalar loss on a fresh tape. Must be deterministic: any sampling
// inside has to reseed from a fixed value on every call.
using LossBuilder = std::function<Var(Tape &)>;

struct ParameterCheck {
  std::string id;
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;  // at worst_index
  double numeric = 0.0;   // at worst_index
};

struct GradcheckResult {
  std::vector<ParameterCheck> per_parameter;
  double max_relative_error = 0.0;
  double loss = 0.0;
};

// Compares reverse-mode gradients against central differences
// (f(t+h) - f(t-h)) / 2h coordinate by coordinate. The relative error uses
// the denominator max(|analytic|, |numeric|, 1e-8).
GradcheckResult Gradcheck(const LossBuilder &build,
                          const std::vector<Parameter *> &params,
                          double step = 1e-5);

double RelativeError(double analytic, double numeric);

}  // namespace eelmo::net

#endif  // EELMO_NETCORE_GRADCHECK_H_
