#ifndef EELMO_NETCORE_OPTIM_H_
#define EELMO_NETCORE_OPTIM_H_

#include <cstddef>
#include <span>

#include "eelmo/netcore/parameter.h"
#include "eelmo/netcore/rng.h"
#include "eelmo/netcore/tensor.h"

namespace eelmo::net {

inline constexpr double kOptimizerEpsilon = 1e-8;

// accumulator += g^2; p -= lr * g / (sqrt(accumulator) + 1e-8).
// Frozen parameters are left untouched; a trainable parameter without a
// gradient raises StateError.
void AdagradStep(Parameter &p, double lr);

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = kOptimizerEpsilon;
};

// Bias-corrected Adam update.
void AdamStep(Parameter &p, const AdamOptions &options);

// Divides each named row of a matrix parameter by its L2 norm.
void RenormalizeUnitSphere(std::span<const std::size_t> rows, Parameter &table);

// Inverted-dropout mask: 0 with probability rate, else 1/(1-rate). All ones
// outside training or when rate is 0.
Tensor DropoutMask(std::size_t extent, double rate, SeededRng &rng,
                   bool training);

}  // namespace eelmo::net

#endif  // EELMO_NETCORE_OPTIM_H_
