#ifndef EELMO_APP_GRADSUITE_H_
#define EELMO_APP_GRADSUITE_H_

#include <cstdint>
#include <string>
#include <vector>

namespace eelmo::app {

inline constexpr double kGradTolerance = 1e-4;
inline constexpr double kGradStep = 1e-5;

struct GradSuiteOptions {
  std::size_t configs_per_op = 13;  // 8 operations -> 104 configurations
  std::uint64_t first_seed = 1;
};

struct OpGradReport {
  std::string op;
  std::size_t configs = 0;
  std::size_t failures = 0;
  double max_relative_error = 0.0;
  std::uint64_t worst_seed = 0;
  std::string worst_parameter;
};

struct GradSuiteReport {
  std::vector<OpGradReport> ops;
  double seconds = 0.0;

  std::size_t configs() const;
  double max_relative_error() const;
  bool passed() const;
};

// Central-difference checks of affine, recurrent cell, char-CNN, sampled
// softmax, bin layer, feed-forward scorer, full E-ELMo loss and full ranker
// loss over seeded random configurations.
GradSuiteReport RunGradSuite(const GradSuiteOptions &options = {});

std::string FormatGradSuite(const GradSuiteReport &report);

}  // namespace eelmo::app

#endif  // EELMO_APP_GRADSUITE_H_
