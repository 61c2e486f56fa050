#ifndef EELMO_NETCORE_PARAMETER_H_
#define EELMO_NETCORE_PARAMETER_H_

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "eelmo/netcore/tensor.h"

namespace eelmo::net {

// Per-algorithm accumulators. AdaGrad uses `accumulator`; Adam uses the two
// moment arrays and `step`.
struct OptimizerState {
  std::vector<double> accumulator;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::int64_t step = 0;
};

class Parameter {
 public:
  Parameter() = default;
  Parameter(std::string id, Tensor tensor, bool trainable = true)
      : id_(std::move(id)), tensor_(std::move(tensor)), trainable_(trainable) {}

  const std::string &id() const { return id_; }
  Tensor &tensor() { return tensor_; }
  const Tensor &tensor() const { return tensor_; }
  bool trainable() const { return trainable_; }
  void set_trainable(bool trainable) { trainable_ = trainable; }
  OptimizerState &state() { return state_; }
  const OptimizerState &state() const { return state_; }

  // Rows read through row-gathering ops since the last ClearTouched().
  const std::set<std::size_t> &touched_rows() const { return touched_; }
  void MarkTouched(std::size_t row) { touched_.insert(row); }
  void ClearTouched() { touched_.clear(); }

  // Drops gradient and touched-row bookkeeping.
  void ResetGrad() {
    tensor_.zero_grad();
    touched_.clear();
  }

 private:
  std::string id_;
  Tensor tensor_;
  bool trainable_ = true;
  OptimizerState state_;
  std::set<std::size_t> touched_;
};

}  // namespace eelmo::net

#endif  // EELMO_NETCORE_PARAMETER_H_
