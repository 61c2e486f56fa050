#ifndef EELMO_NETCORE_TENSOR_H_
#define EELMO_NETCORE_TENSOR_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace eelmo::net {

using Shape = std::vector<std::size_t>;

std::size_t ShapeSize(const Shape &shape);
std::string ShapeString(const Shape &shape);

// Dense row-major array of doubles with an optional gradient buffer of the
// same extent. Rank-1 tensors are treated as a single row by rows()/cols().
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor Vector(std::vector<double> values);
  static Tensor Scalar(double value);

  const Shape &shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  std::size_t rank() const { return shape_.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::vector<double> &storage() { return values_; }
  const std::vector<double> &storage() const { return values_; }

  double &operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double &at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const {
    return values_[r * cols() + c];
  }
  std::span<double> row(std::size_t r);
  std::span<const double> row(std::size_t r) const;

  bool has_grad() const { return grad_.has_value(); }
  // Allocates a zero gradient if none is present.
  std::span<double> grad();
  std::span<const double> grad() const;
  void zero_grad();
  void clear_grad() { grad_.reset(); }

  bool AllFinite() const;

 private:
  Shape shape_;
  std::vector<double> values_;
  std::optional<std::vector<double>> grad_;
};

}  // namespace eelmo::net

#endif  // EELMO_NETCORE_TENSOR_H_
