#ifndef SIMAN_TENSOR_HPP
#define SIMAN_TENSOR_HPP

#include <cstddef>
#include <vector>

#include "siman/errors.hpp"

namespace siman {

// Dense row-major tensor of doubles. Just storage plus shape; layers index
// into data directly.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s);

  std::size_t size() const { return data.size(); }
  double* begin() { return data.data(); }
  double* end() { return data.data() + data.size(); }
  const double* begin() const { return data.data(); }
  const double* end() const { return data.data() + data.size(); }

  void fill(double v);
  bool all_finite() const;
};

std::size_t shape_size(const std::vector<std::size_t>& shape);

}  // namespace siman

#endif
