#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "ananet/tensor.hpp"

namespace ananet::tensorcore {

struct GradCheckReport {
  std::string op_name;
  double max_relative_error = 0.0;
  // Index of the parameter tensor followed by the element's multi-index.
  std::vector<std::size_t> worst_coordinate;
  double epsilon = 0.0;
  std::size_t coordinates_checked = 0;
};

inline constexpr double kDefaultGradCheckEpsilon = 1e-5;

/// Compares the taped gradient of `f` with respect to each leaf in `params`
/// against central differences (f(x+eps) - f(x-eps)) / (2 eps), coordinate by
/// coordinate. Relative error uses max(|analytic|, |numeric|, 1e-8) as the
/// denominator. Parameter values are restored before returning.
GradCheckReport finite_diff_check(const std::string& op_name,
                                  const std::function<Tensor()>& f,
                                  std::vector<Tensor> params,
                                  double eps = kDefaultGradCheckEpsilon);

}  // namespace ananet::tensorcore
