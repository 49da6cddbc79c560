#include "ananet/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "ananet/error.hpp"

namespace ananet::tensorcore {

namespace {

std::vector<std::size_t> unravel(std::size_t flat, const Dims& dims) {
  std::vector<std::size_t> index(dims.size());
  for (std::size_t k = dims.size(); k-- > 0;) {
    index[k] = flat % dims[k];
    flat /= dims[k];
  }
  return index;
}

}  // namespace

GradCheckReport finite_diff_check(const std::string& op_name,
                                  const std::function<Tensor()>& f,
                                  std::vector<Tensor> params, double eps) {
  if (!(eps > 0.0)) throw Error("finite_diff_check: eps must be > 0");
  for (const auto& p : params) {
    if (!p.is_leaf() || !p.requires_grad()) {
      throw Error("finite_diff_check: parameters must be leaves requiring grad");
    }
  }

  for (auto& p : params) p.zero_grad();
  backward(f());
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.emplace_back(p.grad().begin(), p.grad().end());

  GradCheckReport report;
  report.op_name = op_name;
  report.epsilon = eps;

  NoGradGuard no_grad;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto values = params[k].mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      values[i] = original + eps;
      const double plus = f().item();
      values[i] = original - eps;
      const double minus = f().item();
      values[i] = original;

      const double numeric = (plus - minus) / (2.0 * eps);
      const double a = analytic[k][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      ++report.coordinates_checked;
      if (rel > report.max_relative_error || report.worst_coordinate.empty()) {
        report.max_relative_error = std::max(rel, report.max_relative_error);
        report.worst_coordinate = {k};
        auto idx = unravel(i, params[k].dims());
        report.worst_coordinate.insert(report.worst_coordinate.end(), idx.begin(),
                                       idx.end());
      }
    }
  }
  for (auto& p : params) p.zero_grad();
  return report;
}

}  // namespace ananet::tensorcore
