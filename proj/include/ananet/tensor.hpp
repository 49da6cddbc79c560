#pragma once

// Dense double-precision tensors (rank 1..3, row-major) with a reverse-mode
// gradient tape. Every tensor produced by an op is immutable; only leaf
// tensors (parameters, inputs) expose mutable storage.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ananet::tensorcore {

using Dims = std::vector<std::size_t>;

namespace detail {

struct Node {
  Dims dims;
  std::vector<double> values;
  std::vector<double> grad;  // sized like values iff requires_grad
  bool requires_grad = false;
  bool leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads self.grad and accumulates into parents' grads.
  std::function<void(const Node& self)> backward;
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Dims dims, bool requires_grad = false);
  static Tensor from(Dims dims, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Dims& dims() const;
  std::size_t rank() const { return dims().size(); }
  std::size_t size() const { return values().size(); }
  std::size_t rows() const;
  std::size_t cols() const;  // rank 2 only

  std::span<const double> values() const;
  double operator[](std::size_t flat) const { return values()[flat]; }
  double at(std::size_t row, std::size_t col) const;
  /// Value of a single-element tensor.
  double item() const;

  bool requires_grad() const;
  /// Empty span when the tensor does not require a gradient.
  std::span<const double> grad() const;
  void zero_grad();

  bool is_leaf() const;
  /// Writable storage of a leaf tensor; throws for op results.
  std::span<double> mutable_values();

  /// Copy of the values with no tape history.
  Tensor detach() const;
  std::string shape_string() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

std::string dims_string(const Dims& dims);

/// Populates grad = d(loss)/d(tensor) for every requires_grad tensor reachable
/// from `loss`. Gradients accumulate; call zero_grad() between steps.
void backward(const Tensor& loss);

bool grad_enabled() noexcept;

/// Disables tape recording on the current thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

namespace detail {

using BackwardFn = std::function<void(const Node& self)>;

/// Builds an op result. Records `fn` on the tape only when grad mode is on and
/// some input requires a gradient. Rejects non-finite values.
Tensor make_result(const char* op, Dims dims, std::vector<double> values,
                   std::vector<const Tensor*> inputs, BackwardFn fn);

}  // namespace detail

}  // namespace ananet::tensorcore
