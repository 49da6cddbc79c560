#include "ananet/tensor.hpp"

#include <cmath>
#include <numeric>
#include <unordered_set>

#include "ananet/error.hpp"

namespace ananet::tensorcore {

namespace {

thread_local bool g_grad_enabled = true;

std::size_t product(const Dims& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         std::multiplies<>());
}

void validate_dims(const Dims& dims) {
  if (dims.empty() || dims.size() > 3) {
    throw ShapeError("tensor rank must be 1..3, got " +
                     std::to_string(dims.size()));
  }
  for (auto d : dims) {
    if (d == 0) throw ShapeError("tensor dims must be >= 1, got " + dims_string(dims));
  }
}

std::shared_ptr<detail::Node> make_leaf(Dims dims, std::vector<double> values,
                                        bool requires_grad) {
  validate_dims(dims);
  if (values.size() != product(dims)) {
    throw ShapeError("value count " + std::to_string(values.size()) +
                     " does not match dims " + dims_string(dims));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError("tensor values must be finite");
  }
  auto node = std::make_shared<detail::Node>();
  node->dims = std::move(dims);
  node->values = std::move(values);
  node->requires_grad = requires_grad;
  if (requires_grad) node->grad.assign(node->values.size(), 0.0);
  return node;
}

const detail::Node& checked(const std::shared_ptr<detail::Node>& node) {
  if (!node) throw Error("use of an undefined tensor");
  return *node;
}

}  // namespace

std::string dims_string(const Dims& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

Tensor Tensor::zeros(Dims dims, bool requires_grad) {
  auto n = product(dims);
  return Tensor(make_leaf(std::move(dims), std::vector<double>(n, 0.0),
                          requires_grad));
}

Tensor Tensor::from(Dims dims, std::vector<double> values, bool requires_grad) {
  return Tensor(make_leaf(std::move(dims), std::move(values), requires_grad));
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  auto n = values.size();
  return from({n}, std::move(values), requires_grad);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> values, bool requires_grad) {
  return from({rows, cols}, std::move(values), requires_grad);
}

const Dims& Tensor::dims() const { return checked(node_).dims; }

std::size_t Tensor::rows() const { return dims()[0]; }

std::size_t Tensor::cols() const {
  if (rank() != 2) throw ShapeError("cols() on non-matrix " + shape_string());
  return dims()[1];
}

std::span<const double> Tensor::values() const { return checked(node_).values; }

double Tensor::at(std::size_t row, std::size_t col) const {
  return values()[row * cols() + col];
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on non-scalar " + shape_string());
  return values()[0];
}

bool Tensor::requires_grad() const { return checked(node_).requires_grad; }

std::span<const double> Tensor::grad() const { return checked(node_).grad; }

void Tensor::zero_grad() {
  auto& g = node_->grad;
  std::fill(g.begin(), g.end(), 0.0);
}

bool Tensor::is_leaf() const { return checked(node_).leaf; }

std::span<double> Tensor::mutable_values() {
  if (!is_leaf()) throw Error("mutable_values() on an op result");
  return node_->values;
}

Tensor Tensor::detach() const {
  return from(dims(), std::vector<double>(values().begin(), values().end()));
}

std::string Tensor::shape_string() const { return dims_string(dims()); }

void backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw ShapeError("backward() needs a scalar loss, got " + loss.shape_string());
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (parent->requires_grad && !visited.count(parent)) {
        visited.insert(parent);
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward(**it);
  }
}

bool grad_enabled() noexcept { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }

NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

namespace detail {

Tensor make_result(const char* op, Dims dims, std::vector<double> values,
                   std::vector<const Tensor*> inputs, BackwardFn fn) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string(op) + " produced a non-finite value");
    }
  }
  auto node = std::make_shared<Node>();
  node->dims = std::move(dims);
  node->values = std::move(values);
  node->leaf = false;
  bool track = false;
  if (g_grad_enabled) {
    for (const Tensor* t : inputs) track = track || t->requires_grad();
  }
  if (track) {
    node->requires_grad = true;
    node->grad.assign(node->values.size(), 0.0);
    node->parents.reserve(inputs.size());
    for (const Tensor* t : inputs) node->parents.push_back(t->node());
    node->backward = std::move(fn);
  }
  return Tensor(std::move(node));
}

}  // namespace detail

}  // namespace ananet::tensorcore
