#include "ananet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ananet/error.hpp"

namespace ananet::tensorcore {

using detail::make_result;
using detail::Node;

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) +
                     ", got " + t.shape_string());
  }
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.dims() != b.dims()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() +
                     " vs " + b.shape_string());
  }
}

// Grad buffer of parent k, or nullptr when that parent takes no gradient.
double* grad_of(const Node& self, std::size_t k) {
  auto& p = self.parents[k];
  return p->requires_grad ? p->grad.data() : nullptr;
}

const double* values_of(const Node& self, std::size_t k) {
  return self.parents[k]->values.data();
}

template <typename Forward, typename Derivative>
Tensor unary(const char* op, const Tensor& a, Forward f, Derivative df) {
  auto in = a.values();
  std::vector<double> out(in.size());
  std::transform(in.begin(), in.end(), out.begin(), f);
  return make_result(op, a.dims(), std::move(out), {&a},
                     [df](const Node& self) {
                       double* ga = grad_of(self, 0);
                       if (!ga) return;
                       const double* x = values_of(self, 0);
                       for (std::size_t i = 0; i < self.values.size(); ++i) {
                         ga[i] += self.grad[i] * df(x[i], self.values[i]);
                       }
                     });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul: inner dimensions differ, " + a.shape_string() +
                     " · " + b.shape_string());
  }
  std::vector<double> out(m * n, 0.0);
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t l = 0; l < k; ++l) {
      const double ail = av[i * k + l];
      if (ail == 0.0) continue;
      const double* brow = &bv[l * n];
      double* orow = &out[i * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += ail * brow[j];
    }
  }
  return make_result("matmul", {m, n}, std::move(out), {&a, &b},
                     [m, k, n](const Node& self) {
                       const double* av = values_of(self, 0);
                       const double* bv = values_of(self, 1);
                       const double* g = self.grad.data();
                       if (double* ga = grad_of(self, 0)) {
                         for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t l = 0; l < k; ++l) {
                             double acc = 0.0;
                             for (std::size_t j = 0; j < n; ++j)
                               acc += g[i * n + j] * bv[l * n + j];
                             ga[i * k + l] += acc;
                           }
                       }
                       if (double* gb = grad_of(self, 1)) {
                         for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t l = 0; l < k; ++l) {
                             const double ail = av[i * k + l];
                             for (std::size_t j = 0; j < n; ++j)
                               gb[l * n + j] += ail * g[i * n + j];
                           }
                       }
                     });
}

Tensor matvec(const Tensor& w, const Tensor& x) {
  require_rank(w, 2, "matvec");
  require_rank(x, 1, "matvec");
  const std::size_t m = w.rows(), n = w.cols();
  if (x.size() != n) {
    throw ShapeError("matvec: " + w.shape_string() + " · " + x.shape_string());
  }
  std::vector<double> out(m, 0.0);
  auto wv = w.values();
  auto xv = x.values();
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += wv[i * n + j] * xv[j];
    out[i] = acc;
  }
  return make_result("matvec", {m}, std::move(out), {&w, &x},
                     [m, n](const Node& self) {
                       const double* wv = values_of(self, 0);
                       const double* xv = values_of(self, 1);
                       const double* g = self.grad.data();
                       if (double* gw = grad_of(self, 0)) {
                         for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t j = 0; j < n; ++j)
                             gw[i * n + j] += g[i] * xv[j];
                       }
                       if (double* gx = grad_of(self, 1)) {
                         for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t j = 0; j < n; ++j)
                             gx[j] += wv[i * n + j] * g[i];
                       }
                     });
}

Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose");
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  auto av = a.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  return make_result("transpose", {n, m}, std::move(out), {&a},
                     [m, n](const Node& self) {
                       double* ga = grad_of(self, 0);
                       if (!ga) return;
                       for (std::size_t i = 0; i < m; ++i)
                         for (std::size_t j = 0; j < n; ++j)
                           ga[i * n + j] += self.grad[j * m + i];
                     });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same(a, b, "add");
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return make_result("add", a.dims(), std::move(out), {&a, &b},
                     [](const Node& self) {
                       for (std::size_t k = 0; k < 2; ++k)
                         if (double* g = grad_of(self, k))
                           for (std::size_t i = 0; i < self.grad.size(); ++i)
                             g[i] += self.grad[i];
                     });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same(a, b, "sub");
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return make_result("sub", a.dims(), std::move(out), {&a, &b},
                     [](const Node& self) {
                       if (double* g = grad_of(self, 0))
                         for (std::size_t i = 0; i < self.grad.size(); ++i)
                           g[i] += self.grad[i];
                       if (double* g = grad_of(self, 1))
                         for (std::size_t i = 0; i < self.grad.size(); ++i)
                           g[i] -= self.grad[i];
                     });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same(a, b, "mul");
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_result("mul", a.dims(), std::move(out), {&a, &b},
                     [](const Node& self) {
                       const double* av = values_of(self, 0);
                       const double* bv = values_of(self, 1);
                       if (double* g = grad_of(self, 0))
                         for (std::size_t i = 0; i < self.grad.size(); ++i)
                           g[i] += self.grad[i] * bv[i];
                       if (double* g = grad_of(self, 1))
                         for (std::size_t i = 0; i < self.grad.size(); ++i)
                           g[i] += self.grad[i] * av[i];
                     });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      "scale", a, [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double offset) {
  return unary(
      "add_scalar", a, [offset](double x) { return x + offset; },
      [](double, double) { return 1.0; });
}

Tensor add_row_bias(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "add_row_bias");
  require_rank(b, 1, "add_row_bias");
  const std::size_t m = a.rows(), n = a.cols();
  if (b.size() != n) {
    throw ShapeError("add_row_bias: " + a.shape_string() + " + " + b.shape_string());
  }
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = av[i * n + j] + bv[j];
  return make_result("add_row_bias", {m, n}, std::move(out), {&a, &b},
                     [m, n](const Node& self) {
                       if (double* ga = grad_of(self, 0))
                         for (std::size_t i = 0; i < m * n; ++i) ga[i] += self.grad[i];
                       if (double* gb = grad_of(self, 1))
                         for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t j = 0; j < n; ++j)
                             gb[j] += self.grad[i * n + j];
                     });
}

Tensor linear_rows(const Tensor& x, const Tensor& w, const Tensor& b) {
  require_rank(x, 2, "linear_rows");
  require_rank(w, 2, "linear_rows");
  require_rank(b, 1, "linear_rows");
  const std::size_t m = x.rows(), n = x.cols(), p = w.rows();
  if (w.cols() != n || b.size() != p) {
    throw ShapeError("linear_rows: input " + x.shape_string() + ", weight " +
                     w.shape_string() + ", bias " + b.shape_string());
  }
  auto xv = x.values();
  auto wv = w.values();
  auto bv = b.values();
  std::vector<double> out(m * p);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < p; ++k) {
      double acc = bv[k];
      for (std::size_t j = 0; j < n; ++j) acc += xv[i * n + j] * wv[k * n + j];
      out[i * p + k] = acc;
    }
  return make_result("linear_rows", {m, p}, std::move(out), {&x, &w, &b},
                     [m, n, p](const Node& self) {
                       const double* xv = values_of(self, 0);
                       const double* wv = values_of(self, 1);
                       const double* g = self.grad.data();
                       if (double* gx = grad_of(self, 0))
                         for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t k = 0; k < p; ++k) {
                             const double gik = g[i * p + k];
                             for (std::size_t j = 0; j < n; ++j)
                               gx[i * n + j] += gik * wv[k * n + j];
                           }
                       if (double* gw = grad_of(self, 1))
                         for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t k = 0; k < p; ++k) {
                             const double gik = g[i * p + k];
                             for (std::size_t j = 0; j < n; ++j)
                               gw[k * n + j] += gik * xv[i * n + j];
                           }
                       if (double* gb = grad_of(self, 2))
                         for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t k = 0; k < p; ++k) gb[k] += g[i * p + k];
                     });
}

Tensor relu(const Tensor& a) {
  return unary(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      "sigmoid", a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor rowwise_softmax(const Tensor& s) {
  if (s.rank() != 1 && s.rank() != 2) {
    throw ShapeError("rowwise_softmax: expected rank 1 or 2, got " + s.shape_string());
  }
  const std::size_t m = s.rank() == 2 ? s.rows() : 1;
  const std::size_t n = s.rank() == 2 ? s.cols() : s.size();
  auto sv = s.values();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* in = &sv[i * n];
    double* o = &out[i * n];
    const double mx = *std::max_element(in, in + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += (o[j] = std::exp(in[j] - mx));
    for (std::size_t j = 0; j < n; ++j) o[j] /= z;
  }
  return make_result("rowwise_softmax", s.dims(), std::move(out), {&s},
                     [m, n](const Node& self) {
                       double* gs = grad_of(self, 0);
                       if (!gs) return;
                       for (std::size_t i = 0; i < m; ++i) {
                         const double* p = &self.values[i * n];
                         const double* g = &self.grad[i * n];
                         double dot = 0.0;
                         for (std::size_t j = 0; j < n; ++j) dot += p[j] * g[j];
                         for (std::size_t j = 0; j < n; ++j)
                           gs[i * n + j] += p[j] * (g[j] - dot);
                       }
                     });
}

Tensor row(const Tensor& a, std::size_t i) {
  require_rank(a, 2, "row");
  const std::size_t n = a.cols();
  if (i >= a.rows()) {
    throw ShapeError("row: index " + std::to_string(i) + " out of range for " +
                     a.shape_string());
  }
  auto av = a.values();
  std::vector<double> out(av.begin() + i * n, av.begin() + (i + 1) * n);
  return make_result("row", {n}, std::move(out), {&a},
                     [i, n](const Node& self) {
                       if (double* ga = grad_of(self, 0))
                         for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += self.grad[j];
                     });
}

Tensor stack_rows(std::span<const Tensor> rows) {
  if (rows.empty()) throw ShapeError("stack_rows: no rows");
  const std::size_t n = rows[0].size();
  std::vector<double> out;
  out.reserve(rows.size() * n);
  std::vector<const Tensor*> inputs;
  inputs.reserve(rows.size());
  for (const auto& r : rows) {
    if (r.rank() != 1 || r.size() != n) {
      throw ShapeError("stack_rows: row " + r.shape_string() +
                       " does not match length " + std::to_string(n));
    }
    auto v = r.values();
    out.insert(out.end(), v.begin(), v.end());
    inputs.push_back(&r);
  }
  return make_result("stack_rows", {rows.size(), n}, std::move(out),
                     std::move(inputs), [n](const Node& self) {
                       for (std::size_t k = 0; k < self.parents.size(); ++k)
                         if (double* g = grad_of(self, k))
                           for (std::size_t j = 0; j < n; ++j)
                             g[j] += self.grad[k * n + j];
                     });
}

Tensor concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat: no parts");
  std::vector<double> out;
  std::vector<const Tensor*> inputs;
  for (const auto& p : parts) {
    require_rank(p, 1, "concat");
    auto v = p.values();
    out.insert(out.end(), v.begin(), v.end());
    inputs.push_back(&p);
  }
  const std::size_t total = out.size();
  return make_result("concat", {total}, std::move(out), std::move(inputs),
                     [](const Node& self) {
                       std::size_t offset = 0;
                       for (std::size_t k = 0; k < self.parents.size(); ++k) {
                         const std::size_t len = self.parents[k]->values.size();
                         if (double* g = grad_of(self, k))
                           for (std::size_t j = 0; j < len; ++j)
                             g[j] += self.grad[offset + j];
                         offset += len;
                       }
                     });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "concat_cols");
  require_rank(b, 2, "concat_cols");
  if (a.rows() != b.rows()) {
    throw ShapeError("concat_cols: row counts differ, " + a.shape_string() +
                     " vs " + b.shape_string());
  }
  const std::size_t m = a.rows(), p = a.cols(), q = b.cols();
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(m * (p + q));
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(&av[i * p], p, &out[i * (p + q)]);
    std::copy_n(&bv[i * q], q, &out[i * (p + q) + p]);
  }
  return make_result("concat_cols", {m, p + q}, std::move(out), {&a, &b},
                     [m, p, q](const Node& self) {
                       if (double* ga = grad_of(self, 0))
                         for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t j = 0; j < p; ++j)
                             ga[i * p + j] += self.grad[i * (p + q) + j];
                       if (double* gb = grad_of(self, 1))
                         for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t j = 0; j < q; ++j)
                             gb[i * q + j] += self.grad[i * (p + q) + p + j];
                     });
}

Tensor reverse_rows(const Tensor& a) {
  require_rank(a, 2, "reverse_rows");
  const std::size_t m = a.rows(), n = a.cols();
  auto av = a.values();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    std::copy_n(&av[(m - 1 - i) * n], n, &out[i * n]);
  return make_result("reverse_rows", {m, n}, std::move(out), {&a},
                     [m, n](const Node& self) {
                       if (double* ga = grad_of(self, 0))
                         for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t j = 0; j < n; ++j)
                             ga[(m - 1 - i) * n + j] += self.grad[i * n + j];
                     });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count) {
  require_rank(a, 2, "slice_rows");
  const std::size_t n = a.cols();
  if (count == 0 || begin + count > a.rows()) {
    throw ShapeError("slice_rows: rows [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of range for " +
                     a.shape_string());
  }
  auto av = a.values();
  std::vector<double> out(av.begin() + begin * n, av.begin() + (begin + count) * n);
  return make_result("slice_rows", {count, n}, std::move(out), {&a},
                     [begin, count, n](const Node& self) {
                       if (double* ga = grad_of(self, 0))
                         for (std::size_t i = 0; i < count * n; ++i)
                           ga[begin * n + i] += self.grad[i];
                     });
}

Tensor mean_rows(const Tensor& a) {
  require_rank(a, 2, "mean_rows");
  const std::size_t m = a.rows(), n = a.cols();
  auto av = a.values();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += av[i * n + j];
  for (auto& v : out) v /= static_cast<double>(m);
  return make_result("mean_rows", {n}, std::move(out), {&a},
                     [m, n](const Node& self) {
                       if (double* ga = grad_of(self, 0))
                         for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t j = 0; j < n; ++j)
                             ga[i * n + j] += self.grad[j] / static_cast<double>(m);
                     });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.values()) total += v;
  return make_result("sum", {1}, {total}, {&a}, [](const Node& self) {
    if (double* ga = grad_of(self, 0))
      for (std::size_t i = 0; i < self.parents[0]->values.size(); ++i)
        ga[i] += self.grad[0];
  });
}

Tensor row_cosine(const Tensor& x, const Tensor& y) {
  require_same(x, y, "row_cosine");
  const std::size_t m = x.rank() == 2 ? x.rows() : 1;
  const std::size_t n = x.rank() == 2 ? x.cols() : x.size();
  if (x.rank() > 2) throw ShapeError("row_cosine: rank > 2 " + x.shape_string());
  auto xv = x.values();
  auto yv = y.values();
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    double dot = 0.0, xx = 0.0, yy = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      dot += xv[i * n + j] * yv[i * n + j];
      xx += xv[i * n + j] * xv[i * n + j];
      yy += yv[i * n + j] * yv[i * n + j];
    }
    out[i] = dot / (std::sqrt(xx) * std::sqrt(yy) + kCosineEpsilon);
  }
  return make_result("row_cosine", {m}, std::move(out), {&x, &y},
                     [m, n](const Node& self) {
                       const double* xv = values_of(self, 0);
                       const double* yv = values_of(self, 1);
                       double* gx = grad_of(self, 0);
                       double* gy = grad_of(self, 1);
                       for (std::size_t i = 0; i < m; ++i) {
                         const double* xr = xv + i * n;
                         const double* yr = yv + i * n;
                         double dot = 0.0, xx = 0.0, yy = 0.0;
                         for (std::size_t j = 0; j < n; ++j) {
                           dot += xr[j] * yr[j];
                           xx += xr[j] * xr[j];
                           yy += yr[j] * yr[j];
                         }
                         const double nx = std::sqrt(xx), ny = std::sqrt(yy);
                         const double denom = nx * ny + kCosineEpsilon;
                         const double g = self.grad[i];
                         // d/dx [dot / (|x||y| + eps)]; the norm term vanishes at x = 0.
                         const double cx = nx > 0.0 ? dot * ny / (denom * denom * nx) : 0.0;
                         const double cy = ny > 0.0 ? dot * nx / (denom * denom * ny) : 0.0;
                         if (gx)
                           for (std::size_t j = 0; j < n; ++j)
                             gx[i * n + j] += g * (yr[j] / denom - cx * xr[j]);
                         if (gy)
                           for (std::size_t j = 0; j < n; ++j)
                             gy[i * n + j] += g * (xr[j] / denom - cy * yr[j]);
                       }
                     });
}

Tensor cosine(const Tensor& u, const Tensor& v) {
  require_rank(u, 1, "cosine");
  require_rank(v, 1, "cosine");
  return row_cosine(u, v);
}

Tensor norm2(const Tensor& a) {
  double ss = 0.0;
  for (double v : a.values()) ss += v * v;
  const double norm = std::sqrt(ss);
  return make_result("norm2", {1}, {norm}, {&a}, [](const Node& self) {
    double* ga = grad_of(self, 0);
    const double norm = self.values[0];
    if (!ga || norm == 0.0) return;
    const double* av = values_of(self, 0);
    const std::size_t len = self.parents[0]->values.size();
    for (std::size_t i = 0; i < len; ++i) ga[i] += self.grad[0] * av[i] / norm;
  });
}

Tensor cross_entropy(const Tensor& logits, std::size_t label) {
  require_rank(logits, 1, "cross_entropy");
  if (label >= logits.size()) {
    throw ShapeError("cross_entropy: label " + std::to_string(label) +
                     " out of range for " + logits.shape_string());
  }
  auto lv = logits.values();
  const double mx = *std::max_element(lv.begin(), lv.end());
  double z = 0.0;
  for (double v : lv) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  return make_result("cross_entropy", {1}, {lse - lv[label]}, {&logits},
                     [label](const Node& self) {
                       double* gl = grad_of(self, 0);
                       if (!gl) return;
                       const auto& lv = self.parents[0]->values;
                       auto p = softmax(lv);
                       for (std::size_t c = 0; c < p.size(); ++c)
                         gl[c] += self.grad[0] * (p[c] - (c == label ? 1.0 : 0.0));
                     });
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += (out[i] = std::exp(logits[i] - mx));
  for (auto& v : out) v /= z;
  return out;
}

}  // namespace ananet::tensorcore
