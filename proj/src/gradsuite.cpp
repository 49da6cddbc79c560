#include "ananet/gradsuite.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "ananet/alignment.hpp"
#include "ananet/association.hpp"
#include "ananet/encoders.hpp"
#include "ananet/fusion.hpp"
#include "ananet/ops.hpp"

namespace ananet {

namespace tc = tensorcore;
using tc::Tensor;

namespace {

class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}

  std::vector<double> normals(std::size_t n, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng_);
    return v;
  }

  // Keeps entries at least 0.1 away from zero so kinks are never straddled.
  std::vector<double> away_from_zero(std::size_t n) {
    auto v = normals(n);
    for (auto& x : v) x += x < 0 ? -0.1 : 0.1;
    return v;
  }

  Tensor leaf(tc::Dims dims, bool kink_safe = false) {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return Tensor::from(std::move(dims), kink_safe ? away_from_zero(n) : normals(n), true);
  }

  Tensor constant(tc::Dims dims) {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return Tensor::from(std::move(dims), normals(n));
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// Reduces a tensor to a scalar with fixed random weights so the check sees
// every output coordinate.
struct Projector {
  Draw& draw;
  std::vector<Tensor> weights;
  std::size_t next = 0;

  Tensor operator()(const Tensor& out) {
    if (next == weights.size()) weights.push_back(draw.constant(out.dims()));
    const Tensor& w = weights[next++];
    return tc::sum(tc::mul(out, w));
  }
};

using Reports = std::vector<tc::GradCheckReport>;

void check(Reports& reports, Draw& draw, const std::string& name,
           const std::function<Tensor(Projector&)>& f, std::vector<Tensor> params,
           double eps) {
  Projector proj{draw, {}, 0};
  auto wrapped = [&]() {
    proj.next = 0;
    return f(proj);
  };
  reports.push_back(tc::finite_diff_check(name, wrapped, std::move(params), eps));
}

void op_checks(Reports& r, Draw& g, double eps) {
  {
    auto a = g.leaf({3, 4}), b = g.leaf({4, 2});
    check(r, g, "matmul", [=](Projector& p) { return p(tc::matmul(a, b)); }, {a, b}, eps);
  }
  {
    auto w = g.leaf({3, 4}), x = g.leaf({4});
    check(r, g, "matvec", [=](Projector& p) { return p(tc::matvec(w, x)); }, {w, x}, eps);
  }
  {
    auto a = g.leaf({2, 3});
    check(r, g, "transpose", [=](Projector& p) { return p(tc::transpose(a)); }, {a}, eps);
  }
  {
    auto a = g.leaf({2, 3}), b = g.leaf({2, 3});
    check(r, g, "add", [=](Projector& p) { return p(tc::add(a, b)); }, {a, b}, eps);
    check(r, g, "sub", [=](Projector& p) { return p(tc::sub(a, b)); }, {a, b}, eps);
    check(r, g, "mul", [=](Projector& p) { return p(tc::mul(a, b)); }, {a, b}, eps);
    check(r, g, "scale", [=](Projector& p) { return p(tc::scale(a, -1.7)); }, {a}, eps);
    check(r, g, "add_scalar", [=](Projector& p) { return p(tc::add_scalar(a, 0.3)); }, {a},
          eps);
  }
  {
    auto a = g.leaf({2, 2, 2}), b = g.leaf({2, 2, 2});
    check(r, g, "mul (rank 3)", [=](Projector& p) { return p(tc::mul(a, b)); }, {a, b}, eps);
  }
  {
    auto a = g.leaf({3, 4}), b = g.leaf({4});
    check(r, g, "add_row_bias", [=](Projector& p) { return p(tc::add_row_bias(a, b)); },
          {a, b}, eps);
  }
  {
    auto x = g.leaf({3, 4}), w = g.leaf({5, 4}), b = g.leaf({5});
    check(r, g, "linear_rows", [=](Projector& p) { return p(tc::linear_rows(x, w, b)); },
          {x, w, b}, eps);
  }
  {
    auto a = g.leaf({3, 4}, true);
    check(r, g, "relu", [=](Projector& p) { return p(tc::relu(a)); }, {a}, eps);
    auto b = g.leaf({3, 4});
    check(r, g, "sigmoid", [=](Projector& p) { return p(tc::sigmoid(b)); }, {b}, eps);
    check(r, g, "tanh", [=](Projector& p) { return p(tc::tanh(b)); }, {b}, eps);
    check(r, g, "rowwise_softmax", [=](Projector& p) { return p(tc::rowwise_softmax(b)); },
          {b}, eps);
  }
  {
    auto v = g.leaf({5});
    check(r, g, "rowwise_softmax (vector)",
          [=](Projector& p) { return p(tc::rowwise_softmax(v)); }, {v}, eps);
  }
  {
    auto a = g.leaf({3, 4});
    check(r, g, "row", [=](Projector& p) { return p(tc::row(a, 1)); }, {a}, eps);
    check(r, g, "reverse_rows", [=](Projector& p) { return p(tc::reverse_rows(a)); }, {a},
          eps);
    check(r, g, "slice_rows", [=](Projector& p) { return p(tc::slice_rows(a, 1, 2)); }, {a},
          eps);
    check(r, g, "mean_rows", [=](Projector& p) { return p(tc::mean_rows(a)); }, {a}, eps);
    check(r, g, "sum", [=](Projector&) { return tc::sum(tc::mul(a, a)); }, {a}, eps);
    check(r, g, "norm2", [=](Projector&) { return tc::norm2(a); }, {a}, eps);
  }
  {
    auto u = g.leaf({3}), v = g.leaf({3}), w = g.leaf({2});
    check(r, g, "stack_rows", [=](Projector& p) {
            const Tensor rows[] = {u, v, u};
            return p(tc::stack_rows(rows));
          }, {u, v}, eps);
    check(r, g, "concat", [=](Projector& p) {
            const Tensor parts[] = {u, w, v};
            return p(tc::concat(parts));
          }, {u, v, w}, eps);
    check(r, g, "cosine", [=](Projector&) { return tc::cosine(u, v); }, {u, v}, eps);
    check(r, g, "cross_entropy", [=](Projector&) { return tc::cross_entropy(u, 2); }, {u},
          eps);
  }
  {
    auto a = g.leaf({3, 2}), b = g.leaf({3, 4});
    check(r, g, "concat_cols", [=](Projector& p) { return p(tc::concat_cols(a, b)); }, {a, b},
          eps);
  }
  {
    auto x = g.leaf({4, 3}), y = g.leaf({4, 3});
    check(r, g, "row_cosine", [=](Projector& p) { return p(tc::row_cosine(x, y)); }, {x, y},
          eps);
  }
}

void module_checks(Reports& r, Draw& g, double eps) {
  const std::size_t K = 3, N = 4, d = 8, d_r = 5, d_in = 6;
  std::mt19937_64& rng = g.rng();
  auto enc = encoders::init_encoder({d, d_r, 2, d_in - 2}, rng);
  auto regions = g.leaf({K, d_r});
  auto words = g.leaf({N, 2});
  auto ctx = g.leaf({N, d_in - 2});
  auto inputs = g.leaf({N, d_in});

  check(r, g, "encode_image", [=](Projector& p) { return p(encoders::encode_image(regions, enc)); },
        {regions, enc.w_v, enc.b_v}, eps);
  const auto& c = enc.forward;
  check(r, g, "run_gru", [=](Projector& p) { return p(encoders::run_gru(inputs, c)); },
        {inputs, c.W_z, c.U_z, c.b_z, c.W_r, c.U_r, c.b_r, c.W_h, c.U_h, c.b_h}, eps);
  const auto& b = enc.backward;
  check(r, g, "encode_text", [=](Projector& p) {
          return p(encoders::encode_text(words, ctx, enc, 100));
        }, {words, ctx, b.W_z, b.U_z, b.W_h, b.U_r}, eps);
  check(r, g, "encode_text (truncated)", [=](Projector& p) {
          return p(encoders::encode_text(words, ctx, enc, 2));
        }, {words, ctx, c.U_z, b.U_z}, eps);

  auto assoc = association::init_association(d, 2, 2, rng);
  auto f_img = g.leaf({d}), f_txt = g.leaf({d});
  check(r, g, "decompose", [=](Projector& p) {
          auto [inv, var] = association::decompose(f_img, assoc, association::Modality::text);
          return tc::add(p(inv), p(var));
        }, {f_img, assoc.W, assoc.P_text}, eps);
  for (auto variant : association::kAllFusionVariants) {
    check(r, g, "associate/" + association::to_string(variant), [=](Projector& p) {
            return p(association::associate(f_img, f_txt, assoc, variant).r_g);
          }, {f_img, f_txt, assoc.W, assoc.P_image, assoc.P_text}, eps);
  }
  check(r, g, "invariant_loss", [=](Projector&) {
          return association::invariant_loss(tc::matvec(assoc.W, f_img),
                                             tc::matvec(assoc.W, f_txt));
        }, {f_img, f_txt, assoc.W}, eps);
  check(r, g, "orthogonal_loss", [=](Projector&) { return association::orthogonal_loss(assoc); },
        {assoc.W, assoc.P_image, assoc.P_text}, eps);

  auto V = g.leaf({K, d}), T = g.leaf({N, d});
  check(r, g, "similarity_scores", [=](Projector& p) {
          return p(alignment::similarity_scores(V, T, 0.5));
        }, {V, T}, eps);
  for (auto axis : {alignment::AttentionAxis::attended, alignment::AttentionAxis::paper_literal}) {
    const std::string tag = alignment::to_string(axis);
    check(r, g, "interactive_attention/" + tag, [=](Projector& p) {
            auto st = alignment::interactive_attention(V, T, {axis, 0.5});
            return tc::add(p(st.V_hat), p(st.T_hat));
          }, {V, T}, eps);
    check(r, g, "align/" + tag, [=](Projector& p) {
            return p(alignment::align(V, T, {axis, 0.5}).r_l);
          }, {V, T}, eps);
  }
  auto X = g.leaf({K, d}), Xh = g.leaf({K, d});
  check(r, g, "pairwise_comparison", [=](Projector& p) {
          return p(alignment::pairwise_comparison(X, Xh));
        }, {X, Xh}, eps);

  auto fp = fusion::init_fusion(5, 7, rng);
  for (auto* t : {&fp.w_g, &fp.w_l, &fp.b_g, &fp.b_l}) {
    auto v = t->mutable_values();
    auto n = g.normals(v.size());
    std::copy(n.begin(), n.end(), v.begin());
  }
  auto r_g = g.leaf({5}), r_l = g.leaf({7});
  check(r, g, "late_fusion", [=](Projector&) {
          return fusion::classification_loss(fusion::late_fusion(r_g, r_l, fp).logits, 1);
        }, {r_g, r_l, fp.w_g, fp.b_g, fp.w_l, fp.b_l}, eps);
  auto lc = g.leaf({1}), li = g.leaf({1}), lo = g.leaf({1});
  check(r, g, "total_loss", [=](Projector&) { return fusion::total_loss(lc, li, lo, 0.1, 2.0); },
        {lc, li, lo}, eps);
}

std::vector<Tensor> tensors_of(const model::Model& m) {
  std::vector<Tensor> out;
  for (auto& p : m.parameters()) out.push_back(p.tensor);
  return out;
}

}  // namespace

model::ModelConfig toy_model_config() {
  model::ModelConfig c;
  c.d = 8;
  c.d_r = 5;
  c.d_G = 3;
  c.d_B = 4;
  c.d_inv = 2;
  c.d_var = 2;
  c.K = 3;
  c.N_max = 4;
  return c;
}

dataio::FeatureRecord random_record(const model::ModelConfig& config, std::size_t tokens,
                                    int label, std::uint64_t seed) {
  Draw g(seed);
  dataio::FeatureRecord rec;
  rec.id = "toy_" + std::to_string(seed);
  rec.label = label;
  rec.region_feats = Matrix(config.K, config.d_r, g.normals(config.K * config.d_r));
  rec.word_vecs = Matrix(tokens, config.d_G, g.normals(tokens * config.d_G));
  rec.ctx_vecs = Matrix(tokens, config.d_B, g.normals(tokens * config.d_B));
  return rec;
}

Tensor full_pair_loss(const model::Model& model, const dataio::FeatureRecord& record) {
  Tensor loss = model.pair_loss(model.forward(record), static_cast<std::size_t>(record.label));
  if (Tensor lo = model.orthogonal_loss(); lo.defined()) {
    loss = tc::add(loss, tc::scale(lo, model.config().beta));
  }
  return loss;
}

void randomize_parameters(model::Model& model, std::uint64_t seed, double scale) {
  Draw g(seed);
  for (auto& p : model.parameters()) {
    auto v = p.tensor.mutable_values();
    auto n = g.normals(v.size(), scale);
    std::copy(n.begin(), n.end(), v.begin());
  }
}

double resolution_floor(double f, double eps, double tolerance) {
  const double a = std::abs(f);
  const double ulp = std::nextafter(a, std::numeric_limits<double>::infinity()) - a;
  return 16.0 * ulp / (2.0 * eps) / tolerance;
}

bool gradients_resolvable(const std::function<Tensor()>& loss,
                          const std::vector<Tensor>& params, double eps) {
  for (auto p : params) p.zero_grad();
  const Tensor f = loss();
  tc::backward(f);
  const double floor = resolution_floor(f.item(), eps);
  bool ok = true;
  for (auto p : params) {
    for (double g : p.grad()) {
      if (g != 0.0 && std::abs(g) < floor) ok = false;
    }
    p.zero_grad();
  }
  return ok;
}

std::vector<tc::GradCheckReport> run_gradcheck_suite(const GradSuiteOptions& options) {
  Reports reports;
  Draw g(options.seed);
  op_checks(reports, g, options.eps);
  module_checks(reports, g, options.eps);

  struct Case {
    std::string name;
    model::ModelConfig config;
    std::size_t tokens;
  };
  std::vector<Case> cases;
  const auto base = toy_model_config();
  cases.push_back({"full loss", base, 4});
  cases.push_back({"full loss (short text, padded)", base, 3});
  cases.push_back({"full loss (long text, truncated)", base, 6});
  {
    auto c = base;
    c.attention_axis = alignment::AttentionAxis::paper_literal;
    cases.push_back({"full loss (paper_literal axis)", c, 4});
  }
  for (auto variant : association::kAllFusionVariants) {
    if (variant == association::FusionVariant::inv) continue;
    auto c = base;
    c.fusion_variant = variant;
    cases.push_back({"full loss (variant " + association::to_string(variant) + ")", c, 4});
  }
  for (auto mode : {model::ModelMode::association_only, model::ModelMode::alignment_only,
                    model::ModelMode::concat_only}) {
    auto c = base;
    c.mode = mode;
    cases.push_back({"full loss (" + model::to_string(mode) + ")", c, 4});
  }

  constexpr int kMaxDraws = 64;
  std::uint64_t salt = options.seed * 1000;
  for (const auto& cs : cases) {
    model::Model m(cs.config, ++salt);
    const auto params = tensors_of(m);
    for (int label = 0; label < 3; ++label) {
      dataio::FeatureRecord rec;
      auto loss = [&m, &rec] { return full_pair_loss(m, rec); };
      int draw = 0;
      do {
        randomize_parameters(m, ++salt);
        rec = random_record(cs.config, cs.tokens, label, ++salt);
      } while (!gradients_resolvable(loss, params, options.eps) && ++draw < kMaxDraws);
      std::string name = cs.name + " [y=" + std::to_string(label) + "]";
      if (draw > 0) name += " (redrawn " + std::to_string(draw) + "x)";
      reports.push_back(tc::finite_diff_check(name, loss, params, options.eps));
    }
  }
  return reports;
}

}  // namespace ananet
