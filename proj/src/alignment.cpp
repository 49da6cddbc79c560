#include "ananet/alignment.hpp"

#include "ananet/error.hpp"
#include "ananet/ops.hpp"

namespace ananet::alignment {

namespace tc = tensorcore;

std::string to_string(AttentionAxis axis) {
  return axis == AttentionAxis::attended ? "attended" : "paper_literal";
}

AttentionAxis parse_attention_axis(std::string_view name) {
  if (name == "attended") return AttentionAxis::attended;
  if (name == "paper_literal") return AttentionAxis::paper_literal;
  throw ConfigError("unknown attention_axis '" + std::string(name) +
                    "' (expected attended or paper_literal)");
}

Tensor similarity_scores(const Tensor& V, const Tensor& T, double scale) {
  if (V.rank() != 2 || T.rank() != 2 || V.cols() != T.cols()) {
    throw ShapeError("similarity_scores: region features " + V.shape_string() +
                     " and word features " + T.shape_string() + " need a shared width");
  }
  Tensor s = tc::matmul(V, tc::transpose(T));
  return scale == 1.0 ? s : tc::scale(s, scale);
}

AlignmentState interactive_attention(const Tensor& V, const Tensor& T,
                                     const AlignmentOptions& options) {
  AlignmentState st;
  st.S_vt = similarity_scores(V, T, options.score_scale);
  const Tensor S_tv = tc::transpose(st.S_vt);
  if (options.axis == AttentionAxis::attended) {
    st.A_t2v = tc::rowwise_softmax(st.S_vt);
    st.A_v2t = tc::rowwise_softmax(S_tv);
  } else {
    // Normalizing Att(V, T) over its first index is a column softmax of S_vt.
    st.A_t2v = tc::transpose(tc::rowwise_softmax(S_tv));
    st.A_v2t = tc::transpose(tc::rowwise_softmax(st.S_vt));
  }
  st.V_hat = tc::matmul(st.A_t2v, T);
  st.T_hat = tc::matmul(st.A_v2t, V);
  return st;
}

Tensor pairwise_comparison(const Tensor& X, const Tensor& X_hat) {
  if (X.dims() != X_hat.dims()) {
    throw ShapeError("pairwise_comparison: " + X.shape_string() + " vs " +
                     X_hat.shape_string());
  }
  return tc::row_cosine(X, X_hat);
}

Tensor build_local(const Tensor& t_bar, const Tensor& v_bar) {
  const Tensor parts[] = {t_bar, v_bar};
  return tc::concat(parts);
}

AlignmentState align(const Tensor& V, const Tensor& T, const AlignmentOptions& options) {
  AlignmentState st = interactive_attention(V, T, options);
  st.v_bar = pairwise_comparison(V, st.V_hat);
  st.t_bar = pairwise_comparison(T, st.T_hat);
  st.r_l = build_local(st.t_bar, st.v_bar);
  return st;
}

std::vector<std::size_t> argmax_region_per_word(const AlignmentState& st) {
  const std::size_t n = st.A_v2t.rows(), k = st.A_v2t.cols();
  std::vector<std::size_t> out(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 1; i < k; ++i) {
      if (st.A_v2t.at(j, i) > st.A_v2t.at(j, out[j])) out[j] = i;
    }
  }
  return out;
}

nlohmann::ordered_json export_attention(const AlignmentState& st, const std::string& id) {
  nlohmann::ordered_json j;
  j["id"] = id;
  j["K"] = st.num_regions();
  j["N"] = st.num_tokens();
  auto flat = [](const Tensor& t) {
    return std::vector<double>(t.values().begin(), t.values().end());
  };
  j["A_t2v"] = flat(st.A_t2v);
  j["A_v2t"] = flat(st.A_v2t);
  j["argmax_region"] = argmax_region_per_word(st);
  return j;
}

AttentionExport parse_attention_export(const nlohmann::ordered_json& j) {
  try {
    AttentionExport e;
    e.id = j.at("id").get<std::string>();
    const auto k = j.at("K").get<std::size_t>();
    const auto n = j.at("N").get<std::size_t>();
    e.A_t2v = Matrix(k, n, j.at("A_t2v").get<std::vector<double>>());
    e.A_v2t = Matrix(n, k, j.at("A_v2t").get<std::vector<double>>());
    e.argmax_region = j.at("argmax_region").get<std::vector<std::size_t>>();
    if (e.A_t2v.values.size() != k * n || e.A_v2t.values.size() != k * n ||
        e.argmax_region.size() != n) {
      throw DataError("attention export '" + e.id + "': array sizes do not match K, N");
    }
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(std::string("malformed attention export: ") + ex.what());
  }
}

}  // namespace ananet::alignment
