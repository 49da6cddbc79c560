#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ananet/matrix.hpp"
#include "ananet/tensor.hpp"

namespace ananet::alignment {

using tensorcore::Tensor;

/// Which index the attention softmax normalizes over.
///   attended:      rows of A_t2v sum to 1 over words, rows of A_v2t over
///                  regions, so attended features are convex combinations.
///   paper_literal: normalize over the first index of Att(H, Q), i.e. the
///                  columns of each attention matrix.
enum class AttentionAxis { attended, paper_literal };

std::string to_string(AttentionAxis axis);
AttentionAxis parse_attention_axis(std::string_view name);

struct AlignmentOptions {
  AttentionAxis axis = AttentionAxis::attended;
  double score_scale = 1.0;  // multiplies s_ij before the softmax
};

struct AlignmentState {
  Tensor S_vt;   // K × N raw scores
  Tensor A_t2v;  // K × N
  Tensor A_v2t;  // N × K
  Tensor V_hat;  // K × d
  Tensor T_hat;  // N × d
  Tensor v_bar;  // K
  Tensor t_bar;  // N
  Tensor r_l;    // N + K, text first

  std::size_t num_regions() const { return A_t2v.rows(); }
  std::size_t num_tokens() const { return A_v2t.rows(); }
};

/// S_vt[i, j] = V_i · T_j (times `scale`).
Tensor similarity_scores(const Tensor& V, const Tensor& T, double scale = 1.0);

/// Fills S_vt, A_t2v, A_v2t, V_hat = A_t2v·T and T_hat = A_v2t·V.
AlignmentState interactive_attention(const Tensor& V, const Tensor& T,
                                     const AlignmentOptions& options = {});

/// x_bar[i] = cosine(X_i, X_hat_i).
Tensor pairwise_comparison(const Tensor& X, const Tensor& X_hat);

/// [t_bar ⊕ v_bar].
Tensor build_local(const Tensor& t_bar, const Tensor& v_bar);

/// Full local stream: attention, comparison and r_l.
AlignmentState align(const Tensor& V, const Tensor& T, const AlignmentOptions& options = {});

/// Per word, the region with the largest A_v2t weight; lowest index wins ties.
std::vector<std::size_t> argmax_region_per_word(const AlignmentState& state);

/// {id, K, N, A_t2v, A_v2t, argmax_region}; matrices flattened row-major.
nlohmann::ordered_json export_attention(const AlignmentState& state, const std::string& id);

struct AttentionExport {
  std::string id;
  Matrix A_t2v;
  Matrix A_v2t;
  std::vector<std::size_t> argmax_region;
};

AttentionExport parse_attention_export(const nlohmann::ordered_json& j);

}  // namespace ananet::alignment
