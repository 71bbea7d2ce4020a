#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "rforge/nn/tensor.hpp"

namespace rforge::nn {

// Dense linear algebra and elementwise maps. Binary elementwise ops accept
// equal shapes, a 1 x cols row broadcast on the right, or a 1x1 scalar.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double offset);

Tensor selu(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
// log(exp(a) + exp(b)), elementwise, same shapes.
Tensor log_add_exp(const Tensor& a, const Tensor& b);

Tensor clamp(const Tensor& a, double lo, double hi);
Tensor minimum(const Tensor& a, const Tensor& b);
Tensor maximum(const Tensor& a, const Tensor& b);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

Tensor concat_cols(std::span<const Tensor> parts);
Tensor concat_rows(std::span<const Tensor> parts);
// Row i of the result is a.row(index[i]), or zeros when index[i] < 0.
Tensor gather_rows(const Tensor& a, std::span<const int> index);
Tensor column(const Tensor& a, std::size_t c);
// Row i of `a` times w(i, 0).
Tensor scale_rows(const Tensor& a, const Tensor& w);

// Row-wise softmax where mask[i * cols + j] == false (or a -inf logit)
// excludes an entry: it gets probability exactly 0 and no gradient. A row
// with nothing left is all zeros. An empty mask keeps everything.
Tensor masked_softmax_rows(const Tensor& logits, const std::vector<bool>& mask = {});

// Log-softmax of an n x 1 score column inside contiguous segments
// [offsets[s], offsets[s+1]). Masked entries come back as 0 with no gradient.
Tensor segment_log_softmax(const Tensor& scores, std::span<const std::size_t> offsets,
                           const std::vector<bool>& mask);
// Per-segment column sums of an n x c tensor -> (segments x c).
Tensor segment_sum(const Tensor& a, std::span<const std::size_t> offsets);

// Mean of the listed rows for every group; an empty group yields zeros.
Tensor pool_mean(const Tensor& a, const std::vector<std::vector<int>>& groups);

// Sparse row pattern: row r sums a over columns[offsets[r] .. offsets[r+1]).
struct SparsePattern {
  std::vector<std::size_t> offsets;
  std::vector<int> columns;
};

// out.row(r) = sum_{k in pattern row r} a.row(k). For an adjacency pattern
// this is the neighbor sum of message passing.
Tensor sparse_sum(const std::shared_ptr<const SparsePattern>& pattern, const Tensor& a);

inline constexpr double kGraphNormEpsilon = 1e-5;

// Per-segment, per-channel normalization: z = x - shift * mean,
// y = gain * z / sqrt(mean(z^2) + eps) + bias. gain, bias and shift are 1 x c.
Tensor graph_norm(const Tensor& x, std::span<const std::size_t> offsets, const Tensor& gain,
                  const Tensor& bias, const Tensor& shift);

}  // namespace rforge::nn
