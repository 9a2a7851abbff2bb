#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ad/graph.hpp"
#include "common/vec3.hpp"

// Differentiable primitives. Shapes must match exactly; the only broadcast is
// the bias row in add_bias/linear. Mismatches throw ShapeError naming the op.
namespace cd::ad {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var relu(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

// [M x K] * [K x N].
Var matmul(Var a, Var b);
// x [R x C] + b [C] on every row.
Var add_bias(Var x, Var b);
// x [R x in] * W^T + b, with W [out x in] and b [out].
Var linear(Var x, Var weight, Var bias);

Var softmax(Var x, std::size_t axis);
// x / sum(|x|) along axis; an all-zero slice maps to the uniform 1/n.
Var l1_normalize(Var x, std::size_t axis);

// Rows along the leading dimension.
Var gather_rows(Var x, std::vector<Index> indices);
Var scatter_add_rows(Var x, std::vector<Index> indices, std::size_t num_rows);
// out[m] = sum_j weights[m*k + j] * src[indices[m*k + j]]; weights are constant.
Var weighted_gather(Var src, std::vector<Index> indices, std::vector<double> weights,
                    std::size_t k);

Var reduce_sum(Var x, std::size_t axis);
Var reduce_mean(Var x, std::size_t axis);
// Gradient flows to the first maximal element of each slice.
Var reduce_max(Var x, std::size_t axis);
Var sum_all(Var x);

Var concat(std::span<const Var> parts, std::size_t axis);
Var reshape(Var x, Shape shape);

// Weighted mean over rows of -log softmax(logits)[label]:
//   sum_i w[y_i] * nll_i / sum_i w[y_i].
Var softmax_cross_entropy(Var logits, std::span<const std::uint8_t> labels,
                          std::span<const double> class_weights);

// Forward-only helpers shared with tests and inference code.
Tensor softmax_values(const Tensor& x, std::size_t axis);
Tensor l1_normalize_values(const Tensor& x, std::size_t axis);

}  // namespace cd::ad
