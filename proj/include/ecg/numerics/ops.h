#ifndef ECG_NUMERICS_OPS_H_
#define ECG_NUMERICS_OPS_H_

#include <cstddef>
#include <span>
#include <vector>

#include "ecg/numerics/graph.h"

namespace ecg {

inline constexpr double kLayerNormEps = 1e-5;

// Matrix products. matmul_nt(a, b) = a * b^T avoids materializing transposes.
Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);
Var transpose(Var a);

// Elementwise ops on identically shaped inputs.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var relu(Var a);
Var gelu(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var log(Var a);

// Multiplies every entry of `a` by the single value held in `s`.
Var mul_scalar(Var a, Var s);

// Leading-batch broadcasts: `row` has d entries and applies to each of the
// n rows of a[n x d]; `col` has n entries, one per row.
Var add_row(Var a, Var row);
Var mul_row(Var a, Var row);
Var mul_col(Var a, Var col);

// Per-row normalization to zero mean and unit variance, no affine part.
Var layer_norm(Var a, double eps = kLayerNormEps);

// Row-wise softmax over the lower triangle (position i sees columns <= i).
Var causal_softmax(Var scores);
Var log_softmax(Var a);
// Row maxima as an [n x 1] column; gradient flows to the first argmax.
Var row_max(Var a);

Var select_rows(Var a, std::span<const std::size_t> rows);
Var slice_rows(Var a, std::size_t begin, std::size_t end);
Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var reshape(Var a, Shape shape);

// out[i] = a[i, cols[i]] as an [n x 1] column.
Var pick(Var a, std::span<const std::size_t> cols);
// Single entry of the flattened tensor as a scalar.
Var element(Var a, std::size_t index);

Var sum(Var a);
Var mean(Var a);

}  // namespace ecg

#endif  // ECG_NUMERICS_OPS_H_
