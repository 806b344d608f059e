#ifndef ECG_RETRIEVAL_MAXSIM_H_
#define ECG_RETRIEVAL_MAXSIM_H_

#include <span>

#include "ecg/numerics/graph.h"
#include "ecg/projections/projection.h"

namespace ecg {

// Mean over query vectors of the best dot product against any document vector.
double maxsim(const Tensor& eq, const Tensor& ed);
double maxsim(const MultiVectorEmbedding& eq, const MultiVectorEmbedding& ed);

// Differentiable form; returns a scalar.
Var maxsim(Var eq, Var ed);

// All-pairs scores [queries x docs] for row-stacked embeddings; query i owns
// the next query_rows[i] rows of `queries`, likewise for documents.
Var maxsim_matrix(Var queries, std::span<const std::size_t> query_rows, Var docs,
                  std::span<const std::size_t> doc_rows);

}  // namespace ecg

#endif  // ECG_RETRIEVAL_MAXSIM_H_
