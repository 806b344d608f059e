#include "ecg/retrieval/maxsim.h"

#include <algorithm>
#include <limits>
#include <numeric>

#include "ecg/common/error.h"
#include "ecg/numerics/ops.h"

namespace ecg {
namespace {

void check_pair(const Tensor& eq, const Tensor& ed) {
  require_rank2(eq, "maxsim query");
  require_rank2(ed, "maxsim document");
  if (eq.rows() == 0 || ed.rows() == 0) throw ContractError("maxsim: empty embedding");
  if (eq.cols() != ed.cols()) {
    throw DimensionError("maxsim: query dim " + std::to_string(eq.cols()) + " vs document dim " +
                         std::to_string(ed.cols()));
  }
}

}  // namespace

double maxsim(const Tensor& eq, const Tensor& ed) {
  check_pair(eq, ed);
  const std::size_t m = eq.cols();
  double total = 0.0;
  for (std::size_t i = 0; i < eq.rows(); ++i) {
    const double* q = eq.data().data() + i * m;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < ed.rows(); ++j) {
      const double* d = ed.data().data() + j * m;
      double dot = 0.0;
      for (std::size_t c = 0; c < m; ++c) dot += q[c] * d[c];
      best = std::max(best, dot);
    }
    total += best;
  }
  return total / static_cast<double>(eq.rows());
}

double maxsim(const MultiVectorEmbedding& eq, const MultiVectorEmbedding& ed) {
  return maxsim(eq.vectors, ed.vectors);
}

Var maxsim(Var eq, Var ed) {
  check_pair(eq.value(), ed.value());
  return mean(row_max(matmul_nt(eq, ed)));
}

Var maxsim_matrix(Var queries, std::span<const std::size_t> query_rows, Var docs,
                  std::span<const std::size_t> doc_rows) {
  const std::size_t nq = std::accumulate(query_rows.begin(), query_rows.end(), std::size_t{0});
  const std::size_t nd = std::accumulate(doc_rows.begin(), doc_rows.end(), std::size_t{0});
  if (nq != queries.value().rows() || nd != docs.value().rows()) {
    throw DimensionError("maxsim_matrix: row counts do not match the stacked embeddings");
  }
  if (std::find(query_rows.begin(), query_rows.end(), 0) != query_rows.end() ||
      std::find(doc_rows.begin(), doc_rows.end(), 0) != doc_rows.end() || query_rows.empty() || doc_rows.empty()) {
    throw ContractError("maxsim_matrix: empty embedding");
  }
  Graph& g = *queries.graph();
  Var all = matmul_nt(queries, docs);
  std::vector<Var> columns;
  columns.reserve(doc_rows.size());
  std::size_t offset = 0;
  for (std::size_t n : doc_rows) {
    columns.push_back(row_max(slice_cols(all, offset, offset + n)));
    offset += n;
  }
  Var best = columns.size() == 1 ? columns[0] : concat_cols(columns);
  Tensor averaging(Shape{query_rows.size(), nq});
  offset = 0;
  for (std::size_t i = 0; i < query_rows.size(); ++i) {
    for (std::size_t r = 0; r < query_rows[i]; ++r) averaging.at(i, offset + r) = 1.0 / static_cast<double>(query_rows[i]);
    offset += query_rows[i];
  }
  return matmul(g.constant(std::move(averaging)), best);
}

}  // namespace ecg
