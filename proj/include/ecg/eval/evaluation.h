#ifndef ECG_EVAL_EVALUATION_H_
#define ECG_EVAL_EVALUATION_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ecg/data/corpus.h"
#include "ecg/lm/model.h"
#include "ecg/lm/vocabulary.h"
#include "ecg/retrieval/bm25.h"
#include "ecg/retrieval/store.h"
#include "ecg/training/ecg_model.h"

namespace ecg {

enum class Method { kParametric, kRagReader, kCompressionReader, kEcg };

std::string method_name(Method method);
Method parse_method(std::string_view name);
std::vector<Method> all_methods();

struct QueryRecord {
  std::uint32_t query_id = 0;
  std::string question;
  std::string prediction;
  std::vector<std::string> answers;
  bool correct = false;
  std::vector<std::uint32_t> doc_ids;
  // Document tokens (text readers) or vectors (compressed readers) consumed.
  std::size_t context_units = 0;
};

struct EvalReport {
  std::string dataset;
  std::string method;
  std::size_t budget = 0;
  std::size_t k = 0;
  double em = 0.0;
  std::vector<QueryRecord> records;
};

// Top-k passage ids for a query, best first.
using Retriever = std::function<std::vector<std::uint32_t>(const EvalQuery& query, std::size_t k)>;

struct ReaderOutput {
  std::string prediction;
  std::size_t context_units = 0;
};
// Answers a query from the given documents, in order.
using Reader = std::function<ReaderOutput(const EvalQuery& query, std::span<const std::uint32_t> docs)>;

// Read-only state behind the four methods. Text readers retrieve with BM25,
// the ECG arm with MaxSim over the unified store.
struct EvalSystem {
  const Vocabulary* vocab = nullptr;
  const EcgModel* ecg = nullptr;
  const LanguageModel* reader = nullptr;
  const LanguageModel* parametric = nullptr;
  const EmbeddingStore* store = nullptr;
  const Bm25Index* bm25 = nullptr;
  std::unordered_map<std::uint32_t, const Passage*> passages;
  std::size_t max_new = 4;
  std::size_t threads = 1;

  void index_passages(const std::vector<Passage>& corpus);
  const Passage& passage(std::uint32_t id) const;
};

Retriever bm25_retriever(const Bm25Index& index);
Retriever maxsim_retriever(const EcgModel& model, const EmbeddingStore& store, std::size_t threads = 1);
// Always returns the gold passage first.
Retriever oracle_retriever();

// Reader for `method` at the given budget and k. Throws ContractError when
// k documents cannot fit the budget.
Reader make_reader(const EvalSystem& system, Method method, std::size_t budget, std::size_t k);
Retriever make_retriever(const EvalSystem& system, Method method);

// Retrieves k documents per query (none for k = 0), reads, and scores EM.
// Queries are processed in id order; with threads > 1 they are split into
// contiguous shards.
EvalReport evaluate(const Retriever& retriever, const Reader& reader, std::span<const EvalQuery> queries,
                    std::size_t k, std::size_t threads = 1);

EvalReport eval_fixed_budget(const EvalSystem& system, Method method, std::span<const EvalQuery> queries,
                             std::size_t budget, std::size_t k, const std::string& dataset = "synthetic");

std::vector<std::size_t> budget_grid(std::size_t first, std::size_t last, std::size_t step);
// 32, 64, ..., 256.
std::vector<std::size_t> paper_budget_grid();

struct FixedPerformanceResult {
  std::size_t budget = 0;
  double em = 0.0;
  bool reached = false;
};

// Smallest grid budget with EM >= target, else the best-EM budget (smallest
// on ties) flagged as not reached.
FixedPerformanceResult fixed_performance_search(const std::function<double(std::size_t)>& em_at_budget,
                                                double target, std::span<const std::size_t> grid);
FixedPerformanceResult fixed_performance_search(const EvalSystem& system, Method method, double target,
                                                std::span<const EvalQuery> queries, std::size_t k,
                                                std::span<const std::size_t> grid);

// Union of each retriever's top_n per query plus every gold passage, in
// corpus order.
std::vector<Passage> pool_corpus(std::span<const Retriever> retrievers, std::span<const EvalQuery> queries,
                                 std::size_t top_n, const std::vector<Passage>& corpus);

// One report per k; the ranking at max(k) is computed once and its prefixes
// are read.
std::vector<EvalReport> k_sweep(const Retriever& retriever, const std::function<Reader(std::size_t k)>& reader_for_k,
                                std::span<const EvalQuery> queries, std::span<const std::size_t> ks,
                                std::size_t threads = 1);

void write_reports_csv(const std::string& path, std::span<const EvalReport> reports);
std::string reports_csv(std::span<const EvalReport> reports);
void write_records_jsonl(const std::string& path, std::span<const EvalReport> reports);

}  // namespace ecg

#endif  // ECG_EVAL_EVALUATION_H_
