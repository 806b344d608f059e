#include "ecg/eval/evaluation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <thread>

#include <json.hpp>

#include "ecg/common/error.h"
#include "ecg/eval/metrics.h"
#include "ecg/lm/generation.h"
#include "ecg/lm/prompts.h"
#include "ecg/retrieval/search.h"

namespace ecg {
namespace {

std::vector<std::uint32_t> ids_of(const std::vector<RankedResult>& results) {
  std::vector<std::uint32_t> ids;
  for (const RankedResult& r : results) ids.push_back(r.id);
  return ids;
}

template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t chunk = (count + threads - 1) / threads;
  for (std::size_t w = 0; w < threads; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (std::size_t i = w * chunk; i < std::min(count, (w + 1) * chunk); ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (std::thread& t : workers) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::size_t per_doc_share(std::size_t budget, std::size_t k, const char* method) {
  if (k > 0 && budget / k == 0) {
    throw ContractError(std::string(method) + ": budget " + std::to_string(budget) + " cannot hold " +
                        std::to_string(k) + " documents");
  }
  return k == 0 ? 0 : budget / k;
}

std::string format_em(double em) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", em);
  return buf;
}

}  // namespace

std::string method_name(Method method) {
  switch (method) {
    case Method::kParametric: return "parametric";
    case Method::kRagReader: return "rag_reader";
    case Method::kCompressionReader: return "compression_reader";
    case Method::kEcg: return "ecg";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : all_methods()) {
    if (method_name(m) == name) return m;
  }
  throw ContractError("unknown method '" + std::string(name) +
                      "' (expected parametric, rag_reader, compression_reader or ecg)");
}

std::vector<Method> all_methods() {
  return {Method::kParametric, Method::kRagReader, Method::kCompressionReader, Method::kEcg};
}

void EvalSystem::index_passages(const std::vector<Passage>& corpus) {
  passages.clear();
  for (const Passage& p : corpus) passages.emplace(p.id, &p);
}

const Passage& EvalSystem::passage(std::uint32_t id) const {
  auto it = passages.find(id);
  if (it == passages.end()) throw ContractError("eval: unknown passage id " + std::to_string(id));
  return *it->second;
}

Retriever bm25_retriever(const Bm25Index& index) {
  return [&index](const EvalQuery& q, std::size_t k) { return ids_of(index.search_text(q.question, k)); };
}

Retriever maxsim_retriever(const EcgModel& model, const EmbeddingStore& store, std::size_t threads) {
  return [&model, &store, threads](const EvalQuery& q, std::size_t k) {
    const MultiVectorEmbedding e = model.embed(q.question, model.lm().config().t);
    return ids_of(search_topk(e, store, k, threads).results);
  };
}

Retriever oracle_retriever() {
  return [](const EvalQuery& q, std::size_t k) {
    return k == 0 ? std::vector<std::uint32_t>{} : std::vector<std::uint32_t>{q.gold_id};
  };
}

Retriever make_retriever(const EvalSystem& system, Method method) {
  switch (method) {
    case Method::kParametric:
      return [](const EvalQuery&, std::size_t) { return std::vector<std::uint32_t>{}; };
    case Method::kRagReader:
    case Method::kCompressionReader:
      if (!system.bm25) throw ContractError("eval: BM25 index missing");
      return bm25_retriever(*system.bm25);
    case Method::kEcg:
      if (!system.ecg || !system.store) throw ContractError("eval: ECG model or store missing");
      return maxsim_retriever(*system.ecg, *system.store);
  }
  throw ContractError("eval: bad method");
}

Reader make_reader(const EvalSystem& system, Method method, std::size_t budget, std::size_t k) {
  if (!system.vocab) throw ContractError("eval: vocabulary missing");
  if (budget == 0) throw ContractError("eval: budget must be at least 1");
  const Vocabulary& vocab = *system.vocab;
  const std::size_t max_new = system.max_new;
  switch (method) {
    case Method::kParametric: {
      if (!system.parametric) throw ContractError("eval: parametric model missing");
      const LanguageModel& lm = *system.parametric;
      return [&lm, &vocab, max_new](const EvalQuery& q, std::span<const std::uint32_t>) {
        return ReaderOutput{generate_text(lm, vocab, reader_input(vocab, q.question, {}), max_new), 0};
      };
    }
    case Method::kRagReader: {
      if (!system.reader) throw ContractError("eval: reader model missing");
      const std::size_t share = per_doc_share(budget, k, "rag_reader");
      const LanguageModel& lm = *system.reader;
      return [&lm, &vocab, &system, max_new, share, budget](const EvalQuery& q, std::span<const std::uint32_t> docs) {
        std::vector<std::vector<TokenId>> tokens;
        std::size_t units = 0;
        for (std::uint32_t id : docs) {
          std::vector<TokenId> t = vocab.tokenize(system.passage(id).text);
          if (t.size() > share) t.resize(share);
          units += t.size();
          tokens.push_back(std::move(t));
        }
        if (units > budget) throw ContractError("rag_reader: assembled context exceeds the budget");
        return ReaderOutput{generate_text(lm, vocab, reader_input(vocab, q.question, tokens), max_new), units};
      };
    }
    case Method::kCompressionReader: {
      if (!system.ecg) throw ContractError("eval: ECG model missing");
      const EcgModel& model = *system.ecg;
      const std::size_t n = std::min(model.lm().config().t, per_doc_share(budget, k, "compression_reader"));
      return [&model, &vocab, &system, max_new, n](const EvalQuery& q, std::span<const std::uint32_t> docs) {
        std::vector<Tensor> contexts;
        for (std::uint32_t id : docs) {
          contexts.push_back(model.compress(model.embed(system.passage(id).text, n, id)).vectors);
        }
        const MixedInput input = build_gen_input(vocab, q.question, contexts);
        return ReaderOutput{generate_text(model.lm(), vocab, input, max_new), n * docs.size()};
      };
    }
    case Method::kEcg: {
      if (!system.ecg || !system.store) throw ContractError("eval: ECG model or store missing");
      const EcgModel& model = *system.ecg;
      const EmbeddingStore& store = *system.store;
      if (!store.empty() && k * store.at(0).n() > budget) {
        throw ContractError("ecg: " + std::to_string(k) + " documents of " + std::to_string(store.at(0).n()) +
                            " vectors exceed budget " + std::to_string(budget));
      }
      return [&model, &vocab, &store, max_new, budget](const EvalQuery& q, std::span<const std::uint32_t> docs) {
        std::vector<Tensor> contexts;
        std::size_t units = 0;
        for (std::uint32_t id : docs) {
          const MultiVectorEmbedding* e = store.find(id);
          if (!e) throw ContractError("ecg: passage " + std::to_string(id) + " is not indexed");
          units += e->n();
          contexts.push_back(model.compress(*e).vectors);
        }
        if (units > budget) throw ContractError("ecg: stored vectors exceed the budget");
        const MixedInput input = build_gen_input(vocab, q.question, contexts);
        return ReaderOutput{generate_text(model.lm(), vocab, input, max_new), units};
      };
    }
  }
  throw ContractError("eval: bad method");
}

EvalReport evaluate(const Retriever& retriever, const Reader& reader, std::span<const EvalQuery> queries,
                    std::size_t k, std::size_t threads) {
  std::vector<const EvalQuery*> ordered;
  for (const EvalQuery& q : queries) ordered.push_back(&q);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const EvalQuery* a, const EvalQuery* b) { return a->id < b->id; });
  EvalReport report;
  report.k = k;
  report.records.resize(ordered.size());
  parallel_for(ordered.size(), threads, [&](std::size_t i) {
    const EvalQuery& q = *ordered[i];
    QueryRecord& rec = report.records[i];
    rec.query_id = q.id;
    rec.question = q.question;
    rec.answers = q.answers;
    if (k > 0) {
      rec.doc_ids = retriever(q, k);
      if (rec.doc_ids.size() > k) rec.doc_ids.resize(k);
    }
    const ReaderOutput out = reader(q, rec.doc_ids);
    rec.prediction = out.prediction;
    rec.context_units = out.context_units;
    rec.correct = exact_match(out.prediction, q.answers);
  });
  std::size_t correct = 0;
  for (const QueryRecord& r : report.records) correct += r.correct;
  report.em = report.records.empty() ? 0.0
                                     : static_cast<double>(correct) / static_cast<double>(report.records.size());
  return report;
}

EvalReport eval_fixed_budget(const EvalSystem& system, Method method, std::span<const EvalQuery> queries,
                             std::size_t budget, std::size_t k, const std::string& dataset) {
  if (method == Method::kParametric) k = 0;
  EvalReport report =
      evaluate(make_retriever(system, method), make_reader(system, method, budget, k), queries, k, system.threads);
  report.dataset = dataset;
  report.method = method_name(method);
  report.budget = budget;
  return report;
}

std::vector<std::size_t> budget_grid(std::size_t first, std::size_t last, std::size_t step) {
  if (first == 0 || step == 0 || last < first) throw ContractError("budget grid: need 1 <= first <= last, step >= 1");
  std::vector<std::size_t> grid;
  for (std::size_t b = first; b <= last; b += step) grid.push_back(b);
  return grid;
}

std::vector<std::size_t> paper_budget_grid() { return budget_grid(32, 256, 32); }

FixedPerformanceResult fixed_performance_search(const std::function<double(std::size_t)>& em_at_budget,
                                                double target, std::span<const std::size_t> grid) {
  if (!(target >= 0.0 && target <= 1.0)) throw ContractError("fixed_performance_search: target outside [0, 1]");
  std::vector<std::size_t> budgets(grid.begin(), grid.end());
  std::sort(budgets.begin(), budgets.end());
  FixedPerformanceResult best;
  bool any = false;
  for (std::size_t b : budgets) {
    const double em = em_at_budget(b);
    if (std::isnan(em)) continue;  // budget not evaluable
    if (em >= target) return FixedPerformanceResult{b, em, true};
    if (!any || em > best.em) best = FixedPerformanceResult{b, em, false};
    any = true;
  }
  if (!any) throw ContractError("fixed_performance_search: no evaluable budget in the grid");
  return best;
}

FixedPerformanceResult fixed_performance_search(const EvalSystem& system, Method method, double target,
                                                std::span<const EvalQuery> queries, std::size_t k,
                                                std::span<const std::size_t> grid) {
  return fixed_performance_search(
      [&](std::size_t budget) {
        try {
          return eval_fixed_budget(system, method, queries, budget, k).em;
        } catch (const ContractError&) {
          return std::nan("");
        }
      },
      target, grid);
}

std::vector<Passage> pool_corpus(std::span<const Retriever> retrievers, std::span<const EvalQuery> queries,
                                 std::size_t top_n, const std::vector<Passage>& corpus) {
  if (retrievers.empty()) throw ContractError("pool_corpus: no retrievers");
  if (top_n == 0) throw ContractError("pool_corpus: top_n must be at least 1");
  std::set<std::uint32_t> keep;
  for (const EvalQuery& q : queries) {
    keep.insert(q.gold_id);
    for (const Retriever& r : retrievers) {
      for (std::uint32_t id : r(q, top_n)) keep.insert(id);
    }
  }
  std::vector<Passage> pooled;
  for (const Passage& p : corpus) {
    if (keep.count(p.id)) pooled.push_back(p);
  }
  return pooled;
}

std::vector<EvalReport> k_sweep(const Retriever& retriever, const std::function<Reader(std::size_t k)>& reader_for_k,
                                std::span<const EvalQuery> queries, std::span<const std::size_t> ks,
                                std::size_t threads) {
  if (ks.empty()) return {};
  for (std::size_t k : ks) {
    if (k < 1 || k > 5) throw ContractError("k_sweep: k must lie in [1, 5]");
  }
  const std::size_t k_max = *std::max_element(ks.begin(), ks.end());
  std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> ranking;
  std::vector<std::vector<std::uint32_t>> lists(queries.size());
  parallel_for(queries.size(), threads, [&](std::size_t i) { lists[i] = retriever(queries[i], k_max); });
  for (std::size_t i = 0; i < queries.size(); ++i) ranking[queries[i].id] = std::move(lists[i]);
  const Retriever cached = [&ranking](const EvalQuery& q, std::size_t k) {
    std::vector<std::uint32_t> ids = ranking.at(q.id);
    if (ids.size() > k) ids.resize(k);
    return ids;
  };
  std::vector<EvalReport> reports;
  for (std::size_t k : ks) reports.push_back(evaluate(cached, reader_for_k(k), queries, k, threads));
  return reports;
}

std::string reports_csv(std::span<const EvalReport> reports) {
  std::string out = "dataset,method,budget,k,em\n";
  for (const EvalReport& r : reports) {
    out += r.dataset + "," + r.method + "," + std::to_string(r.budget) + "," + std::to_string(r.k) + "," +
           format_em(r.em) + "\n";
  }
  return out;
}

void write_reports_csv(const std::string& path, std::span<const EvalReport> reports) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path);
  out << reports_csv(reports);
}

void write_records_jsonl(const std::string& path, std::span<const EvalReport> reports) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path);
  for (const EvalReport& r : reports) {
    for (const QueryRecord& rec : r.records) {
      nlohmann::ordered_json j;
      j["dataset"] = r.dataset;
      j["method"] = r.method;
      j["budget"] = r.budget;
      j["k"] = r.k;
      j["query_id"] = rec.query_id;
      j["question"] = rec.question;
      j["prediction"] = rec.prediction;
      j["answers"] = rec.answers;
      j["correct"] = rec.correct;
      j["doc_ids"] = rec.doc_ids;
      j["context_units"] = rec.context_units;
      out << j.dump() << "\n";
    }
  }
}

}  // namespace ecg
