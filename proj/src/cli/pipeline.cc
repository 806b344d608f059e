#include "ecg/cli/pipeline.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <thread>

#include "ecg/common/error.h"
#include "ecg/lm/prompts.h"
#include "ecg/retrieval/maxsim.h"
#include "ecg/retrieval/search.h"
#include "ecg/training/reader.h"

namespace ecg {

std::uint64_t stream_seed(std::uint64_t seed, std::string_view stream) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  for (char c : stream) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  // splitmix64 finalizer
  h += 0x9e3779b97f4a7c15ULL;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
  return h ^ (h >> 31);
}

QaSplit split_qa(const SyntheticWorld& world, double held_out_fraction, std::uint64_t seed) {
  if (world.examples.size() != world.queries.size()) throw ContractError("split_qa: examples and queries differ");
  const std::size_t n = world.queries.size();
  const auto held = static_cast<std::size_t>(std::llround(held_out_fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(stream_seed(seed, "split"));
  std::shuffle(order.begin(), order.end(), rng);
  const std::set<std::size_t> heldout(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(held));
  QaSplit split;
  for (std::size_t i = 0; i < n; ++i) {
    if (heldout.count(i)) {
      split.heldout_queries.push_back(world.queries[i]);
    } else {
      split.train_examples.push_back(world.examples[i]);
      split.train_queries.push_back(world.queries[i]);
    }
  }
  return split;
}

Vocabulary build_vocabulary(const std::vector<Passage>& passages, const std::vector<TrainExample>& examples,
                            const std::vector<EvalQuery>& queries) {
  std::vector<std::string> texts = template_texts();
  for (const Passage& p : passages) texts.push_back(p.text);
  for (const TrainExample& e : examples) {
    texts.push_back(e.question);
    texts.insert(texts.end(), e.answers.begin(), e.answers.end());
  }
  for (const EvalQuery& q : queries) {
    texts.push_back(q.question);
    texts.insert(texts.end(), q.answers.begin(), q.answers.end());
  }
  return Vocabulary::build(texts);
}

LmConfig lm_config_for(const TrainConfig& config, const Vocabulary& vocab) {
  return LmConfig{.layers = config.layers, .heads = config.heads, .d = config.d, .vocab = vocab.size(),
                  .max_len = config.max_len, .t = config.t};
}

SyntheticWorld synth_world(const TrainConfig& config) {
  return synth_corpus(config.seed, config.n_facts, config.n_distractors, config.max_negatives);
}

EmbeddingStore build_index(const EcgModel& model, const std::vector<Passage>& passages, std::size_t t,
                           std::size_t threads) {
  std::vector<MultiVectorEmbedding> records(passages.size());
  threads = std::max<std::size_t>(1, std::min(threads, passages.size()));
  std::vector<std::thread> workers;
  const std::size_t chunk = passages.empty() ? 0 : (passages.size() + threads - 1) / threads;
  for (std::size_t w = 0; w < threads; ++w) {
    workers.emplace_back([&, w] {
      for (std::size_t i = w * chunk; i < std::min(passages.size(), (w + 1) * chunk); ++i) {
        records[i] = model.embed(passages[i].text, t, passages[i].id);
      }
    });
  }
  for (std::thread& th : workers) th.join();
  EmbeddingStore store(model.d());
  for (MultiVectorEmbedding& r : records) store.add(std::move(r));
  return store;
}

Bm25Index build_bm25(const std::vector<Passage>& passages) {
  Bm25Index index;
  for (const Passage& p : passages) index.add_text(p.id, p.text);
  return index;
}

double gold_top1_rate(const EcgModel& model, const EmbeddingStore& store, std::span<const EvalQuery> queries) {
  if (queries.empty()) return 0.0;
  std::size_t hits = 0;
  for (const EvalQuery& q : queries) {
    const SearchResult r = search_topk(model.embed(q.question, model.lm().config().t), store, 1);
    hits += !r.results.empty() && r.results[0].id == q.gold_id;
  }
  return static_cast<double>(hits) / static_cast<double>(queries.size());
}

EvalSystem DeskRun::system() const {
  EvalSystem s;
  s.vocab = &vocab;
  s.ecg = ecg.get();
  s.reader = reader.get();
  s.parametric = parametric.get();
  s.store = &store;
  s.bm25 = &bm25;
  s.index_passages(world.passages);
  s.max_new = config.max_new;
  s.threads = config.threads;
  return s;
}

DeskRun prepare_desk_run(const TrainConfig& config) {
  config.validate();
  DeskRun run;
  run.config = config;
  run.world = synth_world(config);
  run.split = split_qa(run.world, config.held_out_fraction, config.seed);
  run.vocab = build_vocabulary(run.world.passages, run.world.examples, run.world.queries);
  return run;
}

void train_readers(DeskRun& run, const StepCallback& log) {
  const LmConfig lc = lm_config_for(run.config, run.vocab);
  run.reader = std::make_unique<LanguageModel>(lc, stream_seed(run.config.seed, "reader-init"), "lm");
  run.parametric = std::make_unique<LanguageModel>(lc, stream_seed(run.config.seed, "parametric-init"), "lm");
  std::mt19937_64 reader_rng(stream_seed(run.config.seed, "reader"));
  train_reader(*run.reader, run.vocab, run.split.train_examples, run.config, ReaderMode::kReader, reader_rng, log);
  std::mt19937_64 parametric_rng(stream_seed(run.config.seed, "parametric"));
  train_reader(*run.parametric, run.vocab, run.split.train_examples, run.config, ReaderMode::kParametric,
               parametric_rng, log);
}

void train_ecg(DeskRun& run, const StepCallback& log) {
  run.ecg = std::make_unique<EcgModel>(run.vocab, lm_config_for(run.config, run.vocab),
                                       stream_seed(run.config.seed, "ecg-init"));
  std::mt19937_64 ssl_rng(stream_seed(run.config.seed, "ssl"));
  run.ssl_history = train_ssl(*run.ecg, run.world.passages, run.config, ssl_rng, log);
  std::mt19937_64 rag_rng(stream_seed(run.config.seed, "rag"));
  run.rag_history = train_rag(*run.ecg, run.config.distillation ? run.reader.get() : nullptr,
                              run.split.train_examples, run.config, rag_rng, log);
}

void build_indexes(DeskRun& run) {
  run.store = build_index(*run.ecg, run.world.passages, run.config.t, run.config.threads);
  run.bm25 = build_bm25(run.world.passages);
}

DeskRun run_desk_pipeline(const TrainConfig& config, const StepCallback& log) {
  DeskRun run = prepare_desk_run(config);
  train_readers(run, log);
  train_ecg(run, log);
  build_indexes(run);
  return run;
}

}  // namespace ecg
