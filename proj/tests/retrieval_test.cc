#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "ecg/common/error.h"
#include "ecg/numerics/binary_io.h"
#include "ecg/numerics/grad_check.h"
#include "ecg/numerics/ops.h"
#include "ecg/retrieval/bm25.h"
#include "ecg/retrieval/maxsim.h"
#include "ecg/retrieval/search.h"
#include "ecg/retrieval/store.h"
#include "test_util.h"

namespace ecg {
namespace {

using testing::random_tensor;

double brute_maxsim(const Tensor& q, const Tensor& d) {
  double total = 0.0;
  for (std::size_t i = 0; i < q.rows(); ++i) {
    double best = 0.0;
    for (std::size_t j = 0; j < d.rows(); ++j) {
      double dot = 0.0;
      for (std::size_t c = 0; c < q.cols(); ++c) dot += q.at(i, c) * d.at(j, c);
      if (j == 0 || dot > best) best = dot;
    }
    total += best;
  }
  return total / static_cast<double>(q.rows());
}

MultiVectorEmbedding emb(Tensor t, std::uint32_t id = 0) { return {std::move(t), id}; }

EmbeddingStore random_store(std::mt19937_64& rng, std::size_t count, std::size_t m, std::size_t max_n) {
  EmbeddingStore store(m);
  std::uniform_int_distribution<std::size_t> n_dist(1, max_n);
  std::vector<std::uint32_t> ids(count);
  std::iota(ids.begin(), ids.end(), 100u);
  std::shuffle(ids.begin(), ids.end(), rng);
  for (std::uint32_t id : ids) store.add(emb(random_tensor({n_dist(rng), m}, rng), id));
  return store;
}

TEST(MaxSim, UnitMatch) {
  EXPECT_EQ(maxsim(Tensor::matrix({{1, 0}}), Tensor::matrix({{1, 0}, {0, 1}})), 1.0);
}

TEST(MaxSim, MeanOverQueryVectors) {
  EXPECT_EQ(maxsim(Tensor::matrix({{1, 0}, {0, 1}}), Tensor::matrix({{0, 1}})), 0.5);
}

TEST(MaxSim, ZeroQuery) {
  EXPECT_EQ(maxsim(Tensor(Shape{3, 2}), Tensor::matrix({{0, 1}, {4, 4}})), 0.0);
}

TEST(MaxSim, Errors) {
  EXPECT_THROW(maxsim(Tensor(Shape{1, 2}), Tensor(Shape{1, 3})), DimensionError);
  EXPECT_THROW(maxsim(Tensor(Shape{0, 2}), Tensor(Shape{1, 2})), ContractError);
}

TEST(MaxSim, MatchesBruteForce) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> dim(1, 8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = dim(rng);
    const Tensor q = random_tensor({dim(rng), m}, rng);
    const Tensor d = random_tensor({dim(rng), m}, rng);
    EXPECT_NEAR(maxsim(q, d), brute_maxsim(q, d), 1e-9);
    Graph g(false);
    EXPECT_NEAR(maxsim(g.constant(q), g.constant(d)).value().item(), brute_maxsim(q, d), 1e-9);
  }
}

TEST(MaxSim, AppendingDocumentVectorNeverDecreases) {
  std::mt19937_64 rng(18);
  std::uniform_int_distribution<std::size_t> dim(1, 8);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = dim(rng), nd = dim(rng);
    const Tensor q = random_tensor({dim(rng), m}, rng);
    const Tensor d = random_tensor({nd, m}, rng);
    Tensor bigger(Shape{nd + 1, m});
    std::copy(d.data().begin(), d.data().end(), bigger.data().begin());
    const Tensor extra = random_tensor({1, m}, rng);
    std::copy(extra.data().begin(), extra.data().end(), bigger.data().begin() + nd * m);
    EXPECT_GE(maxsim(q, bigger), maxsim(q, d));
  }
}

Tensor shuffle_rows(const Tensor& t, std::mt19937_64& rng) {
  std::vector<std::size_t> order(t.rows());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Tensor out(t.shape());
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) out.at(r, c) = t.at(order[r], c);
  return out;
}

TEST(MaxSim, PermutationInvariance) {
  std::mt19937_64 rng(19);
  std::uniform_int_distribution<std::size_t> dim(1, 8);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = dim(rng);
    const Tensor q = random_tensor({dim(rng), m}, rng);
    const Tensor d = random_tensor({dim(rng), m}, rng);
    const double base = maxsim(q, d);
    EXPECT_EQ(maxsim(q, shuffle_rows(d, rng)), base);
    EXPECT_NEAR(maxsim(shuffle_rows(q, rng), d), base, 1e-12);
  }
}

TEST(MaxSim, QueryScaleKeepsRanking) {
  std::mt19937_64 rng(20);
  std::uniform_int_distribution<std::size_t> dim(1, 8);
  std::uniform_real_distribution<double> scale_dist(0.1, 10.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = dim(rng);
    const Tensor q = random_tensor({dim(rng), m}, rng);
    const double c = trial % 2 ? 4.0 : scale_dist(rng);
    Tensor scaled = q;
    for (double& v : scaled.data()) v *= c;
    EmbeddingStore store(m);
    for (std::uint32_t id = 0; id < 5; ++id) store.add(emb(random_tensor({dim(rng), m}, rng), id));
    std::vector<std::uint32_t> a, b;
    for (const auto& r : search_topk(emb(q), store, 5).results) a.push_back(r.id);
    for (const auto& r : search_topk(emb(scaled), store, 5).results) b.push_back(r.id);
    EXPECT_EQ(a, b);
    const double base = maxsim(q, store.at(0).vectors);
    if (c == 4.0) {
      EXPECT_EQ(maxsim(scaled, store.at(0).vectors), 4.0 * base);
    } else {
      EXPECT_NEAR(maxsim(scaled, store.at(0).vectors), c * base, 1e-12 * (1.0 + std::abs(c * base)));
    }
  }
}

TEST(MaxSim, GradCheck) {
  std::mt19937_64 rng(21);
  Parameter q("q", random_tensor({3, 4}, rng));
  Parameter d("d", random_tensor({5, 4}, rng));
  Parameter* params[] = {&q, &d};
  const GradCheckReport r =
      grad_check([&](Graph& g) { return maxsim(g.param(q), g.param(d)); }, params, 1e-6, 1e-4);
  EXPECT_TRUE(r.passed) << r.worst_coordinate << " " << r.max_relative_error;
}

TEST(Search, SelfRetrieval) {
  std::mt19937_64 rng(22);
  EmbeddingStore store(8);
  for (std::uint32_t id = 0; id < 20; ++id) {
    Tensor t = random_tensor({4, 8}, rng);
    for (std::size_t r = 0; r < 4; ++r) {
      double norm = 0.0;
      for (double v : t.row(r)) norm += v * v;
      for (double& v : t.row(r)) v /= std::sqrt(norm);
    }
    store.add(emb(t, id));
  }
  for (std::uint32_t id = 0; id < 20; ++id) {
    const SearchResult res = search_topk(*store.find(id), store, 1);
    ASSERT_EQ(res.results.size(), 1u);
    EXPECT_EQ(res.results[0].id, id);
  }
}

TEST(Search, HandComputedOrder) {
  EmbeddingStore store(2);
  store.add(emb(Tensor::matrix({{0.2, 0.0}}), 7));   // B
  store.add(emb(Tensor::matrix({{0.5, 0.0}}), 9));   // A
  const SearchResult res = search_topk(emb(Tensor::matrix({{1.0, 0.0}})), store, 2);
  ASSERT_EQ(res.results.size(), 2u);
  EXPECT_EQ(res.results[0].id, 9u);
  EXPECT_EQ(res.results[1].id, 7u);
  EXPECT_FLOAT_EQ(res.results[0].score, 0.5f);
  EXPECT_EQ(res.results[0].rank, 1u);
  EXPECT_EQ(res.results[1].rank, 2u);
  EXPECT_FALSE(res.truncated);
}

TEST(Search, TiesBreakByAscendingId) {
  EmbeddingStore store(2);
  for (std::uint32_t id : {5u, 2u, 8u}) store.add(emb(Tensor::matrix({{1, 1}}), id));
  const SearchResult res = search_topk(emb(Tensor::matrix({{1, 0}})), store, 3);
  EXPECT_EQ(res.results[0].id, 2u);
  EXPECT_EQ(res.results[1].id, 5u);
  EXPECT_EQ(res.results[2].id, 8u);
}

TEST(Search, KBeyondCountReturnsAllFlagged) {
  std::mt19937_64 rng(23);
  const EmbeddingStore store = random_store(rng, 6, 3, 3);
  const SearchResult res = search_topk(emb(random_tensor({2, 3}, rng)), store, 10);
  EXPECT_EQ(res.results.size(), 6u);
  EXPECT_TRUE(res.truncated);
  EXPECT_THROW(search_topk(emb(random_tensor({2, 3}, rng)), store, 0), ContractError);
  EXPECT_THROW(search_topk(emb(random_tensor({2, 3}, rng)), EmbeddingStore(3), 1), ContractError);
}

TEST(Search, AgreesWithSortAllOracle) {
  std::mt19937_64 rng(24);
  for (std::size_t count : {1u, 2u, 10u, 57u, 300u, 1000u}) {
    const EmbeddingStore store = random_store(rng, count, 6, 5);
    const MultiVectorEmbedding q = emb(random_tensor({3, 6}, rng));
    std::vector<std::pair<double, std::uint32_t>> all;
    for (const auto& r : store.records()) all.push_back({-brute_maxsim(q.vectors, r.vectors), r.id});
    std::sort(all.begin(), all.end());
    for (std::size_t k : {std::size_t{1}, std::size_t{5}, count}) {
      const SearchResult res = search_topk(q, store, k);
      ASSERT_EQ(res.results.size(), std::min(k, count));
      for (std::size_t i = 0; i < res.results.size(); ++i) {
        EXPECT_EQ(res.results[i].id, all[i].second);
        EXPECT_EQ(res.results[i].rank, i + 1);
      }
    }
  }
}

TEST(Search, ThreadedEqualsSerial) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    const EmbeddingStore store = random_store(rng, 20 + seed * 7, 4, 6);
    const MultiVectorEmbedding q = emb(random_tensor({3, 4}, rng));
    const SearchResult serial = search_topk(q, store, 10, 1);
    for (std::size_t threads : {2u, 3u, 8u}) {
      const SearchResult parallel = search_topk(q, store, 10, threads);
      EXPECT_EQ(parallel.results, serial.results);
    }
  }
}

TEST(Store, RoundTripIsBitExact) {
  std::mt19937_64 rng(25);
  const EmbeddingStore store = random_store(rng, 10, 5, 4);
  const std::string path = ::testing::TempDir() + "/store.ecgs";
  store.write(path);
  const EmbeddingStore back = EmbeddingStore::read(path);
  ASSERT_EQ(back.size(), store.size());
  EXPECT_EQ(back.m(), 5u);
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back.at(i).id, store.at(i).id);
    EXPECT_EQ(back.at(i).vectors, store.at(i).vectors);
  }
  EXPECT_EQ(back.encode(), store.encode());
  EXPECT_EQ(read_file(path).size(), disk_usage(store));
}

TEST(Store, EmptyStoreIsHeaderOnly) {
  const EmbeddingStore store(4);
  const std::string bytes = store.encode();
  EXPECT_EQ(bytes, std::string("ECGS\x01\x00\x00\x00\x04\x00\x00\x00\x00\x00\x00\x00", 16));
  const EmbeddingStore back = EmbeddingStore::decode(bytes);
  EXPECT_EQ(back.size(), 0u);
  EXPECT_EQ(disk_usage(store), 16u);
}

TEST(Store, RecordLayout) {
  EmbeddingStore store(1);
  store.add(emb(Tensor::matrix({{1.0}}), 3));
  EXPECT_EQ(store.encode(), std::string("ECGS\x01\x00\x00\x00\x01\x00\x00\x00\x01\x00\x00\x00"
                                        "\x03\x00\x00\x00\x01\x00\x00\x00\x80\x3f",
                                        26));
}

TEST(Store, RejectsCorruption) {
  std::mt19937_64 rng(26);
  std::string bytes = random_store(rng, 3, 2, 2).encode();
  EXPECT_THROW(EmbeddingStore::decode(bytes.substr(0, bytes.size() - 2)), FormatError);
  std::string bad_version = bytes;
  bad_version[4] = 2;
  try {
    EmbeddingStore::decode(bad_version);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
  bytes[1] = 'X';
  EXPECT_THROW(EmbeddingStore::decode(bytes), FormatError);
}

TEST(Store, RejectsDuplicateIdsAndDims) {
  EmbeddingStore store(2);
  store.add(emb(Tensor::matrix({{1, 2}}), 1));
  EXPECT_THROW(store.add(emb(Tensor::matrix({{1, 2}}), 1)), FormatError);
  EXPECT_THROW(store.add(emb(Tensor::matrix({{1, 2, 3}}), 2)), DimensionError);
  // Hand-made file with a repeated id.
  std::string bytes = store.encode();
  bytes[12] = 2;
  bytes += bytes.substr(16);
  EXPECT_THROW(EmbeddingStore::decode(bytes), FormatError);
}

TEST(DiskUsage, WorkedExample) {
  EXPECT_EQ(store_bytes(16, 64, 10), 41036u);
  std::mt19937_64 rng(27);
  EmbeddingStore store(64);
  for (std::uint32_t id = 0; id < 10; ++id) store.add(emb(random_tensor({16, 64}, rng), id));
  EXPECT_EQ(disk_usage(store), 41036u);
}

TEST(DiskUsage, MatchesFormulaOnRandomStores) {
  std::mt19937_64 rng(28);
  for (int trial = 0; trial < 20; ++trial) {
    const EmbeddingStore store = random_store(rng, 1 + trial, 1 + trial % 7, 9);
    std::size_t expected = 16;
    for (const auto& r : store.records()) expected += 4 + 2 + 4 * r.n() * r.m();
    EXPECT_EQ(disk_usage(store), expected);
    EXPECT_EQ(store.encode().size(), expected);
  }
}

TEST(DualStore, PayloadRatioIsHalf) {
  for (std::size_t n : {1u, 4u, 16u, 32u})
    for (std::size_t m : {8u, 64u, 576u})
      for (std::size_t count : {1u, 10u, 10000u}) {
        const DualStoreComparison c = compare_dual_store(n, m, count);
        EXPECT_EQ(c.payload_ratio, 0.5);
        EXPECT_EQ(c.dual_bytes, 2 * c.unified_bytes);
        EXPECT_EQ(c.unified_bytes, store_bytes(n, m, count));
      }
  const DualStoreComparison empty = compare_dual_store(16, 64, 0);
  EXPECT_EQ(empty.unified_bytes, 16u);
  EXPECT_EQ(empty.payload_ratio, 1.0);
  EXPECT_EQ(empty.total_ratio, 1.0);
}

TEST(Bm25, AbsentTermContributesNothing) {
  Bm25Index index;
  index.add_text(1, "coral reef");
  index.add_text(2, "atlantis capital");
  const std::vector<std::string> q = {"zebra"};
  EXPECT_EQ(index.score(q, 1), 0.0);
}

TEST(Bm25, SingleDocClosedForm) {
  Bm25Index index;
  index.add_text(4, "coral");
  const std::vector<std::string> q = {"coral"};
  const double idf = std::log(1.0 + (1.0 - 1.0 + 0.5) / (1.0 + 0.5));
  EXPECT_NEAR(index.score(q, 4), idf * (0.9 + 1.0) / (1.0 + 0.9), 1e-15);
}

TEST(Bm25, HandEvaluatedTwoDocs) {
  Bm25Index index;
  index.add_text(1, "a b b c");
  index.add_text(2, "a d");
  const std::vector<std::string> q = {"b", "a"};
  const double avg = 3.0;
  const double idf_b = std::log(1.0 + (2 - 1 + 0.5) / (1 + 0.5));
  const double idf_a = std::log(1.0 + (2 - 2 + 0.5) / (2 + 0.5));
  const double k1 = 0.9, b = 0.4;
  const double norm1 = k1 * (1 - b + b * 4.0 / avg);
  const double want = idf_b * 2 * (k1 + 1) / (2 + norm1) + idf_a * 1 * (k1 + 1) / (1 + norm1);
  EXPECT_NEAR(index.score(q, 1), want, 1e-12);
}

TEST(Bm25, DuplicateDocsScoreEqually) {
  Bm25Index index;
  index.add_text(1, "the capital of atlantis is coral");
  index.add_text(2, "the capital of atlantis is coral");
  index.add_text(3, "something else");
  const auto res = index.search_text("capital of atlantis", 3);
  EXPECT_EQ(res[0].score, res[1].score);
  EXPECT_EQ(res[0].id, 1u);
  EXPECT_EQ(res[1].id, 2u);
}

TEST(Bm25, UnknownDocThrows) {
  Bm25Index index;
  index.add_text(1, "a");
  const std::vector<std::string> q = {"a"};
  EXPECT_THROW(index.score(q, 99), ContractError);
}

TEST(Bm25, TermsAreLowercasedAlnum) {
  EXPECT_EQ(bm25_terms("The Capital, of Atlantis."),
            (std::vector<std::string>{"the", "capital", "of", "atlantis"}));
}

}  // namespace
}  // namespace ecg
