#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ecg/common/error.h"
#include "ecg/numerics/grad_check.h"
#include "ecg/numerics/ops.h"
#include "ecg/projections/projection.h"
#include "test_util.h"

namespace ecg {
namespace {

using testing::random_tensor;

// Straight-line evaluation of the layer formula with plain loops.
Tensor oracle_block(const ProjectionBlock& block, const Tensor& input) {
  const std::size_t n = input.rows(), d = input.cols();
  std::vector<double> h(input.data().begin(), input.data().end());
  for (std::size_t l = 0; l < kProjectionLayers; ++l) {
    const auto& p = block.layer(l);
    std::vector<double> next(n * d);
    for (std::size_t r = 0; r < n; ++r) {
      const double* row = &h[r * d];
      double z = p.b_gate->value[0];
      for (std::size_t c = 0; c < d; ++c) z += p.w_gate->value[c] * row[c];
      const double gate = 1.0 / (1.0 + std::exp(-z));
      double mu = 0.0;
      for (std::size_t c = 0; c < d; ++c) mu += row[c];
      mu /= static_cast<double>(d);
      double var = 0.0;
      for (std::size_t c = 0; c < d; ++c) var += (row[c] - mu) * (row[c] - mu);
      var /= static_cast<double>(d);
      std::vector<double> ln(d);
      for (std::size_t c = 0; c < d; ++c) ln[c] = (row[c] - mu) / std::sqrt(var + 1e-5);
      for (std::size_t o = 0; o < d; ++o) {
        double b = p.b_proj->value[o];
        for (std::size_t c = 0; c < d; ++c) b += p.w_proj->value.at(o, c) * ln[c];
        if (l + 1 < kProjectionLayers) b = std::max(0.0, b);
        next[r * d + o] = gate * row[o] + b;
      }
    }
    h = std::move(next);
  }
  return Tensor(Shape{n, d}, h);
}

void set_regime(ProjectionBlock& block, double gate_bias) {
  for (Parameter* p : block.params().all()) p->value.fill(0.0);
  for (std::size_t l = 0; l < kProjectionLayers; ++l) block.layer(l).b_gate->value.fill(gate_bias);
}

void randomize(ProjectionBlock& block, std::mt19937_64& rng) {
  for (Parameter* p : block.params().all()) p->value = random_tensor(p->value.shape(), rng);
}

TEST(Block, IdentityRegime) {
  std::mt19937_64 rng(1);
  ProjectionBlock block("ret", 4, rng);
  set_regime(block, 20.0);
  const Tensor h = random_tensor({3, 4}, rng);
  const Tensor out = block.forward(h);
  for (std::size_t i = 0; i < h.numel(); ++i) EXPECT_NEAR(out[i], h[i], 1e-6);
}

TEST(Block, ClosedGate) {
  std::mt19937_64 rng(2);
  ProjectionBlock block("ret", 4, rng);
  set_regime(block, -20.0);
  const Tensor out = block.forward(random_tensor({3, 4}, rng));
  for (double v : out.data()) EXPECT_NEAR(v, 0.0, 1e-6);
}

TEST(Block, MatchesFormulaOracle) {
  std::mt19937_64 rng(3);
  ProjectionBlock block("ret", 4, rng);
  for (int trial = 0; trial < 10; ++trial) {
    randomize(block, rng);
    const Tensor h = random_tensor({2, 4}, rng);
    const Tensor got = block.forward(h);
    const Tensor want = oracle_block(block, h);
    for (std::size_t i = 0; i < got.numel(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(Block, ShapeMismatchThrows) {
  std::mt19937_64 rng(4);
  ProjectionBlock block("ret", 4, rng);
  EXPECT_THROW(block.forward(Tensor(Shape{2, 5})), DimensionError);
}

TEST(Block, ParameterNames) {
  std::mt19937_64 rng(4);
  ProjectionBlock block("comp", 4, rng);
  EXPECT_NE(block.params().find("comp.layer1.W_gate"), nullptr);
  EXPECT_NE(block.params().find("comp.layer4.b_proj"), nullptr);
  EXPECT_EQ(block.params().size(), 16u);
}

TEST(RetProject, IdentityRegimeAllOnes) {
  std::mt19937_64 rng(5);
  ProjectionBlock block("ret", 4, rng);
  set_regime(block, 40.0);
  const MultiVectorEmbedding e = ret_project(Tensor(Shape{2, 4}, 1.0), block, 9);
  EXPECT_EQ(e.id, 9u);
  for (double v : e.vectors.data()) EXPECT_NEAR(v, 0.5, 1e-12);
}

TEST(RetProject, SingleRow) {
  std::mt19937_64 rng(6);
  ProjectionBlock block("ret", 8, rng);
  EXPECT_EQ(ret_project(random_tensor({1, 8}, rng), block).n(), 1u);
}

TEST(RetProject, MatchesOracle) {
  std::mt19937_64 rng(7);
  ProjectionBlock block("ret", 9, rng);
  randomize(block, rng);
  const Tensor h = random_tensor({3, 9}, rng);
  const Tensor want = oracle_block(block, h);
  const MultiVectorEmbedding e = ret_project(h, block);
  for (std::size_t i = 0; i < want.numel(); ++i) EXPECT_NEAR(e.vectors[i], want[i] / 3.0, 1e-12);
}

TEST(CompProject, ScaleRoundTripIsBitExact) {
  for (std::size_t d : {4u, 16u, 64u}) {
    std::mt19937_64 rng(d);
    ProjectionBlock ret("ret", d, rng);
    randomize(ret, rng);
    const Tensor h = random_tensor({5, d}, rng);
    const Tensor pre = ret.forward(h);
    const MultiVectorEmbedding e = ret_project(h, ret);
    Graph g(false);
    const Tensor restored = scale(g.constant(e.vectors), std::sqrt(static_cast<double>(d))).value();
    EXPECT_EQ(restored, pre) << "d=" << d;
  }
}

TEST(CompProject, IdentityRegimeRestoresScale) {
  std::mt19937_64 rng(8);
  ProjectionBlock ret("ret", 16, rng);
  ProjectionBlock comp("comp", 16, rng);
  randomize(ret, rng);
  set_regime(comp, 40.0);
  const Tensor h = random_tensor({3, 16}, rng);
  const Tensor pre = ret.forward(h);
  const CompressedContext c = comp_project(ret_project(h, ret, 4), comp);
  EXPECT_EQ(c.id, 4u);
  for (std::size_t i = 0; i < pre.numel(); ++i) EXPECT_NEAR(c.vectors[i], pre[i], 1e-12);
}

TEST(CompProject, ZeroInZeroOut) {
  std::mt19937_64 rng(9);
  ProjectionBlock comp("comp", 8, rng);
  for (std::size_t l = 0; l < kProjectionLayers; ++l) comp.layer(l).b_proj->value.fill(0.0);
  const CompressedContext c = comp_project(MultiVectorEmbedding{Tensor(Shape{2, 8}), 0}, comp);
  for (double v : c.vectors.data()) EXPECT_EQ(v, 0.0);
}

TEST(CompProject, MatchesOracle) {
  std::mt19937_64 rng(10);
  ProjectionBlock comp("comp", 4, rng);
  randomize(comp, rng);
  const Tensor e = random_tensor({2, 4}, rng);
  Tensor scaled = e;
  for (double& v : scaled.data()) v *= 2.0;
  const Tensor want = oracle_block(comp, scaled);
  const CompressedContext c = comp_project(MultiVectorEmbedding{e, 0}, comp);
  for (std::size_t i = 0; i < want.numel(); ++i) EXPECT_NEAR(c.vectors[i], want[i], 1e-12);
}

TEST(CompProject, RejectsWidthMismatch) {
  std::mt19937_64 rng(11);
  ProjectionBlock comp("comp", 8, rng);
  EXPECT_THROW(comp_project(MultiVectorEmbedding{Tensor(Shape{2, 4}), 0}, comp), DimensionError);
}

TEST(Init, GateStartsNearlyOpen) {
  std::mt19937_64 rng(12);
  ProjectionBlock block("ret", 64, rng);
  for (std::size_t l = 0; l < kProjectionLayers; ++l) {
    EXPECT_GE(block.layer(l).b_gate->value[0], 4.0);
    EXPECT_GE(1.0 / (1.0 + std::exp(-block.layer(l).b_gate->value[0])), 0.98);
  }
}

TEST(Init, NearPassThrough) {
  for (std::size_t d : {8u, 16u, 64u}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Projections proj(d, seed);
      std::mt19937_64 rng(seed + 100);
      std::normal_distribution<double> normal(0.0, 1.0);
      Tensor h(Shape{8, d});
      for (double& v : h.data()) v = normal(rng);
      for (const ProjectionBlock* block : {&proj.ret(), &proj.comp()}) {
        const Tensor out = block->forward(h);
        double diff = 0.0, norm = 0.0;
        for (std::size_t i = 0; i < h.numel(); ++i) {
          diff = std::max(diff, std::abs(out[i] - h[i]));
          norm = std::max(norm, std::abs(h[i]));
        }
        EXPECT_LE(diff / norm, 0.05) << "d=" << d << " seed=" << seed;
      }
    }
  }
}

TEST(GradCheck, BothBlocksAndScaling) {
  Projections proj(8, 21);
  std::mt19937_64 rng(22);
  // Random weights so every branch carries signal.
  for (Parameter* p : proj.parameters()) p->value = random_tensor(p->value.shape(), rng, -0.5, 0.5);
  Parameter hidden("hidden", random_tensor({3, 8}, rng));
  const Tensor target = random_tensor({3, 8}, rng);
  std::vector<Parameter*> params = proj.parameters();
  params.push_back(&hidden);
  const GradCheckReport r = grad_check(
      [&](Graph& g) {
        Var e_ret = ret_project(g, g.param(hidden), proj.ret());
        Var e_comp = comp_project(g, e_ret, proj.comp());
        return add(sum(mul(e_comp, g.constant(target))), sum(mul(e_ret, e_ret)));
      },
      params, 1e-6, 1e-4);
  EXPECT_TRUE(r.passed) << r.worst_coordinate << " " << r.max_relative_error;
  EXPECT_GT(r.coordinates_checked, 500u);
}

}  // namespace
}  // namespace ecg
