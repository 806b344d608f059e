#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "ecg/common/error.h"
#include "ecg/numerics/checkpoint.h"
#include "ecg/numerics/grad_check.h"
#include "ecg/numerics/graph.h"
#include "ecg/numerics/ops.h"
#include "ecg/numerics/optimizer.h"
#include "test_util.h"

namespace ecg {
namespace {

using testing::random_tensor;

Tensor triple_loop_matmul(const Tensor& a, const Tensor& b) {
  Tensor out(Shape{a.rows(), b.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a.at(i, k) * b.at(k, j);
      out.at(i, j) = acc;
    }
  return out;
}

TEST(Tensor, RejectsLengthMismatch) {
  EXPECT_THROW(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
}

TEST(Matmul, IdentityAndZero) {
  Graph g;
  Var a = g.constant(Tensor::matrix({{1, 2}, {3, 4}}));
  Var eye = g.constant(Tensor::matrix({{1, 0}, {0, 1}}));
  EXPECT_EQ(matmul(a, eye).value(), Tensor::matrix({{1, 2}, {3, 4}}));
  Var z = g.constant(Tensor::matrix({{0, 0}}));
  Var ones = g.constant(Tensor::matrix({{1}, {1}}));
  EXPECT_EQ(matmul(z, ones).value(), Tensor::matrix({{0}}));
}

TEST(Matmul, MatchesTripleLoop) {
  const Tensor a = Tensor::matrix({{1, 2}, {3, 4}});
  const Tensor b = Tensor::matrix({{5, 6}, {7, 8}});
  Graph g;
  EXPECT_EQ(matmul(g.constant(a), g.constant(b)).value(), triple_loop_matmul(a, b));

  std::mt19937_64 rng(3);
  for (std::size_t trial = 0; trial < 20; ++trial) {
    const Tensor x = random_tensor({3 + trial % 3, 5}, rng);
    const Tensor y = random_tensor({5, 2 + trial % 4}, rng);
    const Tensor got = matmul(g.constant(x), g.constant(y)).value();
    const Tensor want = triple_loop_matmul(x, y);
    for (std::size_t i = 0; i < got.numel(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(Matmul, ShapeMismatchNamesShapes) {
  Graph g;
  try {
    matmul(g.constant(Tensor(Shape{2, 3})), g.constant(Tensor(Shape{2, 3})));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("[2x3]"), std::string::npos) << e.what();
  }
}

TEST(LayerNorm, ConstantRowIsZero) {
  Graph g;
  const Tensor out = layer_norm(g.constant(Tensor::matrix({{1, 1, 1}}))).value();
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(LayerNorm, SymmetricPair) {
  Graph g;
  const Tensor out = layer_norm(g.constant(Tensor::matrix({{1, -1}}))).value();
  EXPECT_NEAR(out[0], 1.0, 1e-5);
  EXPECT_NEAR(out[1], -1.0, 1e-5);
}

TEST(LayerNorm, MatchesFormula) {
  Graph g;
  const Tensor out = layer_norm(g.constant(Tensor::matrix({{0, 2, 4}})), 1e-5).value();
  const double denom = std::sqrt(8.0 / 3.0 + 1e-5);
  EXPECT_NEAR(out[0], -2.0 / denom, 1e-12);
  EXPECT_NEAR(out[1], 0.0, 1e-12);
  EXPECT_NEAR(out[2], 2.0 / denom, 1e-12);
}

TEST(LayerNorm, EmptyRowThrows) {
  Graph g;
  EXPECT_THROW(layer_norm(g.constant(Tensor(Shape{2, 0}))), Error);
}

TEST(Backward, SumGivesOnes) {
  Graph g;
  Var x = g.leaf(Tensor::vector({3, -1, 2}));
  g.backward(sum(x));
  EXPECT_EQ(*g.grad(x), Tensor::vector({1, 1, 1}));
}

TEST(Backward, SquareGivesTwoX) {
  Graph g;
  Var x = g.leaf(Tensor::vector({2, -1}));
  g.backward(sum(mul(x, x)));
  EXPECT_EQ(*g.grad(x), Tensor::vector({4, -2}));
}

TEST(Backward, DetachedHasNoGrad) {
  Graph g;
  Var x = g.leaf(Tensor::vector({2, -1}));
  Var d = g.detach(x);
  g.backward(sum(mul(d, d)));
  EXPECT_EQ(g.grad(x), nullptr);
}

TEST(Backward, NonScalarLossThrows) {
  Graph g;
  Var x = g.leaf(Tensor::vector({1, 2}));
  EXPECT_THROW(g.backward(x), ContractError);
}

TEST(Backward, ParameterGradsAccumulate) {
  std::mt19937_64 rng(11);
  Parameter w("w", random_tensor({3, 2}, rng));
  const Tensor x = random_tensor({4, 3}, rng);
  auto run = [&] {
    Graph g;
    Var loss = sum(mul(matmul(g.constant(x), g.param(w)), matmul(g.constant(x), g.param(w))));
    g.backward(loss);
  };
  w.zero_grad();
  run();
  const Tensor once = w.grad;
  run();
  for (std::size_t i = 0; i < once.numel(); ++i) EXPECT_EQ(w.grad[i], once[i] + once[i]);
}

TEST(Backward, Deterministic) {
  std::mt19937_64 rng(5);
  Parameter w("w", random_tensor({4, 4}, rng));
  const Tensor x = random_tensor({3, 4}, rng);
  auto run = [&] {
    w.zero_grad();
    Graph g;
    Var h = gelu(layer_norm(matmul(g.constant(x), g.param(w))));
    Var loss = mean(log_softmax(h));
    g.backward(loss);
    return std::make_pair(loss.value(), w.grad);
  };
  EXPECT_EQ(run(), run());
}

TEST(Softmax, LogSoftmaxIsStableForLargeInputs) {
  Graph g;
  const Tensor out = log_softmax(g.constant(Tensor::matrix({{1000, 1000}}))).value();
  EXPECT_NEAR(out[0], -std::log(2.0), 1e-12);
  EXPECT_NEAR(out[1], -std::log(2.0), 1e-12);
}

TEST(Softmax, CausalMaskZeroesFuture) {
  Graph g;
  const Tensor p = causal_softmax(g.constant(Tensor::matrix({{5, 9}, {0, 0}}))).value();
  EXPECT_EQ(p.at(0, 0), 1.0);
  EXPECT_EQ(p.at(0, 1), 0.0);
  EXPECT_NEAR(p.at(1, 0), 0.5, 1e-15);
}

TEST(GradCheck, QuadraticIsExact) {
  std::mt19937_64 rng(1);
  Parameter x("x", random_tensor({5}, rng));
  Parameter* params[] = {&x};
  const GradCheckReport r = grad_check(
      [&](Graph& g) { Var v = g.param(x); return scale(sum(mul(v, v)), 0.5); }, params, 1e-5, 1e-6);
  EXPECT_TRUE(r.passed) << r.max_relative_error;
  EXPECT_LE(r.max_relative_error, 1e-6);
  EXPECT_EQ(r.coordinates_checked, 5u);
}

TEST(GradCheck, FlagsReluKink) {
  Parameter x("x", Tensor::vector({0.0, 0.7, -0.3}));
  Parameter* params[] = {&x};
  const GradCheckReport r =
      grad_check([&](Graph& g) { return sum(relu(g.param(x))); }, params, 1e-5, 1e-4);
  ASSERT_EQ(r.kinks.size(), 1u);
  EXPECT_EQ(r.kinks[0], "x[0]");
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.coordinates_checked, 2u);
}

TEST(GradCheck, RejectsBadStep) {
  Parameter x("x", Tensor::vector({1.0}));
  Parameter* params[] = {&x};
  auto f = [&](Graph& g) { return sum(g.param(x)); };
  EXPECT_THROW(grad_check(f, params, 0.0, 1e-4), ContractError);
  EXPECT_THROW(grad_check(f, params, 0.1, 1e-4), ContractError);
}

TEST(GradCheck, NonFiniteLossNamesCoordinate) {
  Parameter x("x", Tensor::vector({1.0, 1e-6}));
  Parameter* params[] = {&x};
  try {
    grad_check([&](Graph& g) { return sum(log(g.param(x))); }, params, 1e-5, 1e-4);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("x[1]"), std::string::npos) << e.what();
  }
}

// Every differentiable op through one randomized composite per op.
TEST(GradCheck, EveryOp) {
  std::mt19937_64 rng(2024);
  Parameter a("a", random_tensor({3, 4}, rng));
  Parameter b("b", random_tensor({4, 3}, rng));
  Parameter c("c", random_tensor({3, 4}, rng));
  Parameter r("r", random_tensor({4}, rng));
  Parameter col("col", random_tensor({3}, rng));
  Parameter s("s", Tensor::scalar(0.7));
  Parameter pos("pos", random_tensor({3, 4}, rng, 0.5, 2.0));
  Parameter* params[] = {&a, &b, &c, &r, &col, &s, &pos};
  const std::vector<std::size_t> picks = {1, 3, 0};
  const std::vector<std::size_t> rows = {2, 0, 2};
  const std::vector<std::function<Var(Graph&)>> cases = {
      [&](Graph& g) { return sum(mul(matmul(g.param(a), g.param(b)), matmul(g.param(a), g.param(b)))); },
      [&](Graph& g) { Var m = matmul_nt(g.param(a), g.param(c)); return sum(mul(m, m)); },
      [&](Graph& g) { Var t = transpose(g.param(a)); return sum(mul(t, g.param(b))); },
      [&](Graph& g) { return sum(mul(sub(g.param(a), g.param(c)), add(g.param(a), g.param(c)))); },
      [&](Graph& g) { return sum(mul(gelu(g.param(a)), g.param(c))); },
      [&](Graph& g) { return sum(mul(sigmoid(g.param(a)), g.param(c))); },
      [&](Graph& g) { return sum(mul(exp(g.param(a)), g.param(c))); },
      [&](Graph& g) { return sum(mul(log(g.param(pos)), g.param(c))); },
      [&](Graph& g) { return sum(mul(mul_scalar(g.param(a), g.param(s)), g.param(c))); },
      [&](Graph& g) { return sum(mul(add_row(g.param(a), g.param(r)), g.param(c))); },
      [&](Graph& g) { return sum(mul(mul_row(g.param(a), g.param(r)), g.param(c))); },
      [&](Graph& g) { return sum(mul(mul_col(g.param(a), g.param(col)), g.param(c))); },
      [&](Graph& g) { return sum(mul(layer_norm(g.param(a)), g.param(c))); },
      [&](Graph& g) { return sum(mul(log_softmax(g.param(a)), g.param(c))); },
      [&](Graph& g) {
        Var sq = matmul_nt(g.param(a), g.param(c));
        return sum(mul(causal_softmax(sq), sq));
      },
      [&](Graph& g) { return sum(mul(row_max(g.param(a)), row_max(g.param(c)))); },
      [&](Graph& g) { return sum(mul(select_rows(g.param(a), rows), select_rows(g.param(c), rows))); },
      [&](Graph& g) {
        Var rows_term = sum(mul(slice_rows(g.param(a), 1, 3), slice_rows(g.param(c), 0, 2)));
        return add(rows_term, sum(mul(slice_cols(g.param(a), 1, 3), slice_cols(g.param(c), 0, 2))));
      },
      [&](Graph& g) {
        Var parts[] = {g.param(a), g.param(c)};
        Var cat = concat_rows(parts);
        Var cols[] = {g.param(a), g.param(pos)};
        return add(sum(mul(cat, cat)), sum(mul(concat_cols(cols), concat_cols(cols))));
      },
      [&](Graph& g) { return sum(mul(reshape(g.param(a), {4, 3}), g.param(b))); },
      [&](Graph& g) { return sum(mul(pick(g.param(a), picks), pick(g.param(c), picks))); },
      [&](Graph& g) { return mul(element(g.param(a), 5), mean(g.param(c))); },
      [&](Graph& g) { return scale(sum(mul(g.param(pos), g.param(pos))), -0.25); },
  };
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const GradCheckReport rep = grad_check(cases[i], params, 1e-6, 1e-4);
    EXPECT_TRUE(rep.passed) << "case " << i << " worst " << rep.worst_coordinate << " err "
                            << rep.max_relative_error;
  }
}

TEST(Checkpoint, BitExactRoundTrip) {
  std::mt19937_64 rng(9);
  std::vector<NamedTensor> tensors = {{"ret.layer1.W_proj", random_tensor({4, 4}, rng)},
                                      {"tau", Tensor::scalar(0.05)},
                                      {"bias", random_tensor({7}, rng)}};
  for (auto& nt : tensors) round_to_float32(nt.tensor);
  const std::string path = ::testing::TempDir() + "/ckpt.ecgp";
  save_checkpoint(path, tensors);
  const auto back = load_checkpoint(path);
  ASSERT_EQ(back.size(), tensors.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].name, tensors[i].name);
    EXPECT_EQ(back[i].tensor, tensors[i].tensor);
  }
  EXPECT_EQ(encode_checkpoint(back), encode_checkpoint(tensors));
}

TEST(Checkpoint, HeaderLayout) {
  const std::vector<NamedTensor> tensors = {{"ab", Tensor::vector({1.0})}};
  const std::string bytes = encode_checkpoint(tensors);
  const std::string expected("ECGP\x01\x00\x00\x00\x02\x00"
                             "ab\x01\x01\x00\x00\x00\x00\x00\x80\x3f",
                             21);
  EXPECT_EQ(bytes, expected);
}

TEST(Checkpoint, RejectsBadMagicAndTruncation) {
  std::string bytes = encode_checkpoint(std::vector<NamedTensor>{{"w", Tensor::vector({1.0, 2.0})}});
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 1)), FormatError);
  bytes[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bytes), FormatError);
}

TEST(Optimizer, ScheduleWarmsUpThenDecays) {
  EXPECT_DOUBLE_EQ(linear_schedule(0, 100, 1.0, 0.05), 0.2);
  EXPECT_DOUBLE_EQ(linear_schedule(4, 100, 1.0, 0.05), 1.0);
  EXPECT_DOUBLE_EQ(linear_schedule(5, 100, 1.0, 0.05), 1.0);
  EXPECT_NEAR(linear_schedule(99, 100, 1.0, 0.05), 1.0 / 95.0, 1e-15);
}

TEST(Optimizer, MinimizesQuadratic) {
  Parameter x("x", Tensor::vector({3.0, -2.0}));
  AdamW opt({&x}, AdamWOptions{.lr = 0.1, .weight_decay = 0.0, .warmup_ratio = 0.0, .clip_norm = 0.0},
            500);
  for (int i = 0; i < 500; ++i) {
    Graph g;
    Var v = g.param(x);
    g.backward(sum(mul(v, v)));
    opt.step();
  }
  EXPECT_NEAR(x.value[0], 0.0, 1e-2);
  EXPECT_NEAR(x.value[1], 0.0, 1e-2);
}

TEST(Optimizer, SkipsFrozen) {
  Parameter x("x", Tensor::vector({1.0}));
  x.frozen = true;
  AdamW opt({&x}, AdamWOptions{}, 10);
  Graph g;
  Var v = g.param(x);
  EXPECT_FALSE(g.requires_grad(v));
  opt.step();
  EXPECT_EQ(x.value[0], 1.0);
}

}  // namespace
}  // namespace ecg
