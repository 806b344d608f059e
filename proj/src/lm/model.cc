#include "ecg/lm/model.h"

#include <cmath>
#include <random>

#include "ecg/common/error.h"
#include "ecg/numerics/ops.h"

namespace ecg {
namespace {

Tensor normal(Shape shape, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = dist(rng);
  return t;
}

Var affine_norm(Graph& g, Var x, Parameter* gain, Parameter* bias) {
  return add_row(mul_row(layer_norm(x), g.param(*gain)), g.param(*bias));
}

Var linear(Graph& g, Var x, Parameter* w, Parameter* b) {
  return add_row(matmul(x, g.param(*w)), g.param(*b));
}

}  // namespace

void LmConfig::validate() const {
  if (layers == 0 || heads == 0 || d == 0) throw ContractError("LmConfig: layers, heads and d must be positive");
  if (d % heads != 0) throw ContractError("LmConfig: d must be divisible by heads");
  if (vocab <= 7) throw ContractError("LmConfig: vocabulary must hold the special tokens");
  if (max_len == 0) throw ContractError("LmConfig: max_len must be positive");
  if (t == 0) throw ContractError("LmConfig: t must be at least 1");
}

LanguageModel::LanguageModel(LmConfig config, std::uint64_t seed, const std::string& prefix)
    : config_(config) {
  config_.validate();
  std::mt19937_64 rng(seed);
  const std::size_t d = config_.d;
  const double stddev = 0.02;
  const double out_stddev = stddev / std::sqrt(2.0 * static_cast<double>(config_.layers));
  tok_emb_ = &params_.add(prefix + ".tok_emb", normal({config_.vocab, d}, stddev, rng));
  pos_emb_ = &params_.add(prefix + ".pos_emb", normal({config_.max_len, d}, stddev, rng));
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string p = prefix + ".layer" + std::to_string(l) + ".";
    Layer layer{};
    layer.ln1_g = &params_.add(p + "ln1.gain", Tensor(Shape{d}, 1.0));
    layer.ln1_b = &params_.add(p + "ln1.bias", Tensor(Shape{d}));
    layer.w_qkv = &params_.add(p + "attn.w_qkv", normal({d, 3 * d}, stddev, rng));
    layer.b_qkv = &params_.add(p + "attn.b_qkv", Tensor(Shape{3 * d}));
    layer.w_o = &params_.add(p + "attn.w_o", normal({d, d}, out_stddev, rng));
    layer.b_o = &params_.add(p + "attn.b_o", Tensor(Shape{d}));
    layer.ln2_g = &params_.add(p + "ln2.gain", Tensor(Shape{d}, 1.0));
    layer.ln2_b = &params_.add(p + "ln2.bias", Tensor(Shape{d}));
    layer.w_fc = &params_.add(p + "mlp.w_fc", normal({d, 4 * d}, stddev, rng));
    layer.b_fc = &params_.add(p + "mlp.b_fc", Tensor(Shape{4 * d}));
    layer.w_out = &params_.add(p + "mlp.w_out", normal({4 * d, d}, out_stddev, rng));
    layer.b_out = &params_.add(p + "mlp.b_out", Tensor(Shape{d}));
    layers_.push_back(layer);
  }
  lnf_g_ = &params_.add(prefix + ".lnf.gain", Tensor(Shape{d}, 1.0));
  lnf_b_ = &params_.add(prefix + ".lnf.bias", Tensor(Shape{d}));
}

Var LanguageModel::embed(Graph& g, const MixedInput& input) const {
  input.validate();
  if (input.size() == 0) throw ContractError("LanguageModel: empty input");
  if (input.size() > config_.max_len) {
    throw LengthError("input of " + std::to_string(input.size()) + " positions exceeds max_len " +
                      std::to_string(config_.max_len));
  }
  Var table = g.param(*tok_emb_);
  std::vector<Var> parts;
  for (const MixedInput::Segment& s : input.segments()) {
    if (const auto* ids = std::get_if<std::vector<TokenId>>(&s)) {
      std::vector<std::size_t> rows(ids->begin(), ids->end());
      for (std::size_t r : rows) {
        if (r >= config_.vocab) throw ContractError("token id " + std::to_string(r) + " out of range");
      }
      parts.push_back(select_rows(table, rows));
    } else {
      Var block = std::holds_alternative<Var>(s)
                      ? std::get<Var>(s)
                      : g.constant(std::get<Tensor>(s));
      if (block.graph() != &g) block = g.constant(block.value());
      if (block.value().cols() != config_.d) {
        throw DimensionError("injected vectors have width " + std::to_string(block.value().cols()) +
                             ", model expects " + std::to_string(config_.d));
      }
      parts.push_back(block);
    }
  }
  Var x = parts.size() == 1 ? parts[0] : concat_rows(parts);
  return add(x, slice_rows(g.param(*pos_emb_), 0, input.size()));
}

Var LanguageModel::attention(Graph& g, const Layer& layer, Var x) const {
  const std::size_t d = config_.d;
  const std::size_t dh = d / config_.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  Var qkv = linear(g, x, layer.w_qkv, layer.b_qkv);
  std::vector<Var> heads;
  heads.reserve(config_.heads);
  for (std::size_t h = 0; h < config_.heads; ++h) {
    Var q = slice_cols(qkv, h * dh, (h + 1) * dh);
    Var k = slice_cols(qkv, d + h * dh, d + (h + 1) * dh);
    Var v = slice_cols(qkv, 2 * d + h * dh, 2 * d + (h + 1) * dh);
    Var p = causal_softmax(scale(matmul_nt(q, k), inv_sqrt));
    heads.push_back(matmul(p, v));
  }
  return linear(g, concat_cols(heads), layer.w_o, layer.b_o);
}

Var LanguageModel::forward(Graph& g, const MixedInput& input) const {
  Var x = embed(g, input);
  for (const Layer& layer : layers_) {
    x = add(x, attention(g, layer, affine_norm(g, x, layer.ln1_g, layer.ln1_b)));
    Var hidden = gelu(linear(g, affine_norm(g, x, layer.ln2_g, layer.ln2_b), layer.w_fc, layer.b_fc));
    x = add(x, linear(g, hidden, layer.w_out, layer.b_out));
  }
  return affine_norm(g, x, lnf_g_, lnf_b_);
}

Var LanguageModel::logits(Graph& g, Var hidden) const {
  return matmul_nt(hidden, g.param(*tok_emb_));
}

}  // namespace ecg
