#include "ecg/training/ecg_model.h"

#include <cmath>

#include "ecg/lm/generation.h"
#include "ecg/numerics/ops.h"

namespace ecg {
namespace {

LmConfig sized_for(LmConfig config, const Vocabulary& vocab) {
  config.vocab = vocab.size();
  return config;
}

}  // namespace

ScalingParams::ScalingParams() {
  log_tau_ = &params_.add("scale.log_tau", Tensor::scalar(std::log(kInitialTau)));
  alpha_ = &params_.add("scale.alpha", Tensor::scalar(kInitialAlpha));
}

double ScalingParams::tau_value() const { return std::exp(log_tau_->value[0]); }

Var ScalingParams::tau(Graph& g) const { return exp(g.param(*log_tau_)); }

Var ScalingParams::alpha(Graph& g) const { return g.param(*alpha_); }

void ScalingParams::set_enabled(bool enabled) {
  if (!enabled) {
    log_tau_->value = Tensor::scalar(0.0);
    alpha_->value = Tensor::scalar(1.0);
  }
  log_tau_->frozen = !enabled;
  alpha_->frozen = !enabled;
  log_tau_->zero_grad();
  alpha_->zero_grad();
}

EcgModel::EcgModel(Vocabulary vocab, LmConfig config, std::uint64_t seed, ProjectionInit init)
    : vocab_(std::move(vocab)),
      lm_(sized_for(config, vocab_), seed),
      proj_(config.d, seed ^ 0x9e3779b97f4a7c15ULL, init) {}

std::vector<Parameter*> EcgModel::parameters() {
  std::vector<Parameter*> out = lm_.params().all();
  for (Parameter* p : proj_.parameters()) out.push_back(p);
  for (Parameter* p : scaling_.params().all()) out.push_back(p);
  return out;
}

Var EcgModel::encode_ret(Graph& g, std::string_view text, std::size_t n) const {
  return ret_project(g, encode_text(g, lm_, vocab_, text, n), proj_.ret());
}

Var EcgModel::compress(Graph& g, Var e_ret) const { return comp_project(g, e_ret, proj_.comp()); }

MultiVectorEmbedding EcgModel::embed(std::string_view text, std::size_t n, std::uint32_t id) const {
  Graph g(false);
  return {encode_ret(g, text, n).value(), id};
}

CompressedContext EcgModel::compress(const MultiVectorEmbedding& e_ret) const {
  return comp_project(e_ret, proj_.comp());
}

std::vector<NamedTensor> EcgModel::to_named() const {
  std::vector<NamedTensor> out = lm_.params().to_named();
  for (const ParameterSet* set : {&proj_.ret().params(), &proj_.comp().params(), &scaling_.params()}) {
    for (NamedTensor& nt : set->to_named()) out.push_back(std::move(nt));
  }
  return out;
}

void EcgModel::load_named(std::span<const NamedTensor> tensors) {
  lm_.params().load_named(tensors);
  proj_.ret().params().load_named(tensors);
  proj_.comp().params().load_named(tensors);
  scaling_.params().load_named(tensors);
}

void EcgModel::save(const std::string& path) const { save_checkpoint(path, to_named()); }

void EcgModel::load(const std::string& path) { load_named(load_checkpoint(path)); }

}  // namespace ecg
