#ifndef ECG_LM_MODEL_H_
#define ECG_LM_MODEL_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ecg/lm/mixed_input.h"
#include "ecg/numerics/parameter_set.h"

namespace ecg {

struct LmConfig {
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t d = 64;
  std::size_t vocab = 0;
  std::size_t max_len = 128;
  // Default number of <emb> tokens per encoded text.
  std::size_t t = 8;

  void validate() const;
};

// Pre-norm decoder-only transformer with learned absolute positions and a
// weight-tied output head.
class LanguageModel {
 public:
  LanguageModel(LmConfig config, std::uint64_t seed, const std::string& prefix = "lm");

  const LmConfig& config() const { return config_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  const Tensor& embedding_table() const { return tok_emb_->value; }

  // Final-layer hidden states [len x d]. Vector blocks owned by another graph
  // enter as constants.
  Var forward(Graph& g, const MixedInput& input) const;
  // Next-token logits [rows x vocab] for the given hidden rows.
  Var logits(Graph& g, Var hidden) const;

 private:
  struct Layer {
    Parameter* ln1_g;
    Parameter* ln1_b;
    Parameter* w_qkv;
    Parameter* b_qkv;
    Parameter* w_o;
    Parameter* b_o;
    Parameter* ln2_g;
    Parameter* ln2_b;
    Parameter* w_fc;
    Parameter* b_fc;
    Parameter* w_out;
    Parameter* b_out;
  };

  Var embed(Graph& g, const MixedInput& input) const;
  Var attention(Graph& g, const Layer& layer, Var x) const;

  LmConfig config_;
  ParameterSet params_;
  Parameter* tok_emb_ = nullptr;
  Parameter* pos_emb_ = nullptr;
  std::vector<Layer> layers_;
  Parameter* lnf_g_ = nullptr;
  Parameter* lnf_b_ = nullptr;
};

}  // namespace ecg

#endif  // ECG_LM_MODEL_H_
