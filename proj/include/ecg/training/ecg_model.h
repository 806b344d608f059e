#ifndef ECG_TRAINING_ECG_MODEL_H_
#define ECG_TRAINING_ECG_MODEL_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ecg/lm/model.h"
#include "ecg/lm/vocabulary.h"
#include "ecg/projections/projection.h"

namespace ecg {

inline constexpr double kInitialTau = 0.05;
inline constexpr double kInitialAlpha = 1.0;

// Contrastive temperature tau = exp(log_tau) and teacher-margin scale alpha.
class ScalingParams {
 public:
  ScalingParams();

  Parameter& log_tau() { return *log_tau_; }
  Parameter& alpha() { return *alpha_; }
  double tau_value() const;
  double alpha_value() const { return alpha_->value[0]; }
  Var tau(Graph& g) const;
  Var alpha(Graph& g) const;
  // Disabled: tau = alpha = 1, both frozen.
  void set_enabled(bool enabled);
  bool enabled() const { return !log_tau_->frozen; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

 private:
  ParameterSet params_;
  Parameter* log_tau_;
  Parameter* alpha_;
};

// One LM, the retrieval and compression blocks, and the loss scales.
class EcgModel {
 public:
  EcgModel(Vocabulary vocab, LmConfig config, std::uint64_t seed, ProjectionInit init = {});

  const Vocabulary& vocab() const { return vocab_; }
  const LanguageModel& lm() const { return lm_; }
  LanguageModel& lm() { return lm_; }
  const Projections& proj() const { return proj_; }
  Projections& proj() { return proj_; }
  const ScalingParams& scaling() const { return scaling_; }
  ScalingParams& scaling() { return scaling_; }
  std::size_t d() const { return lm_.config().d; }

  std::vector<Parameter*> parameters();

  // E_ret [n x d] for a text encoded with n <emb> tokens.
  Var encode_ret(Graph& g, std::string_view text, std::size_t n) const;
  // E_comp [n x d] from E_ret.
  Var compress(Graph& g, Var e_ret) const;

  MultiVectorEmbedding embed(std::string_view text, std::size_t n, std::uint32_t id = 0) const;
  CompressedContext compress(const MultiVectorEmbedding& e_ret) const;

  std::vector<NamedTensor> to_named() const;
  void load_named(std::span<const NamedTensor> tensors);
  void save(const std::string& path) const;
  void load(const std::string& path);

 private:
  Vocabulary vocab_;
  LanguageModel lm_;
  Projections proj_;
  ScalingParams scaling_;
};

}  // namespace ecg

#endif  // ECG_TRAINING_ECG_MODEL_H_
