#ifndef ECG_PROJECTIONS_PROJECTION_H_
#define ECG_PROJECTIONS_PROJECTION_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ecg/numerics/graph.h"
#include "ecg/numerics/parameter_set.h"

namespace ecg {

inline constexpr std::size_t kProjectionLayers = 4;

struct ProjectionInit {
  double gate_bias = 6.0;
  // Weights are drawn from uniform(-s/sqrt(d), s/sqrt(d)).
  double weight_scale = 0.01;
};

// Retrieval representation E_ret [n x m], already divided by sqrt(m).
struct MultiVectorEmbedding {
  Tensor vectors;
  std::uint32_t id = 0;

  std::size_t n() const { return vectors.rows(); }
  std::size_t m() const { return vectors.cols(); }
};

// Generation context E_comp [n x d] derived from an E_ret.
struct CompressedContext {
  Tensor vectors;
  std::uint32_t id = 0;

  std::size_t n() const { return vectors.rows(); }
};

// Stack of gated residual layers:
//   h <- sigmoid(h W_gate^T + b_gate) * h + relu(LN(h) W_proj^T + b_proj)
// with a per-row scalar gate and no ReLU on the last layer.
class ProjectionBlock {
 public:
  ProjectionBlock(std::string prefix, std::size_t d, std::mt19937_64& rng, ProjectionInit init = {});

  std::size_t d() const { return d_; }
  const std::string& prefix() const { return prefix_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  struct LayerParams {
    Parameter* w_gate;  // [1 x d]
    Parameter* b_gate;  // [1]
    Parameter* w_proj;  // [d x d]
    Parameter* b_proj;  // [d]
  };
  const LayerParams& layer(std::size_t l) const { return layers_.at(l); }

  Var forward(Graph& g, Var h) const;
  Tensor forward(const Tensor& h) const;

 private:
  std::string prefix_;
  std::size_t d_;
  ParameterSet params_;
  std::vector<LayerParams> layers_;
};

// The retrieval (theta_ret) and compression (theta_comp) blocks.
class Projections {
 public:
  Projections(std::size_t d, std::uint64_t seed, ProjectionInit init = {});

  const ProjectionBlock& ret() const { return ret_; }
  const ProjectionBlock& comp() const { return comp_; }
  ProjectionBlock& ret() { return ret_; }
  ProjectionBlock& comp() { return comp_; }
  std::vector<Parameter*> parameters();

 private:
  std::mt19937_64 rng_;
  ProjectionBlock ret_;
  ProjectionBlock comp_;
};

// block then divide by sqrt(m).
Var ret_project(Graph& g, Var hidden, const ProjectionBlock& ret);
// multiply by sqrt(m) then block.
Var comp_project(Graph& g, Var e_ret, const ProjectionBlock& comp);

MultiVectorEmbedding ret_project(const Tensor& hidden, const ProjectionBlock& ret, std::uint32_t id = 0);
CompressedContext comp_project(const MultiVectorEmbedding& e_ret, const ProjectionBlock& comp);

}  // namespace ecg

#endif  // ECG_PROJECTIONS_PROJECTION_H_
