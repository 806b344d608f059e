#include "ecg/projections/projection.h"

#include <cmath>

#include "ecg/common/error.h"
#include "ecg/numerics/ops.h"

namespace ecg {
namespace {

Tensor uniform(Shape shape, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = dist(rng);
  return t;
}

void require_width(const Tensor& t, std::size_t d, const char* what) {
  require_rank2(t, what);
  if (t.cols() != d) {
    throw DimensionError(std::string(what) + ": input " + shape_string(t.shape()) + " does not match block width " +
                         std::to_string(d));
  }
}

}  // namespace

ProjectionBlock::ProjectionBlock(std::string prefix, std::size_t d, std::mt19937_64& rng, ProjectionInit init)
    : prefix_(std::move(prefix)), d_(d) {
  if (d == 0) throw ContractError("ProjectionBlock: d must be positive");
  const double bound = init.weight_scale / std::sqrt(static_cast<double>(d));
  for (std::size_t l = 1; l <= kProjectionLayers; ++l) {
    const std::string p = prefix_ + ".layer" + std::to_string(l) + ".";
    LayerParams layer{};
    layer.w_gate = &params_.add(p + "W_gate", uniform({1, d}, bound, rng));
    layer.b_gate = &params_.add(p + "b_gate", Tensor(Shape{1}, init.gate_bias));
    layer.w_proj = &params_.add(p + "W_proj", uniform({d, d}, bound, rng));
    layer.b_proj = &params_.add(p + "b_proj", Tensor(Shape{d}));
    layers_.push_back(layer);
  }
}

Var ProjectionBlock::forward(Graph& g, Var h) const {
  require_width(h.value(), d_, "projection block");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LayerParams& p = layers_[l];
    Var gate = sigmoid(add_row(matmul_nt(h, g.param(*p.w_gate)), g.param(*p.b_gate)));
    Var branch = add_row(matmul_nt(layer_norm(h), g.param(*p.w_proj)), g.param(*p.b_proj));
    if (l + 1 < layers_.size()) branch = relu(branch);
    h = add(mul_col(h, gate), branch);
  }
  return h;
}

Tensor ProjectionBlock::forward(const Tensor& h) const {
  Graph g(/*record_gradients=*/false);
  return forward(g, g.constant(h)).value();
}

Projections::Projections(std::size_t d, std::uint64_t seed, ProjectionInit init)
    : rng_(seed), ret_("ret", d, rng_, init), comp_("comp", d, rng_, init) {}

std::vector<Parameter*> Projections::parameters() {
  std::vector<Parameter*> out = ret_.params().all();
  for (Parameter* p : comp_.params().all()) out.push_back(p);
  return out;
}

Var ret_project(Graph& g, Var hidden, const ProjectionBlock& ret) {
  const double root = std::sqrt(static_cast<double>(ret.d()));
  return scale(ret.forward(g, hidden), 1.0 / root);
}

Var comp_project(Graph& g, Var e_ret, const ProjectionBlock& comp) {
  const double root = std::sqrt(static_cast<double>(comp.d()));
  require_width(e_ret.value(), comp.d(), "comp_project");
  return comp.forward(g, scale(e_ret, root));
}

MultiVectorEmbedding ret_project(const Tensor& hidden, const ProjectionBlock& ret, std::uint32_t id) {
  Graph g(false);
  return {ret_project(g, g.constant(hidden), ret).value(), id};
}

CompressedContext comp_project(const MultiVectorEmbedding& e_ret, const ProjectionBlock& comp) {
  if (e_ret.m() != comp.d()) {
    throw DimensionError("comp_project: embedding dim m=" + std::to_string(e_ret.m()) +
                         " differs from model width d=" + std::to_string(comp.d()));
  }
  Graph g(false);
  return {comp_project(g, g.constant(e_ret.vectors), comp).value(), e_ret.id};
}

}  // namespace ecg
