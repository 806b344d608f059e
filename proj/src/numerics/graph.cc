#include "ecg/numerics/graph.h"

#include "ecg/common/error.h"

namespace ecg {

Parameter::Parameter(std::string name, Tensor value)
    : name(std::move(name)), value(std::move(value)), grad(Tensor::zeros_like(this->value)) {}

void Parameter::zero_grad() {
  if (grad.shape() != value.shape()) {
    grad = Tensor::zeros_like(value);
  } else {
    grad.fill(0.0);
  }
}

const Tensor& Var::value() const {
  if (!graph_) throw ContractError("value() on an unbound Var");
  return graph_->value(*this);
}

Graph::Graph(bool record_gradients) : recording_(record_gradients) {}

Var Graph::constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::leaf(Tensor value) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = recording_;
  node.is_leaf = true;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var(this, it->second);
  Node node;
  node.external = &p.value;
  node.requires_grad = recording_ && !p.frozen;
  node.param = node.requires_grad ? &p : nullptr;
  nodes_.push_back(std::move(node));
  param_nodes_.emplace(&p, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Graph::detach(Var v) {
  check_owned(v);
  return constant(value(v));
}

void Graph::check_owned(Var v) const {
  if (v.graph() != this || v.id() >= nodes_.size()) {
    throw ContractError("Var does not belong to this graph");
  }
}

const Tensor& Graph::value(Var v) const {
  check_owned(v);
  const Node& node = nodes_[v.id()];
  return node.external ? *node.external : node.value;
}

const Tensor* Graph::grad(Var v) const {
  check_owned(v);
  const Node& node = nodes_[v.id()];
  if (!node.requires_grad || node.grad.empty()) return nullptr;
  return &node.grad;
}

bool Graph::requires_grad(Var v) const {
  check_owned(v);
  return nodes_[v.id()].requires_grad;
}

Var Graph::record(Tensor value, std::span<const Var> inputs, BackwardFn fn) {
  bool needs = false;
  if (recording_) {
    for (Var in : inputs) {
      check_owned(in);
      needs = needs || nodes_[in.id()].requires_grad;
    }
  }
  Node node;
  node.value = std::move(value);
  node.requires_grad = needs;
  if (needs) node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(fn));
}

Tensor* Graph::grad_buffer(Var input) {
  Node& node = nodes_[input.id()];
  if (!node.requires_grad) return nullptr;
  if (node.grad.empty()) {
    node.grad = Tensor::zeros_like(node.external ? *node.external : node.value);
  }
  return &node.grad;
}

void Graph::backward(Var loss) {
  check_owned(loss);
  if (value(loss).numel() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        shape_string(value(loss).shape()));
  }
  for (Node& node : nodes_) {
    if (!node.is_leaf) node.grad = Tensor();
  }
  Node& root = nodes_[loss.id()];
  if (!root.requires_grad) return;
  Tensor* seed = grad_buffer(loss);
  (*seed)[0] += 1.0;

  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.requires_grad || node.grad.empty() || !node.backward) continue;
    node.backward(*this, id);
  }
  for (Node& node : nodes_) {
    if (node.param && !node.grad.empty()) {
      if (node.param->grad.shape() != node.param->value.shape()) node.param->zero_grad();
      node.param->grad += node.grad;
    }
  }
}

}  // namespace ecg
