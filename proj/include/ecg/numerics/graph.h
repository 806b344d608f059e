#ifndef ECG_NUMERICS_GRAPH_H_
#define ECG_NUMERICS_GRAPH_H_

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ecg/numerics/tensor.h"

namespace ecg {

// A named, learnable tensor. Gradients accumulate into `grad` across
// backward passes until zero_grad() is called.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor value);

  void zero_grad();

  std::string name;
  Tensor value;
  Tensor grad;
  // Frozen parameters enter graphs as constants and never receive gradient.
  bool frozen = false;
};

class Graph;

// Handle to a node of a Graph. Cheap to copy; only valid while the graph lives.
class Var {
 public:
  Var() = default;

  Graph* graph() const { return graph_; }
  std::size_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  friend class Graph;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode tape. Nodes are appended in evaluation order, so the tape is
// always topologically sorted and backward() is a single reverse sweep.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::size_t)>;

  // With record_gradients=false the graph only evaluates values (inference).
  explicit Graph(bool record_gradients = true);
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  Var leaf(Tensor value);
  Var param(Parameter& p);
  Var detach(Var v);

  const Tensor& value(Var v) const;
  // Gradient of the most recent backward pass, or nullptr when no path exists.
  const Tensor* grad(Var v) const;
  bool requires_grad(Var v) const;
  bool recording() const { return recording_; }
  std::size_t size() const { return nodes_.size(); }

  // Accumulates d(loss)/d(node) for every node reachable from `loss`.
  // Leaf and parameter gradients accumulate across calls.
  void backward(Var loss);

  // --- op implementation interface ---
  Var record(Tensor value, std::span<const Var> inputs, BackwardFn fn);
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);
  const Tensor& out_grad(std::size_t id) const { return nodes_[id].grad; }
  const Tensor& node_value(std::size_t id) const { return nodes_[id].value; }
  // Gradient buffer of an input, allocated on first use; nullptr if the input
  // does not require gradient.
  Tensor* grad_buffer(Var input);

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;
    bool requires_grad = false;
    bool is_leaf = false;
    Parameter* param = nullptr;
    BackwardFn backward;
  };

  void check_owned(Var v) const;

  bool recording_;
  std::deque<Node> nodes_;  // stable addresses: values outlive later appends
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
};

}  // namespace ecg

#endif  // ECG_NUMERICS_GRAPH_H_
