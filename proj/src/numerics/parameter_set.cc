#include "ecg/numerics/parameter_set.h"

#include <unordered_map>

#include "ecg/common/error.h"

namespace ecg {

Parameter& ParameterSet::add(std::string name, Tensor value) {
  if (find(name) != nullptr) throw ContractError("duplicate parameter name " + name);
  params_.push_back(std::make_unique<Parameter>(std::move(name), std::move(value)));
  return *params_.back();
}

Parameter* ParameterSet::find(const std::string& name) {
  for (auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

const Parameter* ParameterSet::find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

std::vector<Parameter*> ParameterSet::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::size_t ParameterSet::numel() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.numel();
  return n;
}

std::vector<NamedTensor> ParameterSet::to_named() const {
  std::vector<NamedTensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back({p->name, p->value});
  return out;
}

void ParameterSet::load_named(std::span<const NamedTensor> tensors) {
  std::unordered_map<std::string, const Tensor*> by_name;
  for (const NamedTensor& nt : tensors) by_name[nt.name] = &nt.tensor;
  for (auto& p : params_) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) throw FormatError("checkpoint is missing parameter " + p->name);
    if (it->second->shape() != p->value.shape()) {
      throw FormatError("checkpoint shape " + shape_string(it->second->shape()) + " for " + p->name +
                        " does not match " + shape_string(p->value.shape()));
    }
    p->value = *it->second;
    p->zero_grad();
  }
}

void ParameterSet::set_frozen(bool frozen) {
  for (auto& p : params_) p->frozen = frozen;
}

}  // namespace ecg
