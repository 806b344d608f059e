#ifndef ECG_NUMERICS_PARAMETER_SET_H_
#define ECG_NUMERICS_PARAMETER_SET_H_

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ecg/numerics/checkpoint.h"
#include "ecg/numerics/graph.h"

namespace ecg {

// Owns parameters at stable addresses, in insertion order.
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(ParameterSet&&) = default;
  ParameterSet& operator=(ParameterSet&&) = default;

  Parameter& add(std::string name, Tensor value);
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;

  std::vector<Parameter*> all();
  std::size_t size() const { return params_.size(); }
  std::size_t numel() const;

  std::vector<NamedTensor> to_named() const;
  // Copies values by name. Every parameter must be present with a matching shape.
  void load_named(std::span<const NamedTensor> tensors);
  void set_frozen(bool frozen);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

}  // namespace ecg

#endif  // ECG_NUMERICS_PARAMETER_SET_H_
