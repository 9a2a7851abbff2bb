#pragma once

#include <map>
#include <string>
#include <vector>

#include "ad/tensor.hpp"

namespace cd::ad {

struct Parameter {
  Tensor value;
  Tensor grad;
};

// Named learnable tensors, iterated in lexicographic name order so that
// optimizers and checkpoints are deterministic.
class ParameterStore {
 public:
  Parameter& add(const std::string& name, Tensor value);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  std::size_t size() const noexcept { return params_.size(); }
  std::size_t scalar_count() const;
  std::vector<std::string> names() const;
  void zero_grad();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  friend bool operator==(const ParameterStore& a, const ParameterStore& b);

 private:
  std::map<std::string, Parameter> params_;
};

}  // namespace cd::ad
