#include "ad/parameters.hpp"

#include <algorithm>

#include "common/errors.hpp"

namespace cd::ad {

Parameter& ParameterStore::add(const std::string& name, Tensor value) {
  if (params_.count(name)) throw Error("duplicate parameter '" + name + "'");
  Parameter p;
  p.grad = Tensor::zeros_like(value);
  p.value = std::move(value);
  return params_.emplace(name, std::move(p)).first->second;
}

Parameter& ParameterStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error("unknown parameter '" + name + "'");
  return it->second;
}

const Parameter& ParameterStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += p.value.size();
  return n;
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, p] : params_) out.push_back(name);
  return out;
}

void ParameterStore::zero_grad() {
  for (auto& [name, p] : params_) p.grad.fill(0.0);
}

bool operator==(const ParameterStore& a, const ParameterStore& b) {
  if (a.params_.size() != b.params_.size()) return false;
  auto ia = a.params_.begin();
  auto ib = b.params_.begin();
  for (; ia != a.params_.end(); ++ia, ++ib) {
    if (ia->first != ib->first) return false;
    if (ia->second.value.shape() != ib->second.value.shape()) return false;
    const auto va = ia->second.value.values();
    const auto vb = ib->second.value.values();
    if (!std::equal(va.begin(), va.end(), vb.begin())) return false;
  }
  return true;
}

}  // namespace cd::ad
