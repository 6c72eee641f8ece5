#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "mf/tensor.hpp"

namespace mf {

// name -> gradient tensor; shapes mirror the owning ParameterSet.
using GradientMap = std::map<std::string, Tensor>;

// Named model parameters plus Adam moments. Iteration order is lexicographic
// by name (std::map), which fixes checkpoint and update order.
struct ParameterSet {
  std::map<std::string, Tensor> params;
  std::map<std::string, Tensor> adam_m;
  std::map<std::string, Tensor> adam_v;
  std::uint64_t step = 0;

  Tensor& add(const std::string& name, Tensor t) {
    if (params.count(name))
      throw ContractViolation("ParameterSet: duplicate parameter '" + name + "'");
    adam_m[name] = Tensor(t.shape);
    adam_v[name] = Tensor(t.shape);
    return params[name] = std::move(t);
  }

  Tensor& get(const std::string& name) {
    auto it = params.find(name);
    if (it == params.end())
      throw ContractViolation("ParameterSet: unknown parameter '" + name + "'");
    return it->second;
  }
  const Tensor& get(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end())
      throw ContractViolation("ParameterSet: unknown parameter '" + name + "'");
    return it->second;
  }
};

struct AdamSettings {
  double lr = 1.5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// In-place Adam with bias correction. Parameters without a gradient entry are
// treated as zero-gradient (their moments still decay).
void adam_step(ParameterSet& ps, const GradientMap& grads, const AdamSettings& s);

}  // namespace mf
