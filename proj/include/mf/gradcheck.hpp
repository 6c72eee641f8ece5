#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mf/params.hpp"

namespace mf {

// model(params, grads): run the forward pass and return the scalar loss.
// When grads is non-null, also fill it with analytic gradients.
using GradCheckModel = std::function<double(ParameterSet&, GradientMap*)>;

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t checked = 0;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  bool pass = true;
  double worst = 0.0;
};

// Central finite differences against the analytic gradients. For tensors
// larger than max_entries_per_tensor, a seeded sample of entries is checked
// (0 = check every entry). Throws if the forward pass is not deterministic.
GradCheckReport grad_check(const GradCheckModel& model, ParameterSet& params,
                           double tolerance, double fd_step = 1e-5,
                           std::size_t max_entries_per_tensor = 0,
                           std::uint64_t seed = 0);

}  // namespace mf
