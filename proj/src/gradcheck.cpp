#include "mf/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "mf/rng.hpp"

namespace mf {

GradCheckReport grad_check(const GradCheckModel& model, ParameterSet& params,
                           double tolerance, double fd_step,
                           std::size_t max_entries_per_tensor,
                           std::uint64_t seed) {
  GradientMap analytic;
  const double loss0 = model(params, &analytic);
  const double loss1 = model(params, nullptr);
  if (std::memcmp(&loss0, &loss1, sizeof(double)) != 0)
    throw ContractViolation("grad_check: forward pass is not deterministic");

  GradCheckReport report;
  Pcg32 rng(seed, 0x67636b /* "gck" */);
  for (auto& [name, p] : params.params) {
    GradCheckEntry entry;
    entry.name = name;
    const Tensor& g = analytic.at(name);

    std::vector<std::size_t> idx;
    if (max_entries_per_tensor == 0 || p.size() <= max_entries_per_tensor) {
      idx.resize(p.size());
      for (std::size_t i = 0; i < p.size(); ++i) idx[i] = i;
    } else {
      for (std::size_t k = 0; k < max_entries_per_tensor; ++k)
        idx.push_back(rng.next_below(static_cast<std::uint32_t>(p.size())));
      std::sort(idx.begin(), idx.end());
      idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    }

    for (std::size_t i : idx) {
      const double saved = p[i];
      p[i] = saved + fd_step;
      const double lp = model(params, nullptr);
      p[i] = saved - fd_step;
      const double lm = model(params, nullptr);
      p[i] = saved;
      const double fd = (lp - lm) / (2.0 * fd_step);
      const double a = g[i];
      const double denom = std::max({std::fabs(a), std::fabs(fd), 1e-5});
      const double rel = std::fabs(a - fd) / denom;
      entry.max_rel_err = std::max(entry.max_rel_err, rel);
      ++entry.checked;
    }
    entry.pass = entry.max_rel_err <= tolerance;
    report.worst = std::max(report.worst, entry.max_rel_err);
    report.pass = report.pass && entry.pass;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace mf
