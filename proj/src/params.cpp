#include "mf/params.hpp"

#include <cmath>

namespace mf {

void adam_step(ParameterSet& ps, const GradientMap& grads, const AdamSettings& s) {
  ps.step += 1;
  const double t = static_cast<double>(ps.step);
  const double bc1 = 1.0 - std::pow(s.beta1, t);
  const double bc2 = 1.0 - std::pow(s.beta2, t);
  for (auto& [name, p] : ps.params) {
    Tensor& m = ps.adam_m[name];
    Tensor& v = ps.adam_v[name];
    auto git = grads.find(name);
    const Tensor* g = git == grads.end() ? nullptr : &git->second;
    if (g && !g->same_shape(p))
      throw ContractViolation("adam_step: gradient shape mismatch for '" + name + "'");
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g ? (*g)[i] : 0.0;
      m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * gi;
      v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
    }
  }
}

}  // namespace mf
