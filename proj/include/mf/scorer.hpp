#pragma once

#include "mf/corpus.hpp"

namespace mf {

// Anything that can score log p(response | context). Implementations must be
// deterministic for fixed inputs.
struct ResponseScorer {
  virtual ~ResponseScorer() = default;
  virtual double log_prob(const Context& context, const Ids& response) const = 0;
};

}  // namespace mf
