#pragma once

#include <span>

#include "glot/autograd.hpp"

namespace glot {

struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;

  /// Throws InvalidArgument when a field is out of range.
  void validate() const;
};

/// Bias-corrected Adam update applied in place, then grads are zeroed and
/// step counts advanced. Weight decay, when nonzero, is added to the
/// gradient (L2 form).
void adam_step(std::span<Parameter* const> params, const AdamConfig& cfg);

}  // namespace glot
