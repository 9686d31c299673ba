#include "glot/optim.hpp"

#include <cmath>

#include "glot/error.hpp"

namespace glot {

void AdamConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw InvalidArgument("adam: learning_rate must be finite and >= 0");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw InvalidArgument("adam: beta1 must lie in (0,1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw InvalidArgument("adam: beta2 must lie in (0,1)");
  if (!(epsilon > 0.0)) throw InvalidArgument("adam: epsilon must be > 0");
  if (!(weight_decay >= 0.0)) throw InvalidArgument("adam: weight_decay must be >= 0");
}

void adam_step(std::span<Parameter* const> params, const AdamConfig& cfg) {
  for (Parameter* p : params) {
    p->step_count += 1;
    const double t = static_cast<double>(p->step_count);
    const double corr1 = 1.0 - std::pow(cfg.beta1, t);
    const double corr2 = 1.0 - std::pow(cfg.beta2, t);
    auto value = p->value.data();
    auto grad = p->grad.data();
    auto m = p->adam_m.data();
    auto v = p->adam_v.data();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i] + cfg.weight_decay * value[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[i] / corr1;
      const double v_hat = v[i] / corr2;
      value[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
    p->zero_grad();
  }
}

}  // namespace glot
