#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "aliaslab/tensor.hpp"

namespace aliaslab {

enum class OptKind { rmsprop, adam };

// RMSProp: v <- 0.99 v + 0.01 g^2;        theta -= lr g / (sqrt(v) + 1e-8)
// Adam:    m, v with betas 0.9 / 0.999;   theta -= lr m^ / (sqrt(v^) + 1e-8)
// with bias-corrected m^, v^. These are the stock framework defaults; only
// the learning rate is experiment-specific.
struct OptimizerState {
  OptKind kind = OptKind::rmsprop;
  double lr = 0.01;
  struct Slot {
    std::vector<double> m;  // adam first moment
    std::vector<double> v;  // squared-gradient accumulator
  };
  std::vector<Slot> slots;
  int64_t step_count = 0;
};

inline OptimizerState make_optimizer(OptKind kind, double lr, const std::vector<Tensor*>& params) {
  OptimizerState st;
  st.kind = kind;
  st.lr = lr;
  st.slots.resize(params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    st.slots[i].v.assign(params[i]->v.size(), 0.0);
    if (kind == OptKind::adam) st.slots[i].m.assign(params[i]->v.size(), 0.0);
  }
  return st;
}

inline void optimizer_step(OptimizerState& st, const std::vector<Tensor*>& params) {
  detail::require(st.slots.size() == params.size(), "optimizer_step: parameter list changed");
  constexpr double kEps = 1e-8;
  st.step_count += 1;
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& t = *params[i];
    auto& slot = st.slots[i];
    detail::require(slot.v.size() == t.v.size(), "optimizer_step: shape mismatch on tensor " + std::to_string(i));
    if (st.kind == OptKind::rmsprop) {
      for (size_t j = 0; j < t.v.size(); ++j) {
        const double g = t.g[j];
        slot.v[j] = 0.99 * slot.v[j] + 0.01 * g * g;
        t.v[j] -= st.lr * g / (std::sqrt(slot.v[j]) + kEps);
      }
    } else {
      constexpr double kBeta1 = 0.9, kBeta2 = 0.999;
      const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(st.step_count));
      const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(st.step_count));
      for (size_t j = 0; j < t.v.size(); ++j) {
        const double g = t.g[j];
        slot.m[j] = kBeta1 * slot.m[j] + (1.0 - kBeta1) * g;
        slot.v[j] = kBeta2 * slot.v[j] + (1.0 - kBeta2) * g * g;
        const double mhat = slot.m[j] / bc1;
        const double vhat = slot.v[j] / bc2;
        t.v[j] -= st.lr * mhat / (std::sqrt(vhat) + kEps);
      }
    }
  }
}

}  // namespace aliaslab
