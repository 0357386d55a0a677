#pragma once

#include <cmath>
#include <vector>

#include "admgs/errors.hpp"
#include "admgs/registry.hpp"

namespace admgs {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-15;
};

template <class T>
struct AdamSlot {
  std::vector<T> m, v;
};

// Standard bias-corrected Adam on one tensor. `step` is the 1-based step
// count after this update.
template <class T>
void adam_update(T* params, const T* grads, std::size_t n, AdamSlot<T>& slot,
                 long long step, double lr, const AdamConfig& cfg = {}) {
  if (slot.m.size() != n) {
    slot.m.assign(n, T(0));
    slot.v.assign(n, T(0));
  }
  const T b1 = T(cfg.beta1), b2 = T(cfg.beta2);
  const T bc1 = T(1) - T(std::pow(cfg.beta1, double(step)));
  const T bc2 = T(1) - T(std::pow(cfg.beta2, double(step)));
  const T a = T(lr);
  for (std::size_t i = 0; i < n; ++i) {
    const T g = grads[i];
    slot.m[i] = b1 * slot.m[i] + (T(1) - b1) * g;
    slot.v[i] = b2 * slot.v[i] + (T(1) - b2) * g * g;
    const T mhat = slot.m[i] / bc1;
    const T vhat = slot.v[i] / bc2;
    params[i] -= a * mhat / (std::sqrt(vhat) + T(cfg.eps));
  }
}

// Optimizer state across a registry; slot i belongs to entry i.
template <class T>
struct AdamState {
  std::vector<AdamSlot<T>> slots;
  long long step = 0;
  AdamConfig config;

  void init(const ParamRegistry<T>& reg) {
    slots.clear();
    slots.resize(reg.entries.size());
    for (std::size_t i = 0; i < reg.entries.size(); ++i) {
      slots[i].m.assign(reg.entries[i].tensor->size(), T(0));
      slots[i].v.assign(reg.entries[i].tensor->size(), T(0));
    }
    step = 0;
  }
};

// One optimizer step over every trainable tensor; lr_of maps a registry
// entry to its learning rate (schedules applied by the caller).
template <class T, class LrFn>
void adam_step(ParamRegistry<T>& reg, AdamState<T>& state, LrFn&& lr_of) {
  if (state.slots.size() != reg.entries.size()) {
    throw ContractViolation("adam_step: state/registry size mismatch");
  }
  ++state.step;
  for (std::size_t i = 0; i < reg.entries.size(); ++i) {
    auto& e = reg.entries[i];
    if (!e.trainable) continue;
    adam_update(e.tensor->v.data(), e.tensor->g.data(), e.tensor->size(),
                state.slots[i], state.step, lr_of(e), state.config);
  }
}

}  // namespace admgs
