#include "cfa/optim.hpp"

#include <cassert>
#include <cmath>

namespace cfa {

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamSlot& slot, std::size_t t, double lr,
               const AdamConfig& cfg) {
    assert(params.size() == grads.size());
    assert(slot.m.size() == params.size());
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        double g = grads[i];
        slot.m[i] = cfg.beta1 * slot.m[i] + (1.0 - cfg.beta1) * g;
        slot.v[i] = cfg.beta2 * slot.v[i] + (1.0 - cfg.beta2) * g * g;
        double mhat = slot.m[i] / bc1;
        double vhat = slot.v[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

}  // namespace cfa
