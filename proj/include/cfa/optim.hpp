#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cfa {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// First/second moment buffers for one parameter tensor.
struct AdamSlot {
    std::vector<double> m;
    std::vector<double> v;

    explicit AdamSlot(std::size_t size) : m(size, 0.0), v(size, 0.0) {}
};

// One bias-corrected Adam update; `t` is the 1-based step count.
void adam_step(std::span<double> params, std::span<const double> grads,
               AdamSlot& slot, std::size_t t, double lr,
               const AdamConfig& cfg = {});

}  // namespace cfa
