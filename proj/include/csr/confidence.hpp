#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "csr/matrix.hpp"

namespace csr {

// beta_t = (beta_init - 1) t / T + 1
double beta_schedule(int t, int total_epochs, double beta_init);

// Temporal ensemble of per-sample predictions.
struct EmaState {
    Matrix q;
    double beta_init = 0.7;
    int total_epochs = 1;
    int window = 0;
    bool initialized = false;  // set by the first update

    EmaState() = default;
    EmaState(std::size_t n, std::size_t k, double beta_init, int total_epochs, int window);
};

// q <- beta_t q + (1 - beta_t) q_new with rows renormalized. q starts
// uniform, so with beta_0 = 1 the first epoch leaves it unchanged.
void ema_update(EmaState& state, const Matrix& q_new, int t);

// Same recursion with an explicit momentum.
void ema_update_with_beta(EmaState& state, const Matrix& q_new, double beta);

// omega_i = 1 - minmax_normalize(CE(q_i, y_i)) over all samples; all ones if
// the losses do not vary.
std::vector<double> confidence_weights(const Matrix& q, std::span<const int> labels);

inline constexpr std::size_t kOmegaBins = 16;
std::array<int, kOmegaBins> omega_histogram(std::span<const double> omega);

}  // namespace csr
