#include "csr/confidence.hpp"

#include <algorithm>
#include <cmath>

#include "csr/error.hpp"
#include "csr/model.hpp"

namespace csr {

double beta_schedule(int t, int total_epochs, double beta_init) {
    if (total_epochs <= 0 || t < 0 || t > total_epochs) throw ContractViolation("beta_schedule: need 0 <= t <= T, T > 0");
    return (beta_init - 1.0) * static_cast<double>(t) / static_cast<double>(total_epochs) + 1.0;
}

EmaState::EmaState(std::size_t n, std::size_t k, double beta_init_, int total_epochs_, int window_)
    : q(n, k, k ? 1.0 / static_cast<double>(k) : 0.0),
      beta_init(beta_init_),
      total_epochs(total_epochs_),
      window(window_) {}

void ema_update_with_beta(EmaState& state, const Matrix& q_new, double beta) {
    if (q_new.rows != state.q.rows || q_new.cols != state.q.cols) throw ContractViolation("ema_update: shape mismatch");
    state.initialized = true;
    if (beta == 1.0) return;
    for (std::size_t i = 0; i < state.q.rows; ++i) {
        auto row = state.q.row(i);
        const auto fresh = q_new.row(i);
        double total = 0.0;
        for (std::size_t k = 0; k < row.size(); ++k) {
            row[k] = beta * row[k] + (1.0 - beta) * fresh[k];
            total += row[k];
        }
        for (double& x : row) x /= total;
    }
}

void ema_update(EmaState& state, const Matrix& q_new, int t) {
    const int clamped = std::min(t, state.total_epochs);
    ema_update_with_beta(state, q_new, beta_schedule(clamped, state.total_epochs, state.beta_init));
}

std::vector<double> confidence_weights(const Matrix& q, std::span<const int> labels) {
    if (labels.size() != q.rows) throw ContractViolation("confidence_weights: label count mismatch");
    const std::size_t N = q.rows;
    std::vector<double> loss(N);
    for (std::size_t i = 0; i < N; ++i) {
        const auto row = q.row(i);
        const auto y = static_cast<std::size_t>(labels[i]);
        if (y >= q.cols) throw ContractViolation("confidence_weights: label out of range");
        loss[i] = -std::log(std::clamp(row[y], kProbFloor, 1.0));
    }
    std::vector<double> omega(N, 1.0);
    if (N == 0) return omega;
    const auto [lo_it, hi_it] = std::minmax_element(loss.begin(), loss.end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi == lo) return omega;
    for (std::size_t i = 0; i < N; ++i) omega[i] = 1.0 - (loss[i] - lo) / (hi - lo);
    return omega;
}

std::array<int, kOmegaBins> omega_histogram(std::span<const double> omega) {
    std::array<int, kOmegaBins> h{};
    for (double w : omega) {
        auto b = static_cast<std::size_t>(std::clamp(w, 0.0, 1.0) * static_cast<double>(kOmegaBins));
        ++h[std::min(b, kOmegaBins - 1)];
    }
    return h;
}

}  // namespace csr
