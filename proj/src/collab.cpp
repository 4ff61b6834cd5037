#include "csr/collab.hpp"

#include <algorithm>
#include <cmath>

#include "csr/error.hpp"

namespace csr {

CollabState CollabState::init(std::size_t k, double lr_m, double lr_gamma) {
    return CollabState{Matrix::identity(k), 1.0, lr_m, lr_gamma};
}

std::size_t argmin_entry(const Matrix& m) {
    return static_cast<std::size_t>(std::min_element(m.data.begin(), m.data.end()) - m.data.begin());
}

Matrix normalize_matrix(const CollabState& state) {
    const double lo = state.m.data[argmin_entry(state.m)];
    const double denom = state.gamma - lo;
    if (!(denom > 1e-9)) throw DegenerateError("normalize_matrix: gamma must exceed min(M)");
    Matrix out(state.m.rows, state.m.cols);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = (state.m.data[i] - lo) / denom;
    return out;
}

CollabGradient collab_gradient(const CollabState& state, const Matrix& d_mbar) {
    const std::size_t amin = argmin_entry(state.m);
    const double lo = state.m.data[amin];
    const double denom = state.gamma - lo;
    CollabGradient g{Matrix(state.m.rows, state.m.cols), 0.0};
    // Mbar_ab = (M_ab - lo) / D with D = gamma - lo.
    // dMbar_ab/dlo = (M_ab - lo) / D^2 - 1/D ; dMbar_ab/dgamma = -(M_ab - lo) / D^2.
    double d_lo = 0.0;
    for (std::size_t i = 0; i < d_mbar.data.size(); ++i) {
        const double centered = state.m.data[i] - lo;
        const double gi = d_mbar.data[i];
        g.d_m.data[i] = gi / denom;
        d_lo += gi * (centered / (denom * denom) - 1.0 / denom);
        g.d_gamma -= gi * centered / (denom * denom);
    }
    g.d_m.data[amin] += d_lo;
    return g;
}

bool update_collab(CollabState& state, const Matrix& grad_m, double grad_gamma) {
    if (grad_m.rows != state.m.rows || grad_m.cols != state.m.cols)
        throw ContractViolation("update_collab: gradient shape mismatch");
    for (std::size_t i = 0; i < state.m.data.size(); ++i) state.m.data[i] -= state.lr_m * grad_m.data[i];
    state.gamma -= state.lr_gamma * grad_gamma;
    const double lo = state.m.data[argmin_entry(state.m)];
    if (!(state.gamma > lo + 1e-9)) {
        state.gamma = lo + 1e-6;
        return true;
    }
    return false;
}

double diag_mean(const Matrix& m) {
    if (m.rows != m.cols || m.rows == 0) throw ContractViolation("diag_mean: matrix must be square");
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i) s += m(i, i);
    return s / static_cast<double>(m.rows);
}

}  // namespace csr
