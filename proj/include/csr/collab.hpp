#pragma once

#include <cstddef>

#include "csr/matrix.hpp"

namespace csr {

// Learnable K x K collaboration matrix shared by all samples, with its
// learnable normalization scale gamma.
struct CollabState {
    Matrix m;
    double gamma = 1.0;
    double lr_m = 0.001;
    double lr_gamma = 0.001;

    static CollabState init(std::size_t k, double lr_m, double lr_gamma);
};

// Flat index of the smallest entry; lowest index on ties.
std::size_t argmin_entry(const Matrix& m);

// Mbar = (M - min(M)) / (gamma - min(M)). Throws DegenerateError when
// gamma <= min(M) + 1e-9.
Matrix normalize_matrix(const CollabState& state);

struct CollabGradient {
    Matrix d_m;
    double d_gamma = 0.0;
};

// Pulls dL/dMbar back through the normalization. min(M) is differentiated
// through its argmin entry.
CollabGradient collab_gradient(const CollabState& state, const Matrix& d_mbar);

// Plain SGD step on M and gamma. If the step leaves gamma <= min(M), gamma
// is clipped to min(M) + 1e-6 and true is returned so the caller can log it.
bool update_collab(CollabState& state, const Matrix& grad_m, double grad_gamma);

double diag_mean(const Matrix& m);

}  // namespace csr
