#pragma once

#include <span>

#include "csr/batch_kernel.hpp"
#include "csr/matrix.hpp"
#include "csr/model.hpp"

namespace csr {

// One mini-batch of the corrected-prediction objective. With B rows and
// per-row weights w (all 1 when empty):
//   theta, Mbar : d/d. of (1/B) sum_r w_r CE_r
//   u           : d/d. of (1/B) sum_r CE_r
//   v           : d/d. of (1/B) sum_r MSE_r
struct BatchObjective {
    double ce_sum = 0.0;   // unweighted
    double mse_sum = 0.0;
    Matrix d_u;            // B x K
    Matrix d_v;            // B x K
    Matrix d_mbar;         // K x K, empty when mbar is null
};

// u, v: B x K rows of the noise parameters, or null for s = 0.
// mbar: normalized collaboration matrix, or null for the identity.
// The theta gradient is added to d_theta.
BatchObjective csr_batch_objective(const Mlp& model, const Matrix& inputs, const Matrix& targets, const Matrix* u,
                                   const Matrix* v, const Matrix* mbar, std::span<const double> weights,
                                   BatchGradientKernel& kernel, GradientSet& d_theta);

}  // namespace csr
