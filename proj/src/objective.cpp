#include "csr/objective.hpp"

#include <algorithm>

#include "csr/error.hpp"
#include "csr/noise.hpp"

namespace csr {

BatchObjective csr_batch_objective(const Mlp& model, const Matrix& inputs, const Matrix& targets, const Matrix* u,
                                   const Matrix* v, const Matrix* mbar, std::span<const double> weights,
                                   BatchGradientKernel& kernel, GradientSet& d_theta) {
    const std::size_t B = inputs.rows;
    const std::size_t K = model.num_classes();
    if (targets.rows != B || targets.cols != K) throw ContractViolation("csr_batch_objective: target shape mismatch");
    if ((u && (u->rows != B || u->cols != K)) || (v && (v->rows != B || v->cols != K)))
        throw ContractViolation("csr_batch_objective: noise rows do not match the batch");
    if (!weights.empty() && weights.size() != B) throw ContractViolation("csr_batch_objective: weight count mismatch");
    if (B == 0) return {};

    const Matrix identity = mbar ? Matrix() : Matrix::identity(K);
    const Matrix& m = mbar ? *mbar : identity;
    const std::vector<double> zeros(K, 0.0);
    const double inv_b = 1.0 / static_cast<double>(B);

    BatchObjective out;
    out.d_u = Matrix(B, K);
    out.d_v = Matrix(B, K);
    std::vector<double> ce(B), mse(B);
    std::vector<double> dm(mbar ? B * K * K : 0);

    const LossHead head = [&](std::size_t r, const Activations& acts, std::span<double> dlogits) {
        const auto ur = u ? u->row(r) : std::span<const double>(zeros);
        const auto vr = v ? v->row(r) : std::span<const double>(zeros);
        const auto g = csr_sample_gradients(acts.probs, m, ur, vr, targets.row(r), mbar != nullptr);
        const double w = weights.empty() ? 1.0 : weights[r];
        const auto dz = softmax_backward(acts.probs, g.d_f);
        for (std::size_t k = 0; k < K; ++k) dlogits[k] = dz[k] * (w * inv_b);
        ce[r] = g.ce;
        mse[r] = g.mse;
        for (std::size_t k = 0; k < K; ++k) {
            out.d_u(r, k) = g.d_u[k] * inv_b;
            out.d_v(r, k) = g.d_v[k] * inv_b;
        }
        if (mbar) std::copy(g.d_mbar.data.begin(), g.d_mbar.data.end(), dm.begin() + static_cast<std::ptrdiff_t>(r * K * K));
    };
    kernel.accumulate(model, inputs, head, d_theta);

    // Row-order reductions keep the result independent of the thread count.
    for (std::size_t r = 0; r < B; ++r) {
        out.ce_sum += ce[r];
        out.mse_sum += mse[r];
    }
    if (mbar) {
        out.d_mbar = Matrix(K, K);
        for (std::size_t r = 0; r < B; ++r) {
            const double s = (weights.empty() ? 1.0 : weights[r]) * inv_b;
            for (std::size_t e = 0; e < K * K; ++e) out.d_mbar.data[e] += dm[r * K * K + e] * s;
        }
    }
    return out;
}

}  // namespace csr
