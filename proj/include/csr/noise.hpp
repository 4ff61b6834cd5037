#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "csr/matrix.hpp"

namespace csr {

// Per-sample over-parameterized label-noise vectors. u carries the noise
// identification term (labeled class), v the recovery term (other classes).
struct NoiseParams {
    Matrix u;  // N x K
    Matrix v;  // N x K
    double init_scale = 1e-8;

    // i.i.d. uniform in [-init_scale, init_scale].
    static NoiseParams init(std::size_t n, std::size_t k, double init_scale, std::uint64_t seed);
};

// s = u*u*y - v*v*(1 - y), elementwise.
std::vector<double> build_s(std::span<const double> u, std::span<const double> v, std::span<const double> y);

// t = f * Mbar + s, floored at 1e-12 and renormalized to sum 1.
struct CorrectedPrediction {
    std::vector<double> t;        // floored, before renormalization
    std::vector<double> p;        // renormalized
    std::vector<bool> floored;    // entries held at the floor
    double total = 0.0;           // sum of t
};

// Throws DegenerateError when every entry of f * Mbar + s is <= 0.
CorrectedPrediction corrected_prediction(std::span<const double> f, const Matrix& mbar, std::span<const double> s);

struct SampleLosses {
    double ce = 0.0;   // drives theta, u, M, gamma
    double mse = 0.0;  // drives v only
};

SampleLosses csr_sample_losses(std::span<const double> f, const Matrix& mbar, std::span<const double> s,
                               std::span<const double> y);

// Analytic gradients of both loss paths for one sample. The clamp in
// corrected_prediction is treated as constant where active; the one-hot
// transform in the MSE path is piecewise constant so it passes no gradient.
struct SampleGradients {
    double ce = 0.0;
    double mse = 0.0;
    std::vector<double> d_f;   // dL_ce / df
    Matrix d_mbar;             // dL_ce / dMbar (K x K), empty unless requested
    std::vector<double> d_u;   // dL_ce / du
    std::vector<double> d_v;   // dL_mse / dv
};

SampleGradients csr_sample_gradients(std::span<const double> f, const Matrix& mbar, std::span<const double> u,
                                     std::span<const double> v, std::span<const double> y, bool with_mbar);

// u_i <- u_i - lr_u (1 - w_i) grad_u_i ; v_i <- v_i - lr_v (1 - w_i) grad_v_i.
// Throws NonFiniteError if an updated entry is not finite.
void update_noise_params(NoiseParams& noise, const Matrix& grad_u, const Matrix& grad_v, double lr_u, double lr_v,
                         std::span<const double> weights, int epoch = -1);

// Sign structure of s implied by the parameterization: labeled entry >= 0,
// other entries <= 0, for every sample.
bool s_sign_pattern_holds(const NoiseParams& noise, std::span<const int> labels);

}  // namespace csr
