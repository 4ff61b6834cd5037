#include "csr/noise.hpp"

#include <cmath>
#include <random>

#include "csr/error.hpp"
#include "csr/model.hpp"
#include "csr/rng.hpp"

namespace csr {

NoiseParams NoiseParams::init(std::size_t n, std::size_t k, double init_scale, std::uint64_t seed) {
    if (init_scale < 0.0) throw ContractViolation("NoiseParams: init_scale must be >= 0");
    NoiseParams np{Matrix(n, k), Matrix(n, k), init_scale};
    if (init_scale == 0.0) return np;
    auto rng = make_rng(seed, Stream::noise_init);
    std::uniform_real_distribution<double> dist(-init_scale, init_scale);
    for (double& x : np.u.data) x = dist(rng);
    for (double& x : np.v.data) x = dist(rng);
    return np;
}

std::vector<double> build_s(std::span<const double> u, std::span<const double> v, std::span<const double> y) {
    if (u.size() != y.size() || v.size() != y.size()) throw ContractViolation("build_s: length mismatch");
    std::vector<double> s(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) s[k] = u[k] * u[k] * y[k] - v[k] * v[k] * (1.0 - y[k]);
    return s;
}

CorrectedPrediction corrected_prediction(std::span<const double> f, const Matrix& mbar, std::span<const double> s) {
    const std::size_t K = f.size();
    if (mbar.rows != K || mbar.cols != K || s.size() != K)
        throw ContractViolation("corrected_prediction: shape mismatch");
    CorrectedPrediction out;
    out.t.assign(K, 0.0);
    out.floored.assign(K, false);
    for (std::size_t j = 0; j < K; ++j) {
        const double fj = f[j];
        const double* mr = mbar.data.data() + j * K;
        for (std::size_t k = 0; k < K; ++k) out.t[k] += fj * mr[k];
    }
    bool any_positive = false;
    for (std::size_t k = 0; k < K; ++k) {
        out.t[k] += s[k];
        if (out.t[k] > 0.0) any_positive = true;
        if (out.t[k] < kProbFloor) {
            out.t[k] = kProbFloor;
            out.floored[k] = true;
        }
    }
    if (!any_positive) throw DegenerateError("corrected_prediction: all entries non-positive");
    for (double x : out.t) out.total += x;
    out.p.resize(K);
    for (std::size_t k = 0; k < K; ++k) out.p[k] = out.t[k] / out.total;
    return out;
}

namespace {

// onehot(f) * Mbar is the argmax row of Mbar.
std::vector<double> hard_times_mbar(std::span<const double> f, const Matrix& mbar) {
    const auto row = mbar.row(argmax(f));
    return {row.begin(), row.end()};
}

}  // namespace

SampleLosses csr_sample_losses(std::span<const double> f, const Matrix& mbar, std::span<const double> s,
                               std::span<const double> y) {
    const auto cp = corrected_prediction(f, mbar, s);
    SampleLosses out;
    out.ce = ce_loss(cp.p, y);
    auto h = hard_times_mbar(f, mbar);
    for (std::size_t k = 0; k < h.size(); ++k) h[k] += s[k];
    out.mse = mse_loss(h, y);
    return out;
}

SampleGradients csr_sample_gradients(std::span<const double> f, const Matrix& mbar, std::span<const double> u,
                                     std::span<const double> v, std::span<const double> y, bool with_mbar) {
    const std::size_t K = f.size();
    if (!is_one_hot(y)) throw ContractViolation("csr_sample_gradients: target is not one-hot");
    const auto s = build_s(u, v, y);
    const auto cp = corrected_prediction(f, mbar, s);
    const std::size_t label = argmax(y);

    SampleGradients g;
    g.ce = ce_loss(cp.p, y);

    // dL/dt for L = -log(t_y / sum t); zero where the floor is active.
    std::vector<double> dt(K, 0.0);
    if (cp.p[label] >= kProbFloor) {
        for (std::size_t k = 0; k < K; ++k) {
            if (cp.floored[k]) continue;
            dt[k] = 1.0 / cp.total;
            if (k == label) dt[k] -= 1.0 / cp.t[k];
        }
    }

    g.d_f.assign(K, 0.0);
    for (std::size_t j = 0; j < K; ++j) {
        const double* mr = mbar.data.data() + j * K;
        double acc = 0.0;
        for (std::size_t k = 0; k < K; ++k) acc += mr[k] * dt[k];
        g.d_f[j] = acc;
    }
    if (with_mbar) {
        g.d_mbar = Matrix(K, K);
        for (std::size_t j = 0; j < K; ++j)
            for (std::size_t k = 0; k < K; ++k) g.d_mbar(j, k) = f[j] * dt[k];
    }
    g.d_u.assign(K, 0.0);
    g.d_u[label] = dt[label] * 2.0 * u[label];

    auto r = hard_times_mbar(f, mbar);
    for (std::size_t k = 0; k < K; ++k) r[k] += s[k] - y[k];
    g.mse = 0.0;
    g.d_v.assign(K, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        g.mse += r[k] * r[k];
        g.d_v[k] = 2.0 * r[k] * (-2.0 * v[k] * (1.0 - y[k]));
    }
    return g;
}

void update_noise_params(NoiseParams& noise, const Matrix& grad_u, const Matrix& grad_v, double lr_u, double lr_v,
                         std::span<const double> weights, int epoch) {
    const std::size_t N = noise.u.rows, K = noise.u.cols;
    if (grad_u.rows != N || grad_u.cols != K || grad_v.rows != N || grad_v.cols != K || weights.size() != N)
        throw ContractViolation("update_noise_params: shape mismatch");
    for (std::size_t i = 0; i < N; ++i) {
        const double scale = 1.0 - weights[i];
        for (std::size_t k = 0; k < K; ++k) {
            double& ui = noise.u(i, k);
            double& vi = noise.v(i, k);
            ui -= lr_u * scale * grad_u(i, k);
            vi -= lr_v * scale * grad_v(i, k);
            if (!std::isfinite(ui) || !std::isfinite(vi)) throw NonFiniteError("non-finite noise parameter", epoch);
        }
    }
}

bool s_sign_pattern_holds(const NoiseParams& noise, std::span<const int> labels) {
    const std::size_t K = noise.u.cols;
    for (std::size_t i = 0; i < noise.u.rows; ++i) {
        const auto y = one_hot(static_cast<std::size_t>(labels[i]), K);
        const auto s = build_s(noise.u.row(i), noise.v.row(i), y);
        for (std::size_t k = 0; k < K; ++k) {
            if (y[k] == 1.0 && s[k] < 0.0) return false;
            if (y[k] == 0.0 && s[k] > 0.0) return false;
        }
    }
    return true;
}

}  // namespace csr
