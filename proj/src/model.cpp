#include "csr/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "csr/error.hpp"
#include "csr/rng.hpp"

namespace csr {

Mlp::Mlp(std::vector<std::size_t> widths) : widths_(std::move(widths)) {
    if (widths_.size() < 2) throw ContractViolation("Mlp needs at least input and output widths");
    for (auto w : widths_)
        if (w == 0) throw ContractViolation("Mlp layer width must be positive");
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
        offsets_.push_back(total);
        total += widths_[l] * widths_[l + 1] + widths_[l + 1];
    }
    params_.assign(total, 0.0);
}

Mlp Mlp::random(std::vector<std::size_t> widths, std::uint64_t seed) {
    Mlp m(std::move(widths));
    auto rng = make_rng(seed, Stream::model_init);
    for (std::size_t l = 0; l < m.num_layers(); ++l) {
        const std::size_t fan_in = m.widths_[l];
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
        const std::size_t n = fan_in * m.widths_[l + 1];
        for (std::size_t i = 0; i < n; ++i) m.params_[m.weight_offset(l) + i] = dist(rng);
    }
    return m;
}

double GradientSet::l1() const {
    double s = 0.0;
    for (double g : values) s += std::abs(g);
    return s;
}

std::vector<double> softmax(std::span<const double> logits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double z = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        p[k] = std::exp(logits[k] - mx);
        z += p[k];
    }
    for (double& v : p) v /= z;
    return p;
}

void forward(const Mlp& model, std::span<const double> x, Activations& acts) {
    if (x.size() != model.input_dim())
        throw ContractViolation("forward: input has " + std::to_string(x.size()) + " features, model expects " +
                                std::to_string(model.input_dim()));
    const auto& widths = model.widths();
    const auto params = model.params();
    const std::size_t L = model.num_layers();
    acts.layers.resize(L + 1);
    acts.layers[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t din = widths[l], dout = widths[l + 1];
        const double* W = params.data() + model.weight_offset(l);
        const double* b = params.data() + model.bias_offset(l);
        const auto& in = acts.layers[l];
        auto& out = acts.layers[l + 1];
        out.assign(b, b + dout);
        for (std::size_t i = 0; i < din; ++i) {
            const double xi = in[i];
            const double* wr = W + i * dout;
            for (std::size_t j = 0; j < dout; ++j) out[j] += xi * wr[j];
        }
        if (l + 1 < L)
            for (double& v : out) v = std::tanh(v);
    }
    acts.probs = softmax(acts.layers[L]);
}

std::vector<double> forward(const Mlp& model, std::span<const double> x) {
    Activations acts;
    forward(model, x, acts);
    return acts.probs;
}

void backward(const Mlp& model, const Activations& acts, std::span<const double> dlogits,
              std::span<double> grad) {
    const auto& widths = model.widths();
    const auto params = model.params();
    const std::size_t L = model.num_layers();
    std::vector<double> delta(dlogits.begin(), dlogits.end());
    std::vector<double> prev;
    for (std::size_t l = L; l-- > 0;) {
        const std::size_t din = widths[l], dout = widths[l + 1];
        const double* W = params.data() + model.weight_offset(l);
        double* gW = grad.data() + model.weight_offset(l);
        double* gb = grad.data() + model.bias_offset(l);
        const auto& in = acts.layers[l];
        for (std::size_t j = 0; j < dout; ++j) gb[j] += delta[j];
        for (std::size_t i = 0; i < din; ++i) {
            const double xi = in[i];
            double* gr = gW + i * dout;
            for (std::size_t j = 0; j < dout; ++j) gr[j] += xi * delta[j];
        }
        if (l == 0) break;
        prev.assign(din, 0.0);
        for (std::size_t i = 0; i < din; ++i) {
            const double* wr = W + i * dout;
            double s = 0.0;
            for (std::size_t j = 0; j < dout; ++j) s += wr[j] * delta[j];
            const double a = in[i];  // tanh output of layer l-1
            prev[i] = s * (1.0 - a * a);
        }
        delta.swap(prev);
    }
}

std::vector<double> softmax_backward(std::span<const double> probs, std::span<const double> dprobs) {
    double dot = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) dot += probs[k] * dprobs[k];
    std::vector<double> dz(probs.size());
    for (std::size_t k = 0; k < probs.size(); ++k) dz[k] = probs[k] * (dprobs[k] - dot);
    return dz;
}

bool is_one_hot(std::span<const double> y) {
    int ones = 0;
    for (double v : y) {
        if (v == 1.0) ++ones;
        else if (v != 0.0) return false;
    }
    return ones == 1;
}

double ce_loss(std::span<const double> p, std::span<const double> y) {
    if (p.size() != y.size()) throw ContractViolation("ce_loss: length mismatch");
    if (!is_one_hot(y)) throw ContractViolation("ce_loss: target is not one-hot");
    return soft_ce_loss(p, y);
}

double soft_ce_loss(std::span<const double> p, std::span<const double> y) {
    if (p.size() != y.size()) throw ContractViolation("soft_ce_loss: length mismatch");
    double loss = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k)
        if (y[k] != 0.0) loss -= y[k] * std::log(std::clamp(p[k], kProbFloor, 1.0));
    return loss;
}

double mse_loss(std::span<const double> p, std::span<const double> y) {
    if (p.size() != y.size()) throw ContractViolation("mse_loss: length mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double d = p[k] - y[k];
        s += d * d;
    }
    return s;
}

std::vector<double> one_hot(std::size_t label, std::size_t num_classes) {
    if (label >= num_classes) throw ContractViolation("one_hot: label out of range");
    std::vector<double> y(num_classes, 0.0);
    y[label] = 1.0;
    return y;
}

std::size_t argmax(std::span<const double> v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

void sgd_step(Mlp& model, const GradientSet& grads, double lr, double weight_decay, int epoch) {
    if (lr < 0.0 || weight_decay < 0.0) throw ContractViolation("sgd_step: lr and weight_decay must be >= 0");
    auto w = model.params();
    if (grads.values.size() != w.size()) throw ContractViolation("sgd_step: gradient shape mismatch");
    for (double g : grads.values)
        if (!std::isfinite(g)) throw NonFiniteError("non-finite model gradient", epoch);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * (grads.values[i] + weight_decay * w[i]);
}

double grad_check(const Mlp& model, const LossFn& loss, double eps) {
    if (eps < 1e-7 || eps > 1e-4) throw ContractViolation("grad_check: eps must lie in [1e-7, 1e-4]");
    GradientSet analytic(model);
    loss(model, &analytic);
    Mlp probe = model;
    auto w = probe.params();
    double worst = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double w0 = w[i];
        w[i] = w0 + eps;
        const double up = loss(probe, nullptr);
        w[i] = w0 - eps;
        const double down = loss(probe, nullptr);
        w[i] = w0;
        const double numeric = (up - down) / (2.0 * eps);
        const double a = analytic.values[i];
        worst = std::max(worst, std::abs(a - numeric) / std::max({1e-4, std::abs(a), std::abs(numeric)}));
    }
    return worst;
}

}  // namespace csr
