#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace csr {

// Feedforward softmax classifier: tanh hidden layers, linear output layer.
//
// All parameters live in one flat buffer. Layer l stores its weight matrix
// (widths[l] x widths[l+1], row-major) followed by its bias vector.
class Mlp {
public:
    Mlp() = default;
    explicit Mlp(std::vector<std::size_t> widths);

    // He-style scaled normal init (std = sqrt(2 / fan_in)), zero biases.
    static Mlp random(std::vector<std::size_t> widths, std::uint64_t seed);

    std::size_t input_dim() const { return widths_.front(); }
    std::size_t num_classes() const { return widths_.back(); }
    std::size_t num_layers() const { return widths_.size() - 1; }
    std::size_t num_params() const { return params_.size(); }
    const std::vector<std::size_t>& widths() const { return widths_; }

    std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
    std::size_t bias_offset(std::size_t layer) const {
        return offsets_[layer] + widths_[layer] * widths_[layer + 1];
    }

    std::span<double> params() { return params_; }
    std::span<const double> params() const { return params_; }

    bool operator==(const Mlp&) const = default;

private:
    std::vector<std::size_t> widths_;
    std::vector<std::size_t> offsets_;
    std::vector<double> params_;
};

// Gradient buffer congruent with Mlp::params().
struct GradientSet {
    std::vector<double> values;

    GradientSet() = default;
    explicit GradientSet(const Mlp& model) : values(model.num_params(), 0.0) {}

    void clear() { std::fill(values.begin(), values.end(), 0.0); }
    double l1() const;
};

// Per-sample forward state kept for backpropagation.
struct Activations {
    std::vector<std::vector<double>> layers;  // [0] = input, hidden post-tanh, back() = logits
    std::vector<double> probs;
};

std::vector<double> softmax(std::span<const double> logits);

void forward(const Mlp& model, std::span<const double> x, Activations& acts);
std::vector<double> forward(const Mlp& model, std::span<const double> x);

// Accumulates d(loss)/d(params) into grad given d(loss)/d(logits).
void backward(const Mlp& model, const Activations& acts, std::span<const double> dlogits,
              std::span<double> grad);

// Chain rule through softmax: returns d/d(logits) from d/d(probs).
std::vector<double> softmax_backward(std::span<const double> probs, std::span<const double> dprobs);

inline constexpr double kProbFloor = 1e-12;

// -sum y_k log p_k with p clamped to [1e-12, 1]. y must be one-hot.
double ce_loss(std::span<const double> p, std::span<const double> y);

// Same with a soft target (any probability vector), used for mixed labels.
double soft_ce_loss(std::span<const double> p, std::span<const double> y);

// sum_k (p_k - y_k)^2, un-averaged over classes.
double mse_loss(std::span<const double> p, std::span<const double> y);

std::vector<double> one_hot(std::size_t label, std::size_t num_classes);
std::size_t argmax(std::span<const double> v);  // lowest index wins ties

bool is_one_hot(std::span<const double> y);

// w <- w - lr * (g + weight_decay * w). Throws NonFiniteError if g has NaN/Inf.
void sgd_step(Mlp& model, const GradientSet& grads, double lr, double weight_decay, int epoch = -1);

// Loss evaluator used by grad_check: returns the loss and, when grads is not
// null, writes the analytic gradient w.r.t. the model parameters.
using LossFn = std::function<double(const Mlp& model, GradientSet* grads)>;

// Max over parameters of |analytic - numeric| / max(1e-4, |analytic|, |numeric|)
// using central differences with step eps.
double grad_check(const Mlp& model, const LossFn& loss, double eps);

}  // namespace csr
