#include "csr/csr_plus.hpp"

#include "csr/batch_kernel.hpp"

#include <algorithm>
#include <cmath>

#include "csr/error.hpp"
#include "csr/rng.hpp"

namespace csr {

AugmentPolicy AugmentPolicy::from_data(const Matrix& x, double weak_std, double strong_std, double mask_prob) {
    if (weak_std < 0.0 || strong_std < 0.0 || (strong_std > 0.0 && !(weak_std < strong_std)))
        throw ContractViolation("AugmentPolicy: need 0 <= weak_std < strong_std");
    if (!(mask_prob >= 0.0 && mask_prob < 1.0)) throw ContractViolation("AugmentPolicy: mask_prob must lie in [0, 1)");
    AugmentPolicy p;
    p.weak_std = weak_std;
    p.strong_std = strong_std;
    p.mask_prob = mask_prob;
    p.feature_mean.assign(x.cols, 0.0);
    p.feature_std.assign(x.cols, 0.0);
    if (x.rows == 0) return p;
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < x.cols; ++j) p.feature_mean[j] += x(i, j);
    for (double& m : p.feature_mean) m /= static_cast<double>(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < x.cols; ++j) {
            const double d = x(i, j) - p.feature_mean[j];
            p.feature_std[j] += d * d;
        }
    for (double& s : p.feature_std) s = std::sqrt(s / static_cast<double>(x.rows));
    return p;
}

std::vector<double> AugmentPolicy::weak(std::span<const double> x, std::mt19937_64& rng) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> out(x.begin(), x.end());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += weak_std * feature_std[j] * normal(rng);
    return out;
}

std::vector<double> AugmentPolicy::strong(std::span<const double> x, std::mt19937_64& rng) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<double> out(x.begin(), x.end());
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] += strong_std * feature_std[j] * normal(rng);
        if (coin(rng) < mask_prob) out[j] = feature_mean[j];
    }
    return out;
}

double consistency_loss(const Mlp& model, std::span<const double> x_strong, std::span<const double> y) {
    return ce_loss(forward(model, x_strong), y);
}

MixedSample mixup(std::span<const double> x_i, std::span<const double> y_i, std::span<const double> x_j,
                  std::span<const double> y_j, double delta) {
    if (x_i.size() != x_j.size() || y_i.size() != y_j.size()) throw ContractViolation("mixup: shape mismatch");
    if (!(delta >= 0.0 && delta <= 1.0)) throw ContractViolation("mixup: delta must lie in [0, 1]");
    MixedSample m{std::vector<double>(x_i.size()), std::vector<double>(y_i.size())};
    for (std::size_t k = 0; k < x_i.size(); ++k) m.x[k] = delta * x_i[k] + (1.0 - delta) * x_j[k];
    for (std::size_t k = 0; k < y_i.size(); ++k) m.y[k] = delta * y_i[k] + (1.0 - delta) * y_j[k];
    return m;
}

double mixup_loss(const Mlp& model, const MixedSample& mixed) { return soft_ce_loss(forward(model, mixed.x), mixed.y); }

double sample_beta(std::mt19937_64& rng, double alpha) {
    std::gamma_distribution<double> gamma(alpha, 1.0);
    const double a = gamma(rng), b = gamma(rng);
    return a + b > 0.0 ? a / (a + b) : 0.5;
}

double overall_loss(double l_csr, double l_cr, double l_mix, double alpha) { return l_csr + alpha * (l_cr + l_mix); }

double alpha_ramp(int epoch, int total_epochs) {
    if (total_epochs <= 0) throw ContractViolation("alpha_ramp: total_epochs must be positive");
    return std::clamp(static_cast<double>(epoch) / static_cast<double>(total_epochs), 0.0, 1.0);
}

std::vector<double> combine_predictions(std::span<const double> p_w, std::span<const double> p_s, double eps) {
    if (p_w.size() != p_s.size()) throw ContractViolation("combine_predictions: length mismatch");
    std::vector<double> out(p_w.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = eps * p_w[k] + (1.0 - eps) * p_s[k];
    return out;
}

double dynamic_threshold(double phi_ws, CorrectionRule rule) {
    constexpr double offset = 0.5, cap = 0.99;
    return rule == CorrectionRule::capped ? std::min(phi_ws + offset, cap) : std::max(phi_ws + offset, cap);
}

void CorrectionState::observe(std::size_t i, std::span<const double> p_ws) {
    const double top = *std::max_element(p_ws.begin(), p_ws.end());
    if (!seen[i]) {
        phi_ws[i] = top;
        seen[i] = true;
    } else {
        phi_ws[i] = momentum * phi_ws[i] + (1.0 - momentum) * top;
    }
}

std::vector<Correction> correct_labels(std::span<const std::size_t> candidates, const Matrix& p_ws,
                                       const CorrectionState& state) {
    std::vector<Correction> out;
    for (std::size_t i : candidates) {
        const auto p = p_ws.row(i);
        const double phi = dynamic_threshold(state.phi_ws[i], state.rule);
        const double gate = state.rule == CorrectionRule::capped ? *std::max_element(p.begin(), p.end())
                                                                 : *std::min_element(p.begin(), p.end());
        if (gate > phi) out.push_back({i, static_cast<int>(argmax(p))});
    }
    return out;
}

PlusRuntime::PlusRuntime(const Dataset& train_set, const TrainConfig& config)
    : train_(train_set),
      config_(config),
      warmup_(config.resolved_warmup(train_set.num_classes)),
      policy_(AugmentPolicy::from_data(train_set.x, config.weak_std, config.strong_std, config.mask_prob)),
      correction_(train_set.size(), config.correction_momentum, config.correction_rule),
      pseudo_(train_set.size(), -1),
      in_clean_(train_set.size(), 0),
      in_hard_(train_set.size(), 0),
      aug_rng_(make_rng(config.seed, Stream::augment)),
      mix_rng_(make_rng(config.seed, Stream::mixup)) {}

bool PlusRuntime::begin_epoch(int epoch, std::span<const double> sample_losses, const NoiseParams& noise,
                              RunLog& log) {
    alpha_ = config_.plus_alpha.value_or(alpha_ramp(epoch, config_.epochs));
    const auto universe = full_range(train_.size());
    const auto s_loss = small_loss_select(sample_losses, config_.sigma);
    const auto s_u = small_u_select(noise, train_.y, config_.sigma);
    partition_ = joint_partition(s_loss, s_u, universe);

    // Corrected samples join the clean set with their pseudo-labels.
    bool any_pseudo = std::any_of(pseudo_.begin(), pseudo_.end(), [](int l) { return l >= 0; });
    if (any_pseudo) {
        auto drop = [&](IndexSet& s) {
            s.erase(std::remove_if(s.begin(), s.end(), [&](std::size_t i) { return pseudo_[i] >= 0; }), s.end());
        };
        drop(partition_.hard);
        drop(partition_.noisy);
        for (std::size_t i = 0; i < pseudo_.size(); ++i)
            if (pseudo_[i] >= 0 && !std::binary_search(partition_.clean.begin(), partition_.clean.end(), i))
                partition_.clean.push_back(i);
        std::sort(partition_.clean.begin(), partition_.clean.end());
    }
    if (!is_exact_partition(partition_, universe)) throw std::logic_error("joint partition is not exact");

    std::fill(in_clean_.begin(), in_clean_.end(), 0);
    std::fill(in_hard_.begin(), in_hard_.end(), 0);
    for (auto i : partition_.clean) in_clean_[i] = 1;
    for (auto i : partition_.hard) in_hard_[i] = 1;

    if (extras_active() && partition_.clean.empty()) {
        log.warnings.push_back("epoch " + std::to_string(epoch) + ": empty clean set, CSR+ terms skipped");
        return false;
    }
    return true;
}

void PlusRuntime::primary_inputs(std::span<const std::size_t> batch, Matrix& out) {
    out = Matrix(batch.size(), train_.dim());
    for (std::size_t r = 0; r < batch.size(); ++r) {
        const auto x = train_.x.row(batch[r]);
        if (config_.plus_augment) {
            const auto w = policy_.weak(x, aug_rng_);
            std::copy(w.begin(), w.end(), out.row(r).begin());
        } else {
            std::copy(x.begin(), x.end(), out.row(r).begin());
        }
    }
}

void PlusRuntime::extra_rows(std::span<const std::size_t> batch, Matrix& inputs, Matrix& targets) {
    const std::size_t d = train_.dim();
    const std::size_t K = static_cast<std::size_t>(train_.num_classes);
    std::vector<std::vector<double>> xs, ys;
    auto view = [&](std::size_t i) -> std::vector<double> {
        const auto x = train_.x.row(i);
        return config_.plus_augment ? policy_.weak(x, aug_rng_) : std::vector<double>(x.begin(), x.end());
    };
    for (std::size_t i : batch) {
        const bool clean = in_clean_[i] != 0;
        const bool hard = in_hard_[i] != 0;
        if (clean && config_.plus_consistency) {
            const auto x = train_.x.row(i);
            xs.push_back(config_.plus_augment ? policy_.strong(x, aug_rng_) : std::vector<double>(x.begin(), x.end()));
            ys.push_back(one_hot(static_cast<std::size_t>(label_of(i)), K));
        }
        if ((clean || (hard && config_.plus_mix_hard)) && config_.plus_mixup) {
            const IndexSet& pool = clean ? partition_.clean : partition_.hard;
            std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
            const std::size_t j = pool[pick(mix_rng_)];
            const double delta = sample_beta(mix_rng_, config_.mix_alpha);
            const auto yi = one_hot(static_cast<std::size_t>(label_of(i)), K);
            const auto yj = one_hot(static_cast<std::size_t>(label_of(j)), K);
            auto m = mixup(view(i), yi, view(j), yj, delta);
            xs.push_back(std::move(m.x));
            ys.push_back(std::move(m.y));
        }
    }
    inputs = Matrix(xs.size(), d);
    targets = Matrix(ys.size(), K);
    for (std::size_t r = 0; r < xs.size(); ++r) {
        std::copy(xs[r].begin(), xs[r].end(), inputs.row(r).begin());
        std::copy(ys[r].begin(), ys[r].end(), targets.row(r).begin());
    }
}

void PlusRuntime::end_epoch(int epoch, const Mlp& model, EpochRecord& record) {
    record.n_clean = static_cast<long>(partition_.clean.size());
    record.n_hard = static_cast<long>(partition_.hard.size());
    record.n_noisy = static_cast<long>(partition_.noisy.size());
    if (!config_.plus_correction || epoch < warmup_ || record.fallback) return;

    const std::size_t N = train_.size(), d = train_.dim();
    Matrix weak_x(N, d), strong_x(N, d);
    for (std::size_t i = 0; i < N; ++i) {
        const auto x = train_.x.row(i);
        if (config_.plus_augment) {
            const auto w = policy_.weak(x, aug_rng_);
            const auto s = policy_.strong(x, aug_rng_);
            std::copy(w.begin(), w.end(), weak_x.row(i).begin());
            std::copy(s.begin(), s.end(), strong_x.row(i).begin());
        } else {
            std::copy(x.begin(), x.end(), weak_x.row(i).begin());
            std::copy(x.begin(), x.end(), strong_x.row(i).begin());
        }
    }
    const Matrix p_w = predict(model, weak_x);
    const Matrix p_s = predict(model, strong_x);
    Matrix p_ws(N, p_w.cols);
    for (std::size_t i = 0; i < N; ++i) {
        const auto c = combine_predictions(p_w.row(i), p_s.row(i), config_.correction_eps);
        std::copy(c.begin(), c.end(), p_ws.row(i).begin());
        correction_.observe(i, c);
    }

    // Candidates: this epoch's noisy set plus everything already pseudo-labeled.
    IndexSet candidates = partition_.noisy;
    for (std::size_t i = 0; i < N; ++i)
        if (pseudo_[i] >= 0) candidates.push_back(i);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    for (std::size_t i : candidates) pseudo_[i] = -1;
    for (const auto& c : correct_labels(candidates, p_ws, correction_)) pseudo_[c.index] = c.label;

    long corrected = 0, right = 0;
    for (std::size_t i = 0; i < N; ++i) {
        if (pseudo_[i] < 0) continue;
        ++corrected;
        if (train_.y_clean && pseudo_[i] == (*train_.y_clean)[i]) ++right;
    }
    record.n_corrected = corrected;
    if (corrected > 0 && train_.y_clean) record.corrected_acc = static_cast<double>(right) / static_cast<double>(corrected);
}

TrainResult train_plus(const Dataset& train_set, const Dataset& test_set, TrainConfig config) {
    config.method = Method::csr_plus;
    return train(train_set, test_set, config);
}

}  // namespace csr
