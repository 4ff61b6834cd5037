#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "csr/dataset.hpp"
#include "csr/model.hpp"
#include "csr/selection.hpp"
#include "csr/trainer.hpp"

namespace csr {

// Vector-data stand-ins for weak/strong image augmentation: Gaussian jitter
// scaled by the per-feature std, plus random feature masking (to the feature
// mean) for the strong view.
struct AugmentPolicy {
    std::vector<double> feature_mean;
    std::vector<double> feature_std;
    double weak_std = 0.05;
    double strong_std = 0.2;
    double mask_prob = 0.2;

    static AugmentPolicy from_data(const Matrix& x, double weak_std, double strong_std, double mask_prob);

    std::vector<double> weak(std::span<const double> x, std::mt19937_64& rng) const;
    std::vector<double> strong(std::span<const double> x, std::mt19937_64& rng) const;
};

// CE of the model on a strongly augmented input.
double consistency_loss(const Mlp& model, std::span<const double> x_strong, std::span<const double> y);

struct MixedSample {
    std::vector<double> x;
    std::vector<double> y;
};

// x = d x_i + (1 - d) x_j, y = d y_i + (1 - d) y_j.
MixedSample mixup(std::span<const double> x_i, std::span<const double> y_i, std::span<const double> x_j,
                  std::span<const double> y_j, double delta);

double mixup_loss(const Mlp& model, const MixedSample& mixed);

// Draw from Beta(alpha, alpha).
double sample_beta(std::mt19937_64& rng, double alpha);

// L_csr + alpha (L_cr + L_mix).
double overall_loss(double l_csr, double l_cr, double l_mix, double alpha);

// Linear 0 -> 1 over training.
double alpha_ramp(int epoch, int total_epochs);

// eps p_w + (1 - eps) p_s.
std::vector<double> combine_predictions(std::span<const double> p_w, std::span<const double> p_s, double eps);

double dynamic_threshold(double phi_ws, CorrectionRule rule = CorrectionRule::capped);

struct CorrectionState {
    std::vector<double> phi_ws;   // smoothed max(p_ws) per sample
    std::vector<bool> seen;
    double momentum = 0.9;
    CorrectionRule rule = CorrectionRule::capped;

    explicit CorrectionState(std::size_t n = 0, double momentum = 0.9, CorrectionRule rule = CorrectionRule::capped)
        : phi_ws(n, 0.0), seen(n, false), momentum(momentum), rule(rule) {}

    // phi_ws <- momentum phi_ws + (1 - momentum) max(p_ws); first visit adopts max(p_ws).
    void observe(std::size_t i, std::span<const double> p_ws);
};

struct Correction {
    std::size_t index;
    int label;
};

// For each candidate i: pseudo-label argmax(p_ws_i) when it clears the dynamic threshold.
std::vector<Correction> correct_labels(std::span<const std::size_t> candidates, const Matrix& p_ws,
                                       const CorrectionState& state);

// Per-run CSR+ machinery driven by the trainer: partition, augmentation,
// extra supervised rows and label correction.
class PlusRuntime {
public:
    PlusRuntime(const Dataset& train_set, const TrainConfig& config);

    // Builds this epoch's partition. Returns false if the epoch has to fall
    // back to warm-up behaviour (extra losses active but no clean samples).
    bool begin_epoch(int epoch, std::span<const double> sample_losses, const NoiseParams& noise, RunLog& log);

    bool extras_active() const { return alpha_ > 0.0 && (config_.plus_consistency || config_.plus_mixup); }
    double alpha() const { return alpha_; }

    // Inputs for the CSR rows of a batch (weakly augmented when enabled).
    void primary_inputs(std::span<const std::size_t> batch, Matrix& out);

    // Consistency and Mixup rows for a batch with their soft targets.
    void extra_rows(std::span<const std::size_t> batch, Matrix& inputs, Matrix& targets);

    // Pseudo-labels the noisy set from weak/strong predictions.
    void end_epoch(int epoch, const Mlp& model, EpochRecord& record);

    const SamplePartition& partition() const { return partition_; }
    const std::vector<int>& pseudo_labels() const { return pseudo_; }

private:
    int label_of(std::size_t i) const { return pseudo_[i] >= 0 ? pseudo_[i] : train_.y[i]; }

    const Dataset& train_;
    TrainConfig config_;
    int warmup_;
    AugmentPolicy policy_;
    CorrectionState correction_;
    std::vector<int> pseudo_;
    SamplePartition partition_;
    std::vector<char> in_clean_, in_hard_;
    double alpha_ = 0.0;
    std::mt19937_64 aug_rng_;
    std::mt19937_64 mix_rng_;
};

// CSR+ training: config.method is forced to Method::csr_plus.
TrainResult train_plus(const Dataset& train_set, const Dataset& test_set, TrainConfig config);

}  // namespace csr
