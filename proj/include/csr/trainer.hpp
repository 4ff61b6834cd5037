#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "csr/collab.hpp"
#include "csr/confidence.hpp"
#include "csr/dataset.hpp"
#include "csr/model.hpp"
#include "csr/noise.hpp"

namespace csr {

enum class Method { plain_ce, sop, csr, csr_plus };

std::string to_string(Method m);
Method parse_method(const std::string& name);

// Which dynamic-threshold reading the label corrector uses.
enum class CorrectionRule {
    capped,   // phi = min(phi_ws + 0.5, 0.99), gate on max(p_ws)
    literal,  // phi = max(phi_ws + 0.5, 0.99), gate on min(p_ws)
};

struct TrainConfig {
    Method method = Method::csr;
    int epochs = 100;
    int batch_size = 64;
    std::vector<std::size_t> hidden{32, 32};
    double lr = 0.05;
    double weight_decay = 5e-4;
    std::optional<double> lr_u;      // default 10 * lr
    std::optional<double> lr_v;      // default 100 * lr
    double tau_m = 0.001;
    std::optional<double> lr_gamma;  // default tau_m
    double beta_init = 0.7;
    std::optional<int> window;       // EMA window; default = warm-up
    std::optional<int> warmup;       // default 10 (K <= 10) or 20
    double noise_init_scale = 1e-8;
    std::uint64_t seed = 0;

    // Test hooks for the reduction-to-baseline property.
    bool force_omega_one = false;
    bool freeze_noise = false;

    // Selection.
    double sigma = 0.5;
    bool log_selection = true;

    // CSR+ options.
    bool plus_consistency = true;
    bool plus_mixup = true;
    bool plus_mix_hard = true;   // Mixup rows for the hard set too
    bool plus_correction = true;
    bool plus_augment = true;
    double weak_std = 0.05;    // fraction of per-feature std
    double strong_std = 0.2;
    double mask_prob = 0.2;
    double mix_alpha = 4.0;
    double correction_eps = 0.5;
    double correction_momentum = 0.9;
    CorrectionRule correction_rule = CorrectionRule::capped;
    std::optional<double> plus_alpha;  // fixed loss weight; default linear ramp 0 -> 1

    bool parallel = true;

    double resolved_lr_u() const { return lr_u.value_or(10.0 * lr); }
    double resolved_lr_v() const { return lr_v.value_or(100.0 * lr); }
    double resolved_lr_gamma() const { return lr_gamma.value_or(tau_m); }
    int resolved_warmup(int num_classes) const { return warmup.value_or(num_classes <= 10 ? 10 : 20); }
    int resolved_window(int num_classes) const { return window.value_or(resolved_warmup(num_classes)); }

    // Throws ContractViolation on negative rates, warm-up >= epochs, ...
    void validate(int num_classes) const;
};

// Per-epoch L1 sums of the applied gradients of each parameter group.
struct GroupGradients {
    double theta = 0.0;
    double u = 0.0;
    double v = 0.0;
    double m = 0.0;
    double gamma = 0.0;
};

struct EpochRecord {
    int epoch = 0;
    bool warmup = false;
    double train_loss = 0.0;   // mean CE of the corrected prediction
    double train_mse = 0.0;    // mean MSE of the v path (0 when inactive)
    double total_loss = 0.0;   // including CSR+ terms
    double train_acc = 0.0;    // raw prediction vs training labels
    double test_acc = 0.0;
    GroupGradients grads;
    double nfr = -1.0;         // -1 when the mislabeled set is unknown or empty
    double diag_mean = 1.0;
    double gamma = 1.0;
    double omega_mean = 1.0;
    double omega_min = 1.0;
    double omega_max = 1.0;
    std::array<int, kOmegaBins> omega_hist{};
    // Selection diagnostics (-1 when not computed).
    double prec_small_u = -1.0, rec_small_u = -1.0;
    double prec_small_loss = -1.0, rec_small_loss = -1.0;
    double prec_joint_clean = -1.0, rec_joint_clean = -1.0;
    long n_clean = -1, n_hard = -1, n_noisy = -1;
    // CSR+ label correction.
    long n_corrected = 0;
    double corrected_acc = -1.0;
    int collab_clips = 0;
    bool fallback = false;     // CSR+ epoch ran as warm-up
};

struct RunLog {
    std::vector<EpochRecord> epochs;
    std::vector<std::string> warnings;
    bool aborted = false;
    std::string abort_reason;
};

// Appends the per-group L1 sums for an epoch.
void record_gradients(EpochRecord& record, const GroupGradients& grads);

struct TrainResult {
    Mlp model;
    NoiseParams noise;
    CollabState collab;
    EmaState ema;
    RunLog log;
    std::vector<Matrix> v_start;                // v in effect at the start of each epoch (if kept)
    std::vector<CollabState> collab_start;      // M, gamma at the start of each epoch (if kept)
    std::vector<double> train_losses;           // final per-sample CE of raw prediction vs labels
    std::vector<int> pseudo_labels;             // CSR+: -1 or corrected label
};

// Optional instrumentation used by the lag experiment.
struct TrainHooks {
    bool keep_snapshots = false;
    // Called before each epoch; may overwrite v and the collaboration state.
    std::function<void(int epoch, NoiseParams& noise, CollabState& collab)> on_epoch_begin;
    bool freeze_v = false;
    bool freeze_collab = false;
};

// Warm-up with plain CE, then the configured method. Never throws on
// divergence: the result then holds the last good epoch and log.aborted.
TrainResult train(const Dataset& train_set, const Dataset& test_set, const TrainConfig& config,
                  const TrainHooks& hooks = {});

double accuracy(const Mlp& model, const Dataset& data);

}  // namespace csr
