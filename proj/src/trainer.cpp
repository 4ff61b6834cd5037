#include "csr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>

#include "csr/batch_kernel.hpp"
#include "csr/csr_plus.hpp"
#include "csr/diagnostics.hpp"
#include "csr/error.hpp"
#include "csr/objective.hpp"
#include "csr/rng.hpp"
#include "csr/selection.hpp"

namespace csr {

std::string to_string(Method m) {
    switch (m) {
        case Method::plain_ce: return "plain-ce";
        case Method::sop: return "sop";
        case Method::csr: return "csr";
        case Method::csr_plus: return "csr-plus";
    }
    return "unknown";
}

Method parse_method(const std::string& name) {
    if (name == "plain-ce") return Method::plain_ce;
    if (name == "sop") return Method::sop;
    if (name == "csr") return Method::csr;
    if (name == "csr-plus") return Method::csr_plus;
    throw ContractViolation("unknown method '" + name + "' (plain-ce|sop|csr|csr-plus)");
}

void TrainConfig::validate(int num_classes) const {
    if (epochs <= 0) throw ContractViolation("epochs must be positive");
    if (batch_size <= 0) throw ContractViolation("batch_size must be positive");
    const double rates[] = {lr, weight_decay, resolved_lr_u(), resolved_lr_v(), tau_m, resolved_lr_gamma()};
    for (double r : rates)
        if (!(r >= 0.0)) throw ContractViolation("learning rates and weight decay must be >= 0");
    if (!(beta_init >= 0.0 && beta_init <= 1.0)) throw ContractViolation("beta_init must lie in [0, 1]");
    if (resolved_warmup(num_classes) < 0 || resolved_warmup(num_classes) >= epochs)
        throw ContractViolation("warm-up must be shorter than the run");
    if (!(sigma >= 0.0 && sigma < 1.0)) throw ContractViolation("sigma must lie in [0, 1)");
    for (auto h : hidden)
        if (h == 0) throw ContractViolation("hidden widths must be positive");
}

void record_gradients(EpochRecord& record, const GroupGradients& grads) { record.grads = grads; }

double accuracy(const Mlp& model, const Dataset& data) {
    const Matrix p = predict(model, data.x);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (static_cast<int>(argmax(p.row(i))) == data.y[i]) ++hit;
    return static_cast<double>(hit) / static_cast<double>(data.size());
}

namespace {

double l1(const Matrix& m) {
    double s = 0.0;
    for (double x : m.data) s += std::abs(x);
    return s;
}

struct Snapshot {
    Mlp model;
    NoiseParams noise;
    CollabState collab;
    EmaState ema;
};

void selection_diagnostics(const Dataset& train_set, std::span<const double> sample_losses, const NoiseParams& noise,
                           double sigma, EpochRecord& rec) {
    const auto clean = train_set.truly_clean();
    const auto universe = full_range(train_set.size());
    const auto s_loss = small_loss_select(sample_losses, sigma);
    const auto s_u = small_u_select(noise, train_set.y, sigma);
    const auto part = joint_partition(s_loss, s_u, universe);
    if (!is_exact_partition(part, universe)) throw std::logic_error("joint partition is not exact");
    auto fill = [&](const IndexSet& sel, double& p, double& r) {
        const auto m = selection_metrics(sel, clean);
        p = m.precision_defined ? m.precision : -1.0;
        r = m.recall;
    };
    fill(s_u, rec.prec_small_u, rec.rec_small_u);
    fill(s_loss, rec.prec_small_loss, rec.rec_small_loss);
    fill(part.clean, rec.prec_joint_clean, rec.rec_joint_clean);
    rec.n_clean = static_cast<long>(part.clean.size());
    rec.n_hard = static_cast<long>(part.hard.size());
    rec.n_noisy = static_cast<long>(part.noisy.size());
}

}  // namespace

TrainResult train(const Dataset& train_set, const Dataset& test_set, const TrainConfig& config,
                  const TrainHooks& hooks) {
    train_set.validate();
    test_set.validate();
    if (test_set.dim() != train_set.dim()) throw ContractViolation("train/test feature width mismatch");
    const int num_classes = std::max(train_set.num_classes, test_set.num_classes);
    config.validate(num_classes);

    const std::size_t N = train_set.size();
    const std::size_t K = static_cast<std::size_t>(num_classes);
    const std::size_t B = static_cast<std::size_t>(config.batch_size);
    const int T = config.epochs;
    const int warmup = config.resolved_warmup(num_classes);
    const double lr_u = config.resolved_lr_u();
    const double lr_v = hooks.freeze_v ? 0.0 : config.resolved_lr_v();

    std::vector<std::size_t> widths{train_set.dim()};
    widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
    widths.push_back(K);

    TrainResult res;
    res.model = Mlp::random(widths, config.seed);
    res.noise = NoiseParams::init(N, K, config.noise_init_scale, config.seed);
    res.collab = CollabState::init(K, config.tau_m, config.resolved_lr_gamma());
    res.ema = EmaState(N, K, config.beta_init, T, config.resolved_window(num_classes));

    const bool uses_noise = config.method != Method::plain_ce;
    const bool uses_collab = config.method == Method::csr || config.method == Method::csr_plus;
    const bool uses_weights = uses_collab && !config.force_omega_one;
    const bool is_plus = config.method == Method::csr_plus;

    const auto mislabeled = train_set.mislabeled();
    const Matrix identity = Matrix::identity(K);
    const std::vector<double> no_weight(N, 0.0);
    // forced omega = 1 also zeroes the (1 - omega) noise step
    const std::vector<double> forced_weight(N, 1.0);

    std::unique_ptr<PlusRuntime> plus;
    if (is_plus) plus = std::make_unique<PlusRuntime>(train_set, config);

    auto shuffle_rng = make_rng(config.seed, Stream::shuffle);
    BatchGradientKernel kernel(config.parallel);
    GradientSet g_theta(res.model);
    Matrix grad_u(N, K), grad_v(N, K);
    std::vector<double> omega(N, 1.0);
    std::vector<double> sample_losses(N, 0.0);
    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> extra_loss, batch_w;

    Snapshot good{res.model, res.noise, res.collab, res.ema};

    try {
        for (int t = 0; t < T; ++t) {
            EpochRecord rec;
            rec.epoch = t;
            const bool warm = t < warmup;

            if (hooks.keep_snapshots) {
                res.v_start.push_back(res.noise.v);
                res.collab_start.push_back(res.collab);
            }
            if (hooks.on_epoch_begin) hooks.on_epoch_begin(t, res.noise, res.collab);

            if (!warm && uses_weights && res.ema.initialized)
                omega = confidence_weights(res.ema.q, train_set.y);
            else
                std::fill(omega.begin(), omega.end(), 1.0);

            // An empty clean set drops the CSR+ terms for the epoch; the CSR pass
            // still runs, otherwise u could never move and the set stays empty.
            bool plus_extras = false;
            bool plus_on = plus && !warm;
            if (plus_on) {
                if (!plus->begin_epoch(t, sample_losses, res.noise, res.log)) {
                    plus_on = false;
                    rec.fallback = true;
                } else {
                    plus_extras = plus->extras_active();
                }
            }
            const bool noise_on = uses_noise && !warm;
            const bool collab_on = uses_collab && !warm;
            const bool weights_on = uses_weights && !warm;
            const bool augment_primary = plus_on && config.plus_augment;
            rec.warmup = t < warmup;

            std::shuffle(order.begin(), order.end(), shuffle_rng);
            std::fill(grad_u.data.begin(), grad_u.data.end(), 0.0);
            std::fill(grad_v.data.begin(), grad_v.data.end(), 0.0);

            double ce_sum = 0.0, mse_sum = 0.0, extra_sum = 0.0;
            GroupGradients gg;
            Matrix inputs, targets, extra_inputs, extra_targets;

            for (std::size_t b0 = 0; b0 < N; b0 += B) {
                const std::size_t bs = std::min(B, N - b0);
                const std::span<const std::size_t> batch(order.data() + b0, bs);
                const double inv_b = 1.0 / static_cast<double>(bs);
                const Matrix mbar = collab_on ? normalize_matrix(res.collab) : identity;

                if (augment_primary) {
                    plus->primary_inputs(batch, inputs);
                } else {
                    inputs = Matrix(bs, train_set.dim());
                    for (std::size_t r = 0; r < bs; ++r) {
                        const auto x = train_set.x.row(batch[r]);
                        std::copy(x.begin(), x.end(), inputs.row(r).begin());
                    }
                }

                Matrix u_rows, v_rows;
                if (noise_on) {
                    u_rows = Matrix(bs, K);
                    v_rows = Matrix(bs, K);
                    for (std::size_t r = 0; r < bs; ++r) {
                        const auto ur = res.noise.u.row(batch[r]);
                        const auto vr = res.noise.v.row(batch[r]);
                        std::copy(ur.begin(), ur.end(), u_rows.row(r).begin());
                        std::copy(vr.begin(), vr.end(), v_rows.row(r).begin());
                    }
                }
                targets = Matrix(bs, K);
                for (std::size_t r = 0; r < bs; ++r) targets(r, static_cast<std::size_t>(train_set.y[batch[r]])) = 1.0;
                batch_w.assign(weights_on ? bs : 0, 0.0);
                for (std::size_t r = 0; r < batch_w.size(); ++r) batch_w[r] = omega[batch[r]];

                g_theta.clear();
                const BatchObjective obj =
                    csr_batch_objective(res.model, inputs, targets, noise_on ? &u_rows : nullptr,
                                        noise_on ? &v_rows : nullptr, collab_on ? &mbar : nullptr, batch_w, kernel, g_theta);
                ce_sum += obj.ce_sum;
                mse_sum += obj.mse_sum;
                for (std::size_t r = 0; r < bs; ++r)
                    for (std::size_t k = 0; k < K; ++k) {
                        grad_u(batch[r], k) += obj.d_u(r, k);
                        grad_v(batch[r], k) += obj.d_v(r, k);
                    }

                if (plus_extras) {
                    plus->extra_rows(batch, extra_inputs, extra_targets);
                    if (extra_inputs.rows > 0) {
                        extra_loss.assign(extra_inputs.rows, 0.0);
                        const double scale = plus->alpha() * inv_b;
                        const LossHead extra_head = [&](std::size_t r, const Activations& acts,
                                                        std::span<double> dlogits) {
                            const auto target = extra_targets.row(r);
                            extra_loss[r] = soft_ce_loss(acts.probs, target);
                            std::vector<double> dp(K, 0.0);
                            for (std::size_t k = 0; k < K; ++k)
                                if (target[k] != 0.0 && acts.probs[k] >= kProbFloor) dp[k] = -target[k] / acts.probs[k];
                            const auto dz = softmax_backward(acts.probs, dp);
                            for (std::size_t k = 0; k < K; ++k) dlogits[k] = dz[k] * scale;
                        };
                        kernel.accumulate(res.model, extra_inputs, extra_head, g_theta);
                        for (double l : extra_loss) extra_sum += l * inv_b;
                    }
                }

                gg.theta += g_theta.l1();
                sgd_step(res.model, g_theta, config.lr, config.weight_decay, t);

                if (collab_on && !hooks.freeze_collab) {
                    const auto cg = collab_gradient(res.collab, obj.d_mbar);
                    if (update_collab(res.collab, cg.d_m, cg.d_gamma)) {
                        ++rec.collab_clips;
                        res.log.warnings.push_back("epoch " + std::to_string(t) + ": gamma clipped to min(M) + 1e-6");
                    }
                    gg.m += l1(cg.d_m);
                    gg.gamma += std::abs(cg.d_gamma);
                }
            }

            // Once-per-epoch noise parameter update with the (1 - omega) split.
            if (noise_on && !config.freeze_noise) {
                std::span<const double> w = no_weight;
                if (weights_on) w = omega;
                else if (uses_collab && config.force_omega_one) w = forced_weight;
                update_noise_params(res.noise, grad_u, grad_v, lr_u, lr_v, w, t);
                for (std::size_t i = 0; i < N; ++i)
                    for (std::size_t k = 0; k < K; ++k) {
                        gg.u += std::abs((1.0 - w[i]) * grad_u(i, k));
                        if (lr_v > 0.0) gg.v += std::abs((1.0 - w[i]) * grad_v(i, k));
                    }
                if (!s_sign_pattern_holds(res.noise, train_set.y))
                    throw std::logic_error("noise vector sign structure violated");
            }
            record_gradients(rec, gg);

            rec.train_loss = ce_sum / static_cast<double>(N);
            rec.train_mse = noise_on ? mse_sum / static_cast<double>(N) : 0.0;
            const double batches = std::ceil(static_cast<double>(N) / static_cast<double>(B));
            rec.total_loss = rec.train_loss + (plus_extras ? extra_sum / batches : 0.0);
            if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.total_loss))
                throw NonFiniteError("non-finite training loss", t);

            // Evaluation pass over the training set feeds EMA, selection and NFR.
            const Matrix p_train = predict(res.model, train_set.x);
            ema_update(res.ema, p_train, t);
            std::vector<int> pred(N);
            std::size_t hits = 0;
            for (std::size_t i = 0; i < N; ++i) {
                const auto row = p_train.row(i);
                pred[i] = static_cast<int>(argmax(row));
                if (pred[i] == train_set.y[i]) ++hits;
                sample_losses[i] = -std::log(std::clamp(row[static_cast<std::size_t>(train_set.y[i])], kProbFloor, 1.0));
            }
            rec.train_acc = static_cast<double>(hits) / static_cast<double>(N);
            rec.test_acc = accuracy(res.model, test_set);
            if (!mislabeled.empty()) rec.nfr = noise_fitting_rate(pred, train_set.y, mislabeled);

            const auto [wmin, wmax] = std::minmax_element(omega.begin(), omega.end());
            rec.omega_min = *wmin;
            rec.omega_max = *wmax;
            rec.omega_mean = std::accumulate(omega.begin(), omega.end(), 0.0) / static_cast<double>(N);
            rec.omega_hist = omega_histogram(omega);
            rec.diag_mean = diag_mean(res.collab.m);
            rec.gamma = res.collab.gamma;

            if (config.log_selection && train_set.y_clean && N >= 4)
                selection_diagnostics(train_set, sample_losses, res.noise, config.sigma, rec);
            if (plus) plus->end_epoch(t, res.model, rec);

            res.log.epochs.push_back(rec);
            good = Snapshot{res.model, res.noise, res.collab, res.ema};
        }
    } catch (const std::logic_error&) {
        throw;
    } catch (const std::exception& e) {
        res.log.aborted = true;
        res.log.abort_reason = e.what();
        res.model = good.model;
        res.noise = good.noise;
        res.collab = good.collab;
        res.ema = good.ema;
    }
    res.train_losses = sample_losses;
    if (plus) res.pseudo_labels = plus->pseudo_labels();
    return res;
}

}  // namespace csr
