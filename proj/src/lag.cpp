#include "csr/lag.hpp"

#include "csr/diagnostics.hpp"
#include "csr/error.hpp"

namespace csr {

LagBaseline LagBaseline::from_result(const TrainResult& result) {
    LagBaseline b;
    b.v_start = result.v_start;
    b.collab_start = result.collab_start;
    for (const auto& e : result.log.epochs) {
        b.v_grad.push_back(e.grads.v);
        b.theta_grad.push_back(e.grads.theta);
    }
    if (!result.log.epochs.empty()) b.test_error = 1.0 - result.log.epochs.back().test_acc;
    return b;
}

TrainResult lag_baseline_run(const Dataset& train_set, const Dataset& test_set, const TrainConfig& config) {
    TrainHooks hooks;
    hooks.keep_snapshots = true;
    return train(train_set, test_set, config, hooks);
}

LagPoint lag_replay(const Dataset& train_set, const Dataset& test_set, const TrainConfig& config,
                    const LagBaseline& baseline, int shift) {
    const int T = static_cast<int>(baseline.v_start.size());
    if (T == 0 || T != config.epochs) throw ContractViolation("lag_replay: baseline must hold one v snapshot per epoch");
    if (shift < 0 || shift >= T) throw ContractViolation("lag_replay: shift must lie in [0, T)");
    const bool replay_collab = !baseline.collab_start.empty();

    TrainHooks hooks;
    hooks.freeze_v = true;
    hooks.freeze_collab = replay_collab;
    hooks.on_epoch_begin = [&](int epoch, NoiseParams& noise, CollabState& collab) {
        noise.v = baseline.v_start[static_cast<std::size_t>(epoch >= shift ? epoch - shift : 0)];
        if (replay_collab) collab = baseline.collab_start[static_cast<std::size_t>(epoch)];
    };
    const TrainResult run = train(train_set, test_set, config, hooks);
    if (run.log.aborted) throw DegenerateError("lag replay diverged: " + run.log.abort_reason);

    LagPoint pt;
    pt.shift = shift;
    for (const auto& e : run.log.epochs) pt.theta_grad.push_back(e.grads.theta);
    pt.v_grad.assign(baseline.v_grad.size(), 0.0);
    for (std::size_t t = static_cast<std::size_t>(shift); t < pt.v_grad.size(); ++t)
        pt.v_grad[t] = baseline.v_grad[t - static_cast<std::size_t>(shift)];
    pt.incoordination = incoordination(grad_proportion(pt.theta_grad), grad_proportion(pt.v_grad));
    pt.test_error = 1.0 - run.log.epochs.back().test_acc;
    return pt;
}

std::vector<LagPoint> lag_experiment(const Dataset& train_set, const Dataset& test_set, const TrainConfig& config,
                                     const LagBaseline& baseline, std::span<const int> shifts) {
    std::vector<LagPoint> out;
    for (int s : shifts) out.push_back(lag_replay(train_set, test_set, config, baseline, s));
    return out;
}

}  // namespace csr
