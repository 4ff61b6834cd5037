#pragma once

#include <span>
#include <vector>

#include "csr/collab.hpp"
#include "csr/dataset.hpp"
#include "csr/matrix.hpp"
#include "csr/trainer.hpp"

namespace csr {

// What a replay needs from the baseline run.
struct LagBaseline {
    std::vector<Matrix> v_start;             // v in effect at the start of each epoch (T entries)
    std::vector<double> v_grad;              // per-epoch v gradient L1 sums
    std::vector<double> theta_grad;          // per-epoch theta gradient L1 sums
    std::vector<CollabState> collab_start;   // empty for runs without a collaboration matrix
    double test_error = 0.0;

    static LagBaseline from_result(const TrainResult& result);
};

struct LagPoint {
    int shift = 0;
    double incoordination = 0.0;  // theta (replay) vs v (baseline, shifted)
    double test_error = 0.0;
    std::vector<double> theta_grad;
    std::vector<double> v_grad;
};

// Shifts the stored v trajectory `shift` epochs later: v(t) <- v_baseline(t - shift)
// (initial v before that). v stays frozen, theta and u retrain from the same
// seed, M follows its saved trajectory. Throws ContractViolation for shift < 0
// or shift >= T.
LagPoint lag_replay(const Dataset& train_set, const Dataset& test_set, const TrainConfig& config,
                    const LagBaseline& baseline, int shift);

std::vector<LagPoint> lag_experiment(const Dataset& train_set, const Dataset& test_set, const TrainConfig& config,
                                     const LagBaseline& baseline, std::span<const int> shifts);

// Baseline run with snapshots kept.
TrainResult lag_baseline_run(const Dataset& train_set, const Dataset& test_set, const TrainConfig& config);

}  // namespace csr
