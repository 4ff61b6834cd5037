#pragma once

#include <map>
#include <string>
#include <vector>

#include "csr/dataset.hpp"
#include "csr/lag.hpp"
#include "csr/trainer.hpp"

namespace csr {

// Flat key=value configuration. Unknown keys are rejected.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text);   // '#' starts a comment
KeyValues read_key_values(const std::string& path);

// Applies `key=value` settings on top of cfg. Throws ContractViolation on an
// unknown key or malformed value.
void apply_settings(TrainConfig& cfg, const KeyValues& kv);
void apply_setting(TrainConfig& cfg, const std::string& assignment);  // "key=value"

// Every field with defaults resolved, in a stable order.
KeyValues config_to_key_values(const TrainConfig& cfg, int num_classes);
std::string format_key_values(const KeyValues& kv);

// metrics.csv: one row per epoch; header from metrics_header().
std::vector<std::string> metrics_header();
std::string metrics_row(const EpochRecord& rec);

struct RunSummary {
    std::string method;
    std::uint64_t seed = 0;
    int epochs = 0;
    double final_test_acc = 0.0;
    double final_nfr = -1.0;
    double noise_rate = -1.0;
    bool aborted = false;
    std::string dataset;
};

// Writes config.snapshot, metrics.csv, summary.json, collab.csv, u.csv, v.csv,
// model.txt and (when the run kept them) grads/v_snapshots.bin + grads/collab_start.csv.
// `extra` lands in config.snapshot next to the training settings (data paths, ...).
void write_run_dir(const std::string& dir, const TrainConfig& cfg, const TrainResult& result, const Dataset& train_set,
                   const KeyValues& extra);

RunSummary read_summary(const std::string& dir);

void write_noise_csv(const Matrix& m, const std::string& path);
Matrix read_matrix_csv(const std::string& path);

void save_model(const Mlp& model, const std::string& path);
Mlp load_model(const std::string& path);

// Binary layout: "CSRV", u64 T, u64 N, u64 K, then T*N*K little-endian doubles.
void write_v_snapshots(const std::vector<Matrix>& snaps, const std::string& path);
std::vector<Matrix> read_v_snapshots(const std::string& path);

// Rebuilds the replay inputs of a saved run directory.
LagBaseline read_lag_baseline(const std::string& dir);

struct MetricsTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::size_t column(const std::string& name) const;
};
MetricsTable read_metrics(const std::string& path);

}  // namespace csr
