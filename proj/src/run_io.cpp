#include "csr/run_io.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "csr/error.hpp"

namespace csr {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ContractViolation("setting " + key + ": expected a boolean, got '" + v + "'");
}

double as_double(const std::string& key, const std::string& v) {
    try {
        return parse_double(v);
    } catch (const std::exception&) {
        throw ContractViolation("setting " + key + ": expected a number, got '" + v + "'");
    }
}

long long as_int(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    long long out = 0;
    try {
        out = std::stoll(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty()) throw ContractViolation("setting " + key + ": expected an integer, got '" + v + "'");
    return out;
}

std::vector<std::size_t> parse_widths(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    if (v.empty() || v == "none") return out;
    std::stringstream ss(v);
    std::string part;
    while (std::getline(ss, part, ',')) {
        const auto n = as_int(key, trim(part));
        if (n <= 0) throw ContractViolation("setting " + key + ": widths must be positive");
        out.push_back(static_cast<std::size_t>(n));
    }
    return out;
}

std::string join_widths(const std::vector<std::size_t>& w) {
    if (w.empty()) return "none";
    std::string s;
    for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "," : "") + std::to_string(w[i]);
    return s;
}

std::string fmt(double v) { return format_double(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

}  // namespace

KeyValues parse_key_values(const std::string& text) {
    KeyValues kv;
    std::stringstream ss(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected key=value", line_no);
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

KeyValues read_key_values(const std::string& path) { return parse_key_values(read_file(path)); }

void apply_setting(TrainConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ContractViolation("expected key=value, got '" + assignment + "'");
    apply_settings(cfg, KeyValues{{trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1))}});
}

void apply_settings(TrainConfig& cfg, const KeyValues& kv) {
    for (const auto& [key, v] : kv) {
        if (key == "method") cfg.method = parse_method(v);
        else if (key == "epochs") cfg.epochs = static_cast<int>(as_int(key, v));
        else if (key == "batch_size") cfg.batch_size = static_cast<int>(as_int(key, v));
        else if (key == "hidden") cfg.hidden = parse_widths(key, v);
        else if (key == "lr") cfg.lr = as_double(key, v);
        else if (key == "weight_decay") cfg.weight_decay = as_double(key, v);
        else if (key == "lr_u") cfg.lr_u = as_double(key, v);
        else if (key == "lr_v") cfg.lr_v = as_double(key, v);
        else if (key == "tau_m") cfg.tau_m = as_double(key, v);
        else if (key == "lr_gamma") cfg.lr_gamma = as_double(key, v);
        else if (key == "beta_init") cfg.beta_init = as_double(key, v);
        else if (key == "window") cfg.window = static_cast<int>(as_int(key, v));
        else if (key == "warmup") cfg.warmup = static_cast<int>(as_int(key, v));
        else if (key == "noise_init_scale") cfg.noise_init_scale = as_double(key, v);
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(as_int(key, v));
        else if (key == "force_omega_one") cfg.force_omega_one = parse_bool(key, v);
        else if (key == "freeze_noise") cfg.freeze_noise = parse_bool(key, v);
        else if (key == "sigma") cfg.sigma = as_double(key, v);
        else if (key == "log_selection") cfg.log_selection = parse_bool(key, v);
        else if (key == "plus_consistency") cfg.plus_consistency = parse_bool(key, v);
        else if (key == "plus_mixup") cfg.plus_mixup = parse_bool(key, v);
        else if (key == "plus_mix_hard") cfg.plus_mix_hard = parse_bool(key, v);
        else if (key == "plus_correction") cfg.plus_correction = parse_bool(key, v);
        else if (key == "plus_augment") cfg.plus_augment = parse_bool(key, v);
        else if (key == "weak_std") cfg.weak_std = as_double(key, v);
        else if (key == "strong_std") cfg.strong_std = as_double(key, v);
        else if (key == "mask_prob") cfg.mask_prob = as_double(key, v);
        else if (key == "mix_alpha") cfg.mix_alpha = as_double(key, v);
        else if (key == "correction_eps") cfg.correction_eps = as_double(key, v);
        else if (key == "correction_momentum") cfg.correction_momentum = as_double(key, v);
        else if (key == "correction_rule") {
            if (v == "capped") cfg.correction_rule = CorrectionRule::capped;
            else if (v == "literal") cfg.correction_rule = CorrectionRule::literal;
            else throw ContractViolation("setting correction_rule: expected capped|literal");
        } else if (key == "plus_alpha") {
            if (v == "ramp") cfg.plus_alpha.reset();
            else cfg.plus_alpha = as_double(key, v);
        } else if (key == "parallel") cfg.parallel = parse_bool(key, v);
        else throw ContractViolation("unknown setting '" + key + "'");
    }
}

KeyValues config_to_key_values(const TrainConfig& c, int num_classes) {
    return KeyValues{
        {"method", to_string(c.method)},
        {"epochs", std::to_string(c.epochs)},
        {"batch_size", std::to_string(c.batch_size)},
        {"hidden", join_widths(c.hidden)},
        {"lr", fmt(c.lr)},
        {"weight_decay", fmt(c.weight_decay)},
        {"lr_u", fmt(c.resolved_lr_u())},
        {"lr_v", fmt(c.resolved_lr_v())},
        {"tau_m", fmt(c.tau_m)},
        {"lr_gamma", fmt(c.resolved_lr_gamma())},
        {"beta_init", fmt(c.beta_init)},
        {"window", std::to_string(c.resolved_window(num_classes))},
        {"warmup", std::to_string(c.resolved_warmup(num_classes))},
        {"noise_init_scale", fmt(c.noise_init_scale)},
        {"seed", std::to_string(c.seed)},
        {"force_omega_one", fmt(c.force_omega_one)},
        {"freeze_noise", fmt(c.freeze_noise)},
        {"sigma", fmt(c.sigma)},
        {"log_selection", fmt(c.log_selection)},
        {"plus_consistency", fmt(c.plus_consistency)},
        {"plus_mixup", fmt(c.plus_mixup)},
        {"plus_mix_hard", fmt(c.plus_mix_hard)},
        {"plus_correction", fmt(c.plus_correction)},
        {"plus_augment", fmt(c.plus_augment)},
        {"weak_std", fmt(c.weak_std)},
        {"strong_std", fmt(c.strong_std)},
        {"mask_prob", fmt(c.mask_prob)},
        {"mix_alpha", fmt(c.mix_alpha)},
        {"correction_eps", fmt(c.correction_eps)},
        {"correction_momentum", fmt(c.correction_momentum)},
        {"correction_rule", c.correction_rule == CorrectionRule::capped ? "capped" : "literal"},
        {"plus_alpha", c.plus_alpha ? fmt(*c.plus_alpha) : "ramp"},
        {"parallel", fmt(c.parallel)},
    };
}

std::string format_key_values(const KeyValues& kv) {
    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    return out;
}

std::vector<std::string> metrics_header() {
    std::vector<std::string> h{"epoch",           "warmup",          "train_loss",     "train_mse",
                               "total_loss",      "train_acc",       "test_acc",       "grad_theta",
                               "grad_u",          "grad_v",          "grad_m",         "grad_gamma",
                               "nfr",             "diag_mean",       "gamma",          "omega_mean",
                               "omega_min",       "omega_max",       "prec_small_u",   "rec_small_u",
                               "prec_small_loss", "rec_small_loss",  "prec_joint_clean", "rec_joint_clean",
                               "n_clean",         "n_hard",          "n_noisy",        "n_corrected",
                               "corrected_acc",   "collab_clips",    "fallback"};
    for (std::size_t b = 0; b < kOmegaBins; ++b) h.push_back("omega_h" + std::to_string(b));
    return h;
}

std::string metrics_row(const EpochRecord& r) {
    std::vector<std::string> cells{
        std::to_string(r.epoch),      r.warmup ? "1" : "0",     fmt(r.train_loss),        fmt(r.train_mse),
        fmt(r.total_loss),            fmt(r.train_acc),         fmt(r.test_acc),          fmt(r.grads.theta),
        fmt(r.grads.u),               fmt(r.grads.v),           fmt(r.grads.m),           fmt(r.grads.gamma),
        fmt(r.nfr),                   fmt(r.diag_mean),         fmt(r.gamma),             fmt(r.omega_mean),
        fmt(r.omega_min),             fmt(r.omega_max),         fmt(r.prec_small_u),      fmt(r.rec_small_u),
        fmt(r.prec_small_loss),       fmt(r.rec_small_loss),    fmt(r.prec_joint_clean),  fmt(r.rec_joint_clean),
        std::to_string(r.n_clean),    std::to_string(r.n_hard), std::to_string(r.n_noisy), std::to_string(r.n_corrected),
        fmt(r.corrected_acc),         std::to_string(r.collab_clips), r.fallback ? "1" : "0"};
    for (int c : r.omega_hist) cells.push_back(std::to_string(c));
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) line += (i ? "," : "") + cells[i];
    return line;
}

void write_noise_csv(const Matrix& m, const std::string& path) {
    auto out = open_out(path);
    for (std::size_t k = 0; k < m.cols; ++k) out << (k ? "," : "") << 'k' << k;
    out << '\n';
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t k = 0; k < m.cols; ++k) out << (k ? "," : "") << fmt(m(i, k));
        out << '\n';
    }
}

Matrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty file " + path, 1);
    const std::size_t cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    Matrix m(0, cols);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t n = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                m.data.push_back(parse_double(cell));
            } catch (const std::exception& e) {
                throw ParseError(e.what(), line_no);
            }
            ++n;
        }
        if (n != cols) throw ParseError("wrong field count", line_no);
        ++m.rows;
    }
    return m;
}

void save_model(const Mlp& model, const std::string& path) {
    auto out = open_out(path);
    out << "widths=" << join_widths({model.widths().begin(), model.widths().end()}) << '\n';
    for (double p : model.params()) out << fmt(p) << '\n';
}

Mlp load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    std::getline(in, line);
    if (line.rfind("widths=", 0) != 0) throw ParseError("model file must start with widths=", 1);
    Mlp m(parse_widths("widths", line.substr(7)));
    auto params = m.params();
    std::size_t i = 0, line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        if (i >= params.size()) throw ParseError("too many parameters", line_no);
        params[i++] = parse_double(line);
    }
    if (i != params.size()) throw ParseError("too few parameters", line_no);
    return m;
}

void write_v_snapshots(const std::vector<Matrix>& snaps, const std::string& path) {
    auto out = open_out(path, std::ios::binary);
    const std::uint64_t T = snaps.size(), N = T ? snaps[0].rows : 0, K = T ? snaps[0].cols : 0;
    out.write("CSRV", 4);
    for (std::uint64_t v : {T, N, K}) out.write(reinterpret_cast<const char*>(&v), sizeof v);
    for (const auto& m : snaps) {
        if (m.rows != N || m.cols != K) throw ContractViolation("write_v_snapshots: ragged snapshots");
        out.write(reinterpret_cast<const char*>(m.data.data()), static_cast<std::streamsize>(m.data.size() * sizeof(double)));
    }
}

std::vector<Matrix> read_v_snapshots(const std::string& path) {
    const std::string blob = read_file(path);
    if (blob.size() < 28 || blob.compare(0, 4, "CSRV") != 0) throw ParseError("not a v snapshot file: " + path, 1);
    std::uint64_t dims[3];
    std::memcpy(dims, blob.data() + 4, sizeof dims);
    const std::uint64_t T = dims[0], N = dims[1], K = dims[2];
    if (blob.size() != 28 + T * N * K * sizeof(double)) throw ParseError("truncated v snapshot file: " + path, 1);
    std::vector<Matrix> out;
    const char* p = blob.data() + 28;
    for (std::uint64_t t = 0; t < T; ++t) {
        Matrix m(N, K);
        std::memcpy(m.data.data(), p, m.data.size() * sizeof(double));
        p += m.data.size() * sizeof(double);
        out.push_back(std::move(m));
    }
    return out;
}

namespace {

void write_collab_rows(const std::string& path, const std::vector<std::pair<int, CollabState>>& rows) {
    auto out = open_out(path);
    const std::size_t K = rows.empty() ? 0 : rows[0].second.m.rows;
    out << "epoch,diag_mean,gamma";
    for (std::size_t e = 0; e < K * K; ++e) out << ",m" << e / K << '_' << e % K;
    out << '\n';
    for (const auto& [epoch, c] : rows) {
        out << epoch << ',' << fmt(diag_mean(c.m)) << ',' << fmt(c.gamma);
        for (double x : c.m.data) out << ',' << fmt(x);
        out << '\n';
    }
}

}  // namespace

void write_run_dir(const std::string& dir, const TrainConfig& cfg, const TrainResult& result, const Dataset& train_set,
                   const KeyValues& extra) {
    fs::create_directories(dir);
    KeyValues snapshot = config_to_key_values(cfg, train_set.num_classes);
    for (const auto& [k, v] : extra) snapshot[k] = v;
    open_out(dir + "/config.snapshot") << format_key_values(snapshot);

    {
        auto out = open_out(dir + "/metrics.csv");
        const auto header = metrics_header();
        for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
        out << '\n';
        for (const auto& rec : result.log.epochs) out << metrics_row(rec) << '\n';
    }

    {
        // collab.csv holds the state at the end of each epoch.
        std::vector<std::pair<int, CollabState>> rows;
        for (std::size_t t = 0; t + 1 < result.collab_start.size(); ++t)
            rows.emplace_back(static_cast<int>(t), result.collab_start[t + 1]);
        if (!result.log.epochs.empty()) rows.emplace_back(result.log.epochs.back().epoch, result.collab);
        write_collab_rows(dir + "/collab.csv", rows);
    }

    write_noise_csv(result.noise.u, dir + "/u.csv");
    write_noise_csv(result.noise.v, dir + "/v.csv");
    save_model(result.model, dir + "/model.txt");

    if (!result.v_start.empty()) {
        fs::create_directories(dir + "/grads");
        write_v_snapshots(result.v_start, dir + "/grads/v_snapshots.bin");
        std::vector<std::pair<int, CollabState>> rows;
        for (std::size_t t = 0; t < result.collab_start.size(); ++t)
            rows.emplace_back(static_cast<int>(t), result.collab_start[t]);
        write_collab_rows(dir + "/grads/collab_start.csv", rows);
    }

    nlohmann::json j;
    j["method"] = to_string(cfg.method);
    j["seed"] = cfg.seed;
    j["epochs"] = static_cast<int>(result.log.epochs.size());
    j["aborted"] = result.log.aborted;
    j["abort_reason"] = result.log.abort_reason;
    j["warnings"] = result.log.warnings.size();
    if (!result.log.epochs.empty()) {
        const auto& last = result.log.epochs.back();
        j["final_test_acc"] = last.test_acc;
        j["final_train_loss"] = last.train_loss;
        j["final_nfr"] = last.nfr;
        j["final_prec_small_u"] = last.prec_small_u;
        j["final_prec_small_loss"] = last.prec_small_loss;
        j["final_prec_joint_clean"] = last.prec_joint_clean;
        j["final_diag_mean"] = last.diag_mean;
    }
    j["noise_rate"] = train_set.y_clean ? static_cast<double>(train_set.mislabeled().size()) /
                                              static_cast<double>(train_set.size())
                                        : -1.0;
    if (auto it = extra.find("dataset"); it != extra.end()) j["dataset"] = it->second;
    open_out(dir + "/summary.json") << j.dump(2) << '\n';
}

RunSummary read_summary(const std::string& dir) {
    const auto j = nlohmann::json::parse(read_file(dir + "/summary.json"));
    RunSummary s;
    s.method = j.at("method").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.epochs = j.at("epochs").get<int>();
    s.aborted = j.at("aborted").get<bool>();
    s.final_test_acc = j.value("final_test_acc", 0.0);
    s.final_nfr = j.value("final_nfr", -1.0);
    s.noise_rate = j.value("noise_rate", -1.0);
    s.dataset = j.value("dataset", std::string{});
    return s;
}

std::size_t MetricsTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw ContractViolation("metrics table has no column '" + name + "'");
}

MetricsTable read_metrics(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    MetricsTable t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (first) t.header = std::move(cells);
        else t.rows.push_back(std::move(cells));
        first = false;
    }
    return t;
}

LagBaseline read_lag_baseline(const std::string& dir) {
    LagBaseline b;
    b.v_start = read_v_snapshots(dir + "/grads/v_snapshots.bin");
    const auto metrics = read_metrics(dir + "/metrics.csv");
    const auto cv = metrics.column("grad_v"), ct = metrics.column("grad_theta"), ca = metrics.column("test_acc");
    for (const auto& row : metrics.rows) {
        b.v_grad.push_back(parse_double(row[cv]));
        b.theta_grad.push_back(parse_double(row[ct]));
    }
    if (!metrics.rows.empty()) b.test_error = 1.0 - parse_double(metrics.rows.back()[ca]);

    const auto kv = read_key_values(dir + "/config.snapshot");
    const std::string method = kv.at("method");
    if (method == "csr" || method == "csr-plus") {
        const Matrix rows = read_matrix_csv(dir + "/grads/collab_start.csv");
        const std::size_t K2 = rows.cols - 3;
        std::size_t K = 0;
        while (K * K < K2) ++K;
        for (std::size_t r = 0; r < rows.rows; ++r) {
            CollabState c;
            c.gamma = rows(r, 2);
            c.m = Matrix(K, K);
            for (std::size_t e = 0; e < K2; ++e) c.m.data[e] = rows(r, 3 + e);
            b.collab_start.push_back(std::move(c));
        }
    }
    return b;
}

}  // namespace csr
