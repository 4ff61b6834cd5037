// Experiment harness: data generation, corruption, training, diagnostics.
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>

#include "csr/batch_kernel.hpp"
#include "csr/dataset.hpp"
#include "csr/diagnostics.hpp"
#include "csr/error.hpp"
#include "csr/lag.hpp"
#include "csr/noise_synth.hpp"
#include "csr/run_io.hpp"
#include "csr/selection.hpp"
#include "csr/trainer.hpp"

namespace fs = std::filesystem;
using namespace csr;

namespace {

std::ofstream open_out(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
}

std::string cell(double v) { return std::isnan(v) ? "nan" : format_double(v); }

struct GenArgs {
    std::size_t n = 5000;
    int k = 10;
    std::size_t d = 20;
    double separation = 4.0;
    double within_std = 1.0;
    std::uint64_t seed = 0;
    std::string out_dir;
};

int cmd_gen(const GenArgs& a) {
    auto [tr, te] = make_gaussian_clusters(a.n, a.k, a.d, a.separation, a.within_std, a.seed);
    fs::create_directories(a.out_dir);
    save_csv(tr, a.out_dir + "/train.csv");
    save_csv(te, a.out_dir + "/test.csv");
    std::cout << "wrote " << tr.size() << " train / " << te.size() << " test rows to " << a.out_dir << "\n";
    return 0;
}

struct CorruptArgs {
    std::string in, out, record, kind = "idn";
    double rate = 0.4;
    double flip_std = 0.1;
    std::uint64_t seed = 0;
};

int cmd_corrupt(const CorruptArgs& a) {
    Dataset d = load_csv(a.in);
    const std::vector<int>& clean = d.y_clean ? *d.y_clean : d.y;
    CorruptionRecord rec = a.kind == "symmetric" ? symmetric_noise(clean, a.rate, d.num_classes, a.seed)
                                                 : idn_noise(d.x, clean, a.rate, d.num_classes, a.seed, a.flip_std);
    d.y_clean = rec.clean;
    d.y = rec.noisy;
    save_csv(d, a.out);
    const std::string rec_path = a.record.empty() ? a.out + ".record.csv" : a.record;
    auto out = open_out(rec_path);
    out << "clean,noisy,flipped\n";
    for (std::size_t i = 0; i < rec.clean.size(); ++i)
        out << rec.clean[i] << ',' << rec.noisy[i] << ',' << (rec.clean[i] != rec.noisy[i] ? 1 : 0) << '\n';
    std::cout << a.kind << " noise: target " << rec.target_rate << ", achieved " << rec.achieved_rate << "\n";
    return 0;
}

struct TrainArgs {
    std::string train, test, out, config, method, tag;
    std::vector<std::string> sets;
    bool snapshots = false;
};

TrainConfig build_config(const std::string& config_path, const std::string& method,
                         const std::vector<std::string>& sets) {
    TrainConfig cfg;
    if (!config_path.empty()) apply_settings(cfg, read_key_values(config_path));
    if (!method.empty()) cfg.method = parse_method(method);
    for (const auto& s : sets) apply_setting(cfg, s);
    return cfg;
}

std::string default_tag(const Dataset& tr) {
    std::ostringstream ss;
    ss << "K" << tr.num_classes;
    if (tr.y_clean) {
        const double rate = static_cast<double>(tr.mislabeled().size()) / static_cast<double>(tr.size());
        ss << "-noise" << std::fixed << std::setprecision(2) << rate;
    }
    return ss.str();
}

int cmd_train(const TrainArgs& a) {
    const Dataset tr = load_csv(a.train);
    const Dataset te = load_csv(a.test, tr.num_classes);
    const TrainConfig cfg = build_config(a.config, a.method, a.sets);
    cfg.validate(tr.num_classes);
    TrainHooks hooks;
    hooks.keep_snapshots = a.snapshots;
    const TrainResult res = train(tr, te, cfg, hooks);
    KeyValues extra{{"train_path", fs::absolute(a.train).string()},
                    {"test_path", fs::absolute(a.test).string()},
                    {"dataset", a.tag.empty() ? default_tag(tr) : a.tag}};
    write_run_dir(a.out, cfg, res, tr, extra);
    for (const auto& w : res.log.warnings) std::cerr << "warning: " << w << "\n";
    if (res.log.aborted) {
        std::cerr << "run aborted: " << res.log.abort_reason << "\n";
        return 1;
    }
    const auto& last = res.log.epochs.back();
    std::cout << to_string(cfg.method) << " seed " << cfg.seed << ": test_acc " << last.test_acc;
    if (last.nfr >= 0) std::cout << ", nfr " << last.nfr;
    std::cout << "\n";
    return 0;
}

int cmd_diagnose(const std::string& run, std::string out_dir) {
    if (out_dir.empty()) out_dir = run;
    const MetricsTable m = read_metrics(run + "/metrics.csv");
    const auto col = [&](const std::string& name) {
        std::vector<double> v;
        const auto c = m.column(name);
        for (const auto& row : m.rows) v.push_back(parse_double(row[c]));
        return v;
    };
    const auto epoch = col("epoch");
    const auto gt = col("grad_theta"), gv = col("grad_v");

    // Incoordination of the theta and v gradient proportions over epochs [0, t].
    {
        auto out = open_out(out_dir + "/incoordination.csv");
        out << "epoch,incoordination\n";
        for (std::size_t t = 0; t < epoch.size(); ++t) {
            const std::span<const double> a(gt.data(), t + 1), b(gv.data(), t + 1);
            try {
                const auto pa = grad_proportion(a), pb = grad_proportion(b);
                out << epoch[t] << ',' << cell(incoordination(pa, pb)) << '\n';
            } catch (const DegenerateError&) {
                // v has not moved yet
            }
        }
    }
    {
        auto out = open_out(out_dir + "/nfr.csv");
        out << "epoch,nfr\n";
        const auto nfr = col("nfr");
        for (std::size_t t = 0; t < epoch.size(); ++t)
            if (nfr[t] >= 0) out << epoch[t] << ',' << cell(nfr[t]) << '\n';
    }
    {
        auto out = open_out(out_dir + "/selection_pr.csv");
        const std::vector<std::string> names{"prec_small_u",   "rec_small_u",      "prec_small_loss",
                                             "rec_small_loss", "prec_joint_clean", "rec_joint_clean"};
        std::vector<std::vector<double>> cols;
        out << "epoch";
        for (const auto& n : names) {
            out << ',' << n;
            cols.push_back(col(n));
        }
        out << '\n';
        for (std::size_t t = 0; t < epoch.size(); ++t) {
            if (cols[0][t] < 0 && cols[2][t] < 0) continue;
            out << epoch[t];
            for (const auto& c : cols) out << ',' << (c[t] < 0 ? std::string("nan") : cell(c[t]));
            out << '\n';
        }
    }
    std::cout << "wrote incoordination.csv, nfr.csv, selection_pr.csv to " << out_dir << "\n";
    return 0;
}

int cmd_select(const std::string& run, std::string train_path, double sigma, std::string out) {
    const KeyValues snap = read_key_values(run + "/config.snapshot");
    if (train_path.empty()) train_path = snap.at("train_path");
    if (out.empty()) out = run + "/partition.csv";
    const Dataset tr = load_csv(train_path);
    const Mlp model = load_model(run + "/model.txt");
    NoiseParams noise;
    noise.u = read_matrix_csv(run + "/u.csv");
    noise.v = read_matrix_csv(run + "/v.csv");
    if (noise.u.rows != tr.size()) throw ContractViolation("u.csv does not match the training set size");

    const Matrix probs = predict(model, tr.x);
    std::vector<double> losses(tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i) losses[i] = -std::log(std::max(probs(i, tr.y[i]), kProbFloor));
    std::vector<double> post_loss, post_u;
    const IndexSet s_loss = small_loss_select(losses, sigma, &post_loss);
    const IndexSet s_u = small_u_select(noise, tr.y, sigma, &post_u);
    const SamplePartition part = joint_partition(s_loss, s_u, full_range(tr.size()));

    std::vector<const char*> tag(tr.size(), "noisy");
    for (auto i : part.clean) tag[i] = "clean";
    for (auto i : part.hard) tag[i] = "hard";
    auto o = open_out(out);
    o << "index,partition,posterior_loss,posterior_u\n";
    for (std::size_t i = 0; i < tr.size(); ++i)
        o << i << ',' << tag[i] << ',' << cell(post_loss[i]) << ',' << cell(post_u[i]) << '\n';
    std::cout << "clean " << part.clean.size() << ", hard " << part.hard.size() << ", noisy " << part.noisy.size()
              << "\n";
    if (tr.y_clean) {
        const auto truth = tr.truly_clean();
        for (const auto& [name, set] : {std::pair{"small-loss", &s_loss}, {"small-u", &s_u}, {"joint-clean", &part.clean}}) {
            const auto sm = selection_metrics(*set, truth);
            std::cout << name << ": precision " << (sm.precision_defined ? cell(sm.precision) : "nan") << ", recall "
                      << cell(sm.recall) << "\n";
        }
    }
    return 0;
}

struct LagArgs {
    std::string train, test, out, config, method, baseline;
    std::vector<std::string> sets;
    std::vector<int> shifts{0, 5, 10, 20};
};

int cmd_lag(const LagArgs& a) {
    const Dataset tr = load_csv(a.train);
    const Dataset te = load_csv(a.test, tr.num_classes);
    TrainConfig cfg;
    LagBaseline base;
    if (!a.baseline.empty()) {
        cfg = build_config("", "", {});
        apply_settings(cfg, [&] {
            KeyValues kv = read_key_values(a.baseline + "/config.snapshot");
            for (auto k : {"train_path", "test_path", "dataset"}) kv.erase(k);
            return kv;
        }());
        base = read_lag_baseline(a.baseline);
    } else {
        cfg = build_config(a.config, a.method, a.sets);
        cfg.validate(tr.num_classes);
        const TrainResult res = lag_baseline_run(tr, te, cfg);
        if (res.log.aborted) throw std::runtime_error("baseline run aborted: " + res.log.abort_reason);
        write_run_dir(a.out + "/baseline", cfg, res, tr,
                      {{"train_path", fs::absolute(a.train).string()}, {"test_path", fs::absolute(a.test).string()}});
        base = LagBaseline::from_result(res);
    }
    const auto points = lag_experiment(tr, te, cfg, base, a.shifts);
    auto out = open_out(a.out + "/lag.csv");
    out << "shift,incoordination,test_error\n";
    std::vector<double> is, es;
    for (const auto& p : points) {
        out << p.shift << ',' << cell(p.incoordination) << ',' << cell(p.test_error) << '\n';
        is.push_back(p.incoordination);
        es.push_back(p.test_error);
        std::cout << "shift " << p.shift << ": I " << p.incoordination << ", error " << p.test_error << "\n";
    }
    if (points.size() >= 2) std::cout << "spearman(I, error) = " << spearman(is, es) << "\n";
    return 0;
}

int cmd_report(const std::vector<std::string>& dirs, const std::string& out_path) {
    // method -> dataset -> values
    std::map<std::string, std::map<std::string, std::vector<double>>> acc;
    std::vector<std::string> datasets;
    for (const auto& d : dirs) {
        const RunSummary s = read_summary(d);
        if (s.aborted) {
            std::cerr << "skipping aborted run " << d << "\n";
            continue;
        }
        const std::string ds = s.dataset.empty() ? "default" : s.dataset;
        if (std::find(datasets.begin(), datasets.end(), ds) == datasets.end()) datasets.push_back(ds);
        acc[s.method][ds].push_back(100.0 * s.final_test_acc);
    }
    std::ostringstream table;
    table << std::left << std::setw(10) << "method";
    for (const auto& ds : datasets) table << " | " << std::setw(20) << ds;
    table << "\n";
    for (const auto& [method, per] : acc) {
        table << std::left << std::setw(10) << method;
        for (const auto& ds : datasets) {
            std::ostringstream c;
            auto it = per.find(ds);
            if (it == per.end()) {
                c << "-";
            } else {
                const auto& v = it->second;
                const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
                double ss = 0.0;
                for (double x : v) ss += (x - mean) * (x - mean);
                const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
                c << std::fixed << std::setprecision(2) << mean << " ± " << sd << " (n=" << v.size() << ")";
            }
            table << " | " << std::setw(20) << c.str();
        }
        table << "\n";
    }
    std::cout << table.str();
    if (!out_path.empty()) open_out(out_path) << table.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Noisy-label training with sparse over-parameterization and coordinated recovery"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen-data", "Generate Gaussian-cluster train/test CSVs");
    g->add_option("--n", gen.n, "total samples")->capture_default_str();
    g->add_option("--k", gen.k, "classes")->capture_default_str();
    g->add_option("--d", gen.d, "feature dimension")->capture_default_str();
    g->add_option("--separation", gen.separation)->capture_default_str();
    g->add_option("--within-std", gen.within_std)->capture_default_str();
    g->add_option("--seed", gen.seed)->capture_default_str();
    g->add_option("--out", gen.out_dir, "output directory")->required();

    CorruptArgs cor;
    auto* c = app.add_subcommand("corrupt", "Inject synthetic label noise");
    c->add_option("--in", cor.in)->required();
    c->add_option("--out", cor.out)->required();
    c->add_option("--record", cor.record, "sidecar CSV (default <out>.record.csv)");
    c->add_option("--noise", cor.kind)->check(CLI::IsMember({"idn", "symmetric"}))->capture_default_str();
    c->add_option("--rate", cor.rate)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    c->add_option("--flip-std", cor.flip_std)->capture_default_str();
    c->add_option("--seed", cor.seed)->capture_default_str();

    TrainArgs tra;
    auto* t = app.add_subcommand("train", "Train one run and write its run directory");
    t->add_option("--train", tra.train)->required();
    t->add_option("--test", tra.test)->required();
    t->add_option("--out", tra.out, "run directory")->required();
    t->add_option("--method", tra.method)->check(CLI::IsMember({"plain-ce", "sop", "csr", "csr-plus"}));
    t->add_option("--config", tra.config, "key=value file");
    t->add_option("--set", tra.sets, "override, key=value")->allow_extra_args(false);
    t->add_option("--tag", tra.tag, "dataset label used by report");
    t->add_flag("--snapshots", tra.snapshots, "keep per-epoch v and M for lag-exp");

    std::string diag_run, diag_out;
    auto* dg = app.add_subcommand("diagnose", "Write plot-ready diagnostics for a run directory");
    dg->add_option("--run", diag_run)->required();
    dg->add_option("--out", diag_out, "default: the run directory");

    std::string sel_run, sel_train, sel_out;
    double sel_sigma = 0.5;
    auto* sl = app.add_subcommand("select", "Partition the training set of a finished run");
    sl->add_option("--run", sel_run)->required();
    sl->add_option("--train", sel_train, "default: the run's training set");
    sl->add_option("--sigma", sel_sigma)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    sl->add_option("--out", sel_out, "default: <run>/partition.csv");

    LagArgs lag;
    auto* lg = app.add_subcommand("lag-exp", "Replay a run with v lagged by each shift");
    lg->add_option("--train", lag.train)->required();
    lg->add_option("--test", lag.test)->required();
    lg->add_option("--out", lag.out)->required();
    lg->add_option("--baseline", lag.baseline, "reuse a run directory trained with --snapshots");
    lg->add_option("--method", lag.method)->check(CLI::IsMember({"sop", "csr"}));
    lg->add_option("--config", lag.config);
    lg->add_option("--set", lag.sets)->allow_extra_args(false);
    lg->add_option("--shifts", lag.shifts)->delimiter(',')->capture_default_str();

    std::vector<std::string> rep_dirs;
    std::string rep_out;
    auto* rp = app.add_subcommand("report", "Aggregate run directories: mean ± std per method");
    rp->add_option("runs", rep_dirs, "run directories")->required();
    rp->add_option("--out", rep_out, "also write the table here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        if (e.get_exit_code() != 0) std::cerr << app.help();
        return 2;
    }

    try {
        if (*g) return cmd_gen(gen);
        if (*c) return cmd_corrupt(cor);
        if (*t) return cmd_train(tra);
        if (*dg) return cmd_diagnose(diag_run, diag_out);
        if (*sl) return cmd_select(sel_run, sel_train, sel_sigma, sel_out);
        if (*lg) return cmd_lag(lag);
        if (*rp) return cmd_report(rep_dirs, rep_out);
    } catch (const ContractViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
