// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "csr/collab.hpp"
#include "csr/csr_plus.hpp"
#include "csr/dataset.hpp"
#include "csr/diagnostics.hpp"
#include "csr/lag.hpp"
#include "csr/noise_synth.hpp"
#include "csr/objective.hpp"
#include "csr/run_io.hpp"
#include "csr/selection.hpp"
#include "csr/trainer.hpp"

using namespace csr;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr int kSeeds = 5;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(prec);
    os << v;
    return os.str();
}

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1e", v);
    return buf;
}

double mean(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string join(const std::vector<double>& v, int prec = 3) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i], prec);
    return s;
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

// The desk-scale setup shared by the directional criteria.
struct DeskData {
    Dataset train_set, test_set;
};

DeskData desk_data(std::uint64_t seed) {
    auto [tr, te] = make_gaussian_clusters(5000, 10, 20, 4.0, 1.0, seed);
    const auto rec = idn_noise(tr.x, tr.y, 0.4, 10, seed);
    tr.y = rec.noisy;
    return {std::move(tr), std::move(te)};
}

TrainConfig desk_config(Method m, std::uint64_t seed) {
    TrainConfig c;
    c.method = m;
    c.seed = seed;
    c.hidden = {64, 64};
    c.tau_m = 0.01;
    c.lr_u = 2.0;
    // CSR+ only: stronger view than the library default
    c.strong_std = 0.5;
    c.mask_prob = 0.4;
    return c;
}

// ---- 1: finite differences on the batch objective ----

double rel_err(const std::vector<double>& a, const std::vector<double>& n) {
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - n[i]) * (a[i] - n[i]);
        na += a[i] * a[i];
        nn += n[i] * n[i];
    }
    return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1e-12});
}

Outcome check_gradients() {
    const auto t0 = Clock::now();
    constexpr double h = 1e-6;
    constexpr std::size_t B = 4, K = 4, D = 5;
    std::mt19937_64 rng(20240);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::uniform_real_distribution<double> pos(0.0, 1.0);
    std::map<std::string, double> worst{{"theta", 0}, {"u", 0}, {"v", 0}, {"M", 0}, {"gamma", 0}};
    BatchGradientKernel kernel(false);

    int done = 0, rejected = 0;
    while (done < 20) {
        const Mlp model = Mlp::random({D, 6, K}, rng());
        Matrix x(B, D), y(B, K), u(B, K), v(B, K);
        for (double& e : x.data) e = unif(rng);
        for (std::size_t r = 0; r < B; ++r) y(r, rng() % K) = 1.0;
        for (double& e : u.data) e = 0.5 * unif(rng);
        for (double& e : v.data) e = 0.2 * unif(rng);
        CollabState cs = CollabState::init(K, 0.0, 0.0);
        for (double& e : cs.m.data) e += 0.3 * unif(rng);
        cs.gamma = *std::max_element(cs.m.data.begin(), cs.m.data.end()) + 0.2 + pos(rng);
        std::vector<double> w(B);
        for (double& e : w) e = pos(rng);

        auto eval = [&](const Mlp& mdl, const Matrix& uu, const Matrix& vv, const CollabState& st, bool* floored) {
            const Matrix mbar = normalize_matrix(st);
            GradientSet g(mdl);
            const auto obj = csr_batch_objective(mdl, x, y, &uu, &vv, &mbar, w, kernel, g);
            if (floored) {
                *floored = false;
                const Matrix f = predict(mdl, x);
                for (std::size_t r = 0; r < B; ++r) {
                    const auto s = build_s(uu.row(r), vv.row(r), y.row(r));
                    const auto cp = corrected_prediction(f.row(r), mbar, s);
                    for (bool b : cp.floored) *floored = *floored || b;
                    // the MSE path is piecewise constant in argmax(f); stay away from ties
                    auto row = std::vector<double>(f.row(r).begin(), f.row(r).end());
                    std::sort(row.rbegin(), row.rend());
                    if (row[0] - row[1] < 1e-3) *floored = true;
                }
            }
            return std::make_pair(obj, g);
        };
        // weighted CE drives theta and M; plain CE drives u; MSE drives v
        auto wce = [&](const Mlp& mdl, const Matrix& uu, const CollabState& st) {
            const Matrix mbar = normalize_matrix(st);
            const Matrix f = predict(mdl, x);
            double s = 0.0;
            for (std::size_t r = 0; r < B; ++r)
                s += w[r] * csr_sample_losses(f.row(r), mbar, build_s(uu.row(r), v.row(r), y.row(r)), y.row(r)).ce;
            return s / B;
        };

        bool floored = false;
        const auto [obj, g_theta] = eval(model, u, v, cs, &floored);
        if (floored) {
            ++rejected;
            continue;
        }

        // theta
        std::vector<double> num(model.num_params());
        for (std::size_t p = 0; p < model.num_params(); ++p) {
            Mlp a = model, b = model;
            a.params()[p] += h;
            b.params()[p] -= h;
            num[p] = (wce(a, u, cs) - wce(b, u, cs)) / (2 * h);
        }
        worst["theta"] = std::max(worst["theta"], rel_err(g_theta.values, num));

        // u
        std::vector<double> an_u(obj.d_u.data), num_u(B * K);
        for (std::size_t i = 0; i < B * K; ++i) {
            Matrix a = u, b = u;
            a.data[i] += h;
            b.data[i] -= h;
            num_u[i] = (eval(model, a, v, cs, nullptr).first.ce_sum - eval(model, b, v, cs, nullptr).first.ce_sum) /
                       (2 * h * B);
        }
        worst["u"] = std::max(worst["u"], rel_err(an_u, num_u));

        // v
        std::vector<double> num_v(B * K);
        for (std::size_t i = 0; i < B * K; ++i) {
            Matrix a = v, b = v;
            a.data[i] += h;
            b.data[i] -= h;
            num_v[i] = (eval(model, u, a, cs, nullptr).first.mse_sum - eval(model, u, b, cs, nullptr).first.mse_sum) /
                       (2 * h * B);
        }
        worst["v"] = std::max(worst["v"], rel_err(obj.d_v.data, num_v));

        // M and gamma through the normalization
        const auto cg = collab_gradient(cs, obj.d_mbar);
        std::vector<double> num_m(K * K);
        for (std::size_t i = 0; i < K * K; ++i) {
            CollabState a = cs, b = cs;
            a.m.data[i] += h;
            b.m.data[i] -= h;
            num_m[i] = (wce(model, u, a) - wce(model, u, b)) / (2 * h);
        }
        worst["M"] = std::max(worst["M"], rel_err(cg.d_m.data, num_m));
        CollabState a = cs, b = cs;
        a.gamma += h;
        b.gamma -= h;
        const double num_g = (wce(model, u, a) - wce(model, u, b)) / (2 * h);
        worst["gamma"] = std::max(worst["gamma"], rel_err({cg.d_gamma}, {num_g}));
        ++done;
    }
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = secs < 60.0;
    o.detail = "max rel err";
    for (const auto& [k, e] : worst) {
        o.pass = o.pass && e < 1e-5;
        o.detail += " " + k + "=" + sci(e);
    }
    o.detail += "; 20 instances (" + std::to_string(rejected) + " resampled), " + fmt(secs, 1) + "s";
    return o;
}

// ---- 2: reduction to plain CE ----

Outcome check_reduction() {
    const auto d = desk_data(0);
    TrainConfig ce = desk_config(Method::plain_ce, 0);
    ce.epochs = 30;
    TrainConfig csr = ce;
    csr.method = Method::csr;
    csr.tau_m = 0.0;
    csr.lr_gamma = 0.0;
    csr.force_omega_one = true;
    csr.freeze_noise = true;
    csr.noise_init_scale = 0.0;
    const auto a = train(d.train_set, d.test_set, ce);
    const auto b = train(d.train_set, d.test_set, csr);
    bool same = a.log.epochs.size() == b.log.epochs.size() && !a.log.epochs.empty();
    std::size_t first_diff = a.log.epochs.size();
    for (std::size_t t = 0; same && t < a.log.epochs.size(); ++t)
        if (a.log.epochs[t].train_loss != b.log.epochs[t].train_loss) {
            same = false;
            first_diff = t;
        }
    Outcome o;
    o.pass = same && a.model == b.model;
    o.detail = same ? std::to_string(a.log.epochs.size()) + " epochs, losses and final weights identical"
                    : "first differing epoch " + std::to_string(first_diff);
    return o;
}

// ---- 3: incoordination properties ----

Outcome check_incoordination() {
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_int_distribution<int> len(2, 60);
    double worst_l1 = 0.0, worst_sym = 0.0, worst_id = 0.0, worst_dis = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const int n = len(rng);
        std::vector<double> za(n), zb(n);
        for (double& x : za) x = (unif(rng) - 0.5) * std::exp(4 * unif(rng));
        for (double& x : zb) x = (unif(rng) - 0.5) * std::exp(4 * unif(rng));
        const auto ga = grad_proportion(za), gb = grad_proportion(zb);
        double l1 = 0.0;
        for (int t = 0; t < n; ++t) l1 += std::abs(ga[t] - gb[t]);
        const double iab = incoordination(ga, gb);
        worst_l1 = std::max(worst_l1, std::abs(iab - 0.5 * l1));
        worst_sym = std::max(worst_sym, std::abs(iab - incoordination(gb, ga)));
        worst_id = std::max(worst_id, std::abs(incoordination(ga, ga)));
        // disjoint supports: split the index range
        const int cut = 1 + static_cast<int>(rng() % static_cast<unsigned>(n - 1));
        std::vector<double> da(n, 0.0), db(n, 0.0);
        for (int t = 0; t < n; ++t) (t < cut ? da : db)[t] = za[t] != 0.0 ? za[t] : 1.0;
        worst_dis = std::max(worst_dis, std::abs(incoordination(grad_proportion(da), grad_proportion(db)) - 1.0));
    }
    Outcome o;
    o.pass = worst_id == 0.0 && worst_sym == 0.0 && worst_l1 < 1e-12 && worst_dis < 1e-12;
    o.detail = "1000 pairs, max deviations: identical " + sci(worst_id) + ", symmetry " + sci(worst_sym) +
               ", half-L1 " + sci(worst_l1) + ", disjoint " + sci(worst_dis);
    return o;
}

// ---- 4, 5, 7: method comparison on the desk setup ----

struct SeedRun {
    double acc = 0.0, nfr = 0.0;
    double prec_u = -1.0, prec_loss = -1.0, prec_joint = -1.0;
    bool partition_exact = true;
};

struct Comparison {
    std::map<Method, std::vector<SeedRun>> runs;
    double seconds = 0.0;
};

SeedRun summarize(const TrainResult& r, const Dataset& tr) {
    SeedRun s;
    const auto& last = r.log.epochs.back();
    s.acc = last.test_acc;
    s.nfr = last.nfr;
    s.prec_u = last.prec_small_u;
    s.prec_loss = last.prec_small_loss;
    s.prec_joint = last.prec_joint_clean;
    const auto n = static_cast<long>(tr.size());
    for (const auto& e : r.log.epochs) s.partition_exact = s.partition_exact && e.n_clean + e.n_hard + e.n_noisy == n;
    // recompute the final partition from the returned state
    std::vector<std::size_t> universe(tr.size());
    std::iota(universe.begin(), universe.end(), std::size_t{0});
    const auto part = joint_partition(small_loss_select(r.train_losses, 0.5),
                                      small_u_select(r.noise, tr.y, 0.5), universe);
    s.partition_exact = s.partition_exact && is_exact_partition(part, universe) && !r.log.aborted;
    return s;
}

Comparison run_comparison() {
    Comparison c;
    const auto t0 = Clock::now();
    for (int seed = 0; seed < kSeeds; ++seed) {
        const auto d = desk_data(seed);
        for (Method m : {Method::plain_ce, Method::sop, Method::csr}) {
            const auto r = train(d.train_set, d.test_set, desk_config(m, seed));
            c.runs[m].push_back(summarize(r, d.train_set));
        }
    }
    c.seconds = seconds_since(t0);
    return c;
}

std::vector<double> field(const std::vector<SeedRun>& runs, double SeedRun::*f) {
    std::vector<double> out;
    for (const auto& r : runs) out.push_back(r.*f);
    return out;
}

Outcome check_ordering(const Comparison& c) {
    const double ce = mean(field(c.runs.at(Method::plain_ce), &SeedRun::acc));
    const double sop = mean(field(c.runs.at(Method::sop), &SeedRun::acc));
    const double csr = mean(field(c.runs.at(Method::csr), &SeedRun::acc));
    Outcome o;
    o.pass = csr - sop >= 0.01 && sop - ce >= 0.01 && c.seconds < 15 * 60;
    o.detail = "mean acc CSR " + fmt(csr) + " SOP " + fmt(sop) + " CE " + fmt(ce) + " over " +
               std::to_string(kSeeds) + " seeds, " + fmt(c.seconds, 0) + "s";
    return o;
}

Outcome check_nfr(const Comparison& c) {
    const auto csr = field(c.runs.at(Method::csr), &SeedRun::nfr);
    const auto sop = field(c.runs.at(Method::sop), &SeedRun::nfr);
    int wins = 0;
    for (int s = 0; s < kSeeds; ++s) wins += csr[s] < sop[s] ? 1 : 0;
    Outcome o;
    o.pass = wins == kSeeds;
    o.detail = "NFR CSR [" + join(csr) + "] vs SOP [" + join(sop) + "], " + std::to_string(wins) + "/5 lower";
    return o;
}

Outcome check_selection(const Comparison& c) {
    const auto& runs = c.runs.at(Method::csr);
    bool exact = true, pu_ok = true, joint_ok = true;
    for (const auto& m : c.runs)
        for (const auto& r : m.second) exact = exact && r.partition_exact;
    for (const auto& r : runs) {
        pu_ok = pu_ok && r.prec_u >= 0.85;
        joint_ok = joint_ok && r.prec_joint >= r.prec_loss;
    }
    Outcome o;
    o.pass = exact && pu_ok && joint_ok;
    o.detail = std::string("partitions ") + (exact ? "exact" : "NOT exact") + "; CSR small-u precision [" +
               join(field(runs, &SeedRun::prec_u)) + "], joint [" + join(field(runs, &SeedRun::prec_joint)) +
               "] vs small-loss [" + join(field(runs, &SeedRun::prec_loss)) + "]";
    return o;
}

// ---- 6: lag experiment ----

Outcome check_lag() {
    const auto t0 = Clock::now();
    const std::vector<int> shifts{0, 5, 10, 20};
    int positive = 0;
    std::vector<double> rhos;
    for (int seed = 0; seed < kSeeds; ++seed) {
        const auto d = desk_data(seed);
        const TrainConfig cfg = desk_config(Method::sop, seed);
        const auto base = LagBaseline::from_result(lag_baseline_run(d.train_set, d.test_set, cfg));
        const auto pts = lag_experiment(d.train_set, d.test_set, cfg, base, shifts);
        std::vector<double> inc, err;
        for (const auto& p : pts) {
            inc.push_back(p.incoordination);
            err.push_back(p.test_error);
        }
        const double rho = spearman(inc, err);
        rhos.push_back(rho);
        if (rho > 0.0) ++positive;
    }
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = positive >= 4 && secs < 20 * 60;
    o.detail = "Spearman(I, e) per seed [" + join(rhos, 2) + "], " + std::to_string(positive) + "/5 positive, " +
               fmt(secs, 0) + "s";
    return o;
}

// ---- 8: GMM oracle ----

Outcome check_gmm() {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> a(0.0, 0.1), b(5.0, 0.1);
    std::vector<double> x;
    for (int i = 0; i < 500; ++i) x.push_back(a(rng));
    for (int i = 0; i < 500; ++i) x.push_back(b(rng));
    std::shuffle(x.begin(), x.end(), rng);
    const auto g = gmm_fit(x, 100, 1e-10, 8);
    bool mono = !g.loglik_trace.empty();
    for (std::size_t i = 1; i < g.loglik_trace.size(); ++i)
        mono = mono && g.loglik_trace[i] >= g.loglik_trace[i - 1] - 1e-9 * std::abs(g.loglik_trace[i - 1]);
    Outcome o;
    o.pass = std::abs(g.mean[0]) <= 0.1 && std::abs(g.mean[1] - 5.0) <= 0.1 && std::abs(g.weight[0] - 0.5) <= 0.05 &&
             std::abs(g.weight[1] - 0.5) <= 0.05 && mono;
    o.detail = "means " + fmt(g.mean[0]) + "/" + fmt(g.mean[1]) + " weights " + fmt(g.weight[0], 3) + "/" +
               fmt(g.weight[1], 3) + ", log-lik " + (mono ? "nondecreasing" : "DECREASED") + " over " +
               std::to_string(g.loglik_trace.size()) + " iterations";
    return o;
}

// ---- 9: CSR+ and its ablations ----

Outcome check_plus(const Comparison& c) {
    const auto t0 = Clock::now();
    struct Arm {
        std::string name;
        bool cr, mix, corr;
    };
    const std::vector<Arm> arms{{"full", true, true, true},
                                {"no-consistency", false, true, true},
                                {"no-mixup", true, false, true},
                                {"no-correction", true, true, false}};
    std::map<std::string, std::vector<double>> acc;
    for (int seed = 0; seed < kSeeds; ++seed) {
        const auto d = desk_data(seed);
        for (const auto& arm : arms) {
            TrainConfig cfg = desk_config(Method::csr_plus, seed);
            cfg.plus_consistency = arm.cr;
            cfg.plus_mixup = arm.mix;
            cfg.plus_correction = arm.corr;
            acc[arm.name].push_back(train_plus(d.train_set, d.test_set, cfg).log.epochs.back().test_acc);
        }
    }
    const double csr = mean(field(c.runs.at(Method::csr), &SeedRun::acc));
    const double full = mean(acc["full"]);
    Outcome o;
    o.pass = full >= csr + 0.02;
    o.detail = "CSR+ " + fmt(full) + " vs CSR " + fmt(csr);
    for (std::size_t i = 1; i < arms.size(); ++i) {
        const double m = mean(acc[arms[i].name]);
        o.pass = o.pass && m < full;
        o.detail += ", " + arms[i].name + " " + fmt(m);
    }
    o.detail += "; " + fmt(seconds_since(t0), 0) + "s";
    return o;
}

// ---- 10: noise synthesis ----

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

Outcome check_noise_synth(const fs::path& work) {
    auto [tr, te] = make_gaussian_clusters(12500, 10, 20, 4.0, 1.0, 10);
    Outcome o;
    o.pass = tr.size() == 10000;
    o.detail = "N=" + std::to_string(tr.size()) + " achieved";
    for (double tau : {0.2, 0.4, 0.6}) {
        const auto rec = idn_noise(tr.x, tr.y, tau, 10, 10);
        o.pass = o.pass && std::abs(rec.achieved_rate - tau) <= 0.03;
        o.detail += " " + fmt(tau, 1) + "->" + fmt(rec.achieved_rate);
    }
    std::string bytes[2];
    for (int rep = 0; rep < 2; ++rep) {
        Dataset d = tr;
        d.y_clean = d.y;
        d.y = idn_noise(tr.x, tr.y, 0.4, 10, 10).noisy;
        const auto path = work / ("idn_" + std::to_string(rep) + ".csv");
        save_csv(d, path.string());
        bytes[rep] = slurp(path);
    }
    const bool same = !bytes[0].empty() && bytes[0] == bytes[1];
    o.pass = o.pass && same;
    o.detail += same ? "; repeated corruption byte-identical" : "; repeated corruption DIFFERS";
    return o;
}

// ---- 11: repeated training ----

Outcome check_determinism(const fs::path& work) {
    const auto d = desk_data(0);
    Outcome o;
    o.pass = true;
    const int threads = omp_get_max_threads();
    for (Method m : {Method::csr, Method::csr_plus}) {
        TrainConfig cfg = desk_config(m, 0);
        cfg.epochs = 25;
        std::string bytes[2];
        for (int rep = 0; rep < 2; ++rep) {
            // second repetition under a different thread count
            omp_set_num_threads(rep == 0 ? threads : threads + 2);
            const auto r = train(d.train_set, d.test_set, cfg);
            const auto dir = work / ("det_" + to_string(m) + "_" + std::to_string(rep));
            write_run_dir(dir.string(), cfg, r, d.train_set, {});
            bytes[rep] = slurp(dir / "metrics.csv");
        }
        omp_set_num_threads(threads);
        const bool same = !bytes[0].empty() && bytes[0] == bytes[1];
        o.pass = o.pass && same;
        o.detail += (o.detail.empty() ? "" : ", ") + to_string(m) + (same ? " identical" : " DIFFERS");
    }
    o.detail += " (metrics.csv, 25 epochs, thread counts " + std::to_string(threads) + " and " +
                std::to_string(threads + 2) + ")";
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance suite"};
    std::string workdir = (fs::temp_directory_path() / "csr_acceptance").string();
    std::vector<int> only;
    app.add_option("--workdir", workdir, "scratch directory for files written by the checks");
    app.add_option("--only", only, "run a subset of criteria")->delimiter(',');
    CLI11_PARSE(app, argc, argv);
    fs::create_directories(workdir);
    const fs::path work(workdir);

    const std::set<int> wanted(only.begin(), only.end());
    auto want = [&](int id) { return wanted.empty() || wanted.count(id) > 0; };

    int failures = 0;
    auto report = [&](int id, const std::string& name, const Outcome& o) {
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << o.detail << std::endl;
        if (!o.pass) ++failures;
    };
    auto guarded = [&](int id, const std::string& name, auto&& fn) {
        if (!want(id)) return;
        try {
            report(id, name, fn());
        } catch (const std::exception& e) {
            report(id, name, Outcome{false, std::string("exception: ") + e.what()});
        }
    };

    guarded(1, "gradient correctness", check_gradients);
    guarded(2, "reduction to plain CE", check_reduction);
    guarded(3, "incoordination properties", check_incoordination);

    std::optional<Comparison> cmp;
    if (want(4) || want(5) || want(7) || want(9)) {
        try {
            cmp = run_comparison();
        } catch (const std::exception& e) {
            std::cerr << "comparison runs failed: " << e.what() << "\n";
        }
    }
    auto with_cmp = [&](auto check) {
        return [&, check] {
            if (!cmp) throw std::runtime_error("comparison runs unavailable");
            return check(*cmp);
        };
    };
    guarded(4, "accuracy ordering CSR >= SOP >= CE", with_cmp(check_ordering));
    guarded(5, "noise fitting rate CSR < SOP", with_cmp(check_nfr));
    guarded(6, "lag experiment trend", check_lag);
    guarded(7, "sample selection", with_cmp(check_selection));
    guarded(8, "GMM oracle", check_gmm);
    guarded(9, "CSR+ gain and ablations", with_cmp(check_plus));
    guarded(10, "noise synthesis", [&] { return check_noise_synth(work); });
    guarded(11, "repeated train determinism", [&] { return check_determinism(work); });

    std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
    return failures == 0 ? 0 : 1;
}
