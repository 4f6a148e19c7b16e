#include "cli/experiments.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <thread>

#include <omp.h>
#include <json.hpp>

#include "omcv/analysis.hpp"
#include "omcv/protocols.hpp"

namespace omcv::cli {

namespace {

using nlohmann::json;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& columns) : out_(path) {
        if (!out_) throw std::runtime_error("cannot open output path: " + path);
        for (size_t i = 0; i < columns.size(); ++i)
            out_ << columns[i] << (i + 1 < columns.size() ? "," : "\n");
        cols_ = columns.size();
    }
    void row(const std::vector<std::string>& cells) {
        ++rows_;
        for (size_t i = 0; i < cells.size(); ++i)
            out_ << cells[i] << (i + 1 < cells.size() ? "," : "\n");
    }
    long long rows() const { return rows_; }

  private:
    std::ofstream out_;
    size_t cols_ = 0;
    long long rows_ = 0;
};

json truncation_json(const TruncationReport& rep) {
    json j;
    j["converged"] = rep.converged;
    json tails = json::array();
    for (const auto& mode : rep.per_mode)
        tails.push_back({{"top", mode.top}, {"second", mode.second}});
    j["per_mode_tails"] = tails;
    return j;
}

void write_metadata(const std::string& csv_path, const RawConfig& raw, json extra,
                    long long rows, double wall_ms) {
    extra["experiment"] = raw.experiment;
    extra["config_hash"] = hash_hex(config_hash(raw.source_text));
    extra["rows"] = rows;
    extra["wall_time_ms"] = wall_ms;
    std::ofstream out(csv_path + ".meta.json");
    out << extra.dump(2) << "\n";
}

void parallel_for(int n, const std::function<void(int)>& fn) {
    const int workers = std::max(1, std::min(worker_count(), n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    const int omp_before = omp_get_max_threads();
    omp_set_num_threads(std::max(1, omp_before / workers));
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex error_mutex;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                if (failed.load()) return;
                try {
                    fn(i);
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!failed.exchange(true)) first_error = e.what();
                }
            }
        });
    for (auto& t : pool) t.join();
    omp_set_num_threads(omp_before);
    if (failed.load()) throw NumericalError("sweep worker failed: " + first_error);
}

QState cavity_vacuum(int cutoff) {
    return QState::pure(TensorSpace::single(cutoff, "cavity"), Vector::Unit(cutoff, 0));
}

QState mech_initial(double nbar, int cutoff) {
    if (nbar > 0.0) {
        StateOptions relaxed;
        relaxed.norm_loss_tol = 1.0;  // recorded, not enforced, for protocol starts
        return thermal_state(nbar, cutoff, relaxed);
    }
    return QState::pure(TensorSpace::single(cutoff), Vector::Unit(cutoff, 0));
}

// Steady-state fidelity of the mechanical mode against the cubic phase state.
double cubic_steady_fidelity(double g1, double kappa, double r, double gamma, double nbar,
                             double gamma_m, int cavity_cutoff, int mech_cutoff,
                             double max_time, double checkpoint, double rel_tol) {
    TensorSpace space = TensorSpace::cavity_mechanics(cavity_cutoff, {mech_cutoff});
    DriveSet drives = cubic_drive_couplings(g1, r, gamma);
    OpenSystem sys(rwa_hamiltonian(drives, space),
                   standard_dissipators(space, kappa, RealVector::Constant(1, gamma_m),
                                        RealVector::Constant(1, nbar)));
    SteadyStateOptions opts;
    opts.max_time = max_time;
    opts.checkpoint_interval = checkpoint;
    opts.evolution.rel_tol = rel_tol;
    opts.method = SteadyStateOptions::Method::Integrate;
    QState ss = steady_state(sys, opts);

    StateOptions target_opts;
    target_opts.norm_loss_tol = 1.0;
    QState target = cubic_phase_state(gamma, s_of_r(r), mech_cutoff, target_opts);
    return fidelity_pure_target(target, partial_trace(ss, {1}));
}

int run_cubic_steady(const ConfigView& view, const RawConfig& raw) {
    const auto t0 = std::chrono::steady_clock::now();
    const double g1 = view.number("physical.g1");
    const double kappa = view.number("physical.kappa");
    const double r = view.number("physical.r");
    const double gamma = view.number("physical.gamma");
    const double nbar = view.number("physical.nbar");
    const double gamma_m = view.number("physical.gamma_m");
    const int cavity_cutoff = view.integer("numerics.cavity_cutoff");
    const int mech_cutoff = view.integer("numerics.mech_cutoff");

    const double fid = cubic_steady_fidelity(
        g1, kappa, r, gamma, nbar, gamma_m, cavity_cutoff, mech_cutoff,
        view.number("numerics.max_time"), view.number("numerics.checkpoint_interval"),
        view.number("numerics.rel_tol"));

    CsvWriter csv(view.text("output.path"), {"nbar", "gamma_m", "r", "gamma", "s", "fidelity"});
    csv.row({fmt17(nbar), fmt17(gamma_m), fmt17(r), fmt17(gamma), fmt17(s_of_r(r)), fmt17(fid)});

    json extra;
    extra["cutoffs"] = {cavity_cutoff, mech_cutoff};
    extra["target_norm_loss"] = cubic_phase_norm_loss(gamma, s_of_r(r), mech_cutoff);
    const double wall =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    write_metadata(view.text("output.path"), raw, std::move(extra), csv.rows(), wall);
    return kExitOk;
}

int run_cubic_noise_sweep(const ConfigView& view, const RawConfig& raw) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<double> nbars = view.list("physical.nbar");
    const std::vector<double> gammas_m = view.list("physical.gamma_m");
    const int points = static_cast<int>(nbars.size() * gammas_m.size());
    std::vector<double> fidelity(points, 0.0);

    const double g1 = view.number("physical.g1");
    const double kappa = view.number("physical.kappa");
    const double r = view.number("physical.r");
    const double gamma = view.number("physical.gamma");
    const int cavity_cutoff = view.integer("numerics.cavity_cutoff");
    const int mech_cutoff = view.integer("numerics.mech_cutoff");
    const double max_time = view.number("numerics.max_time");
    const double checkpoint = view.number("numerics.checkpoint_interval");
    const double rel_tol = view.number("numerics.rel_tol");

    parallel_for(points, [&](int idx) {
        const double nbar = nbars[idx / gammas_m.size()];
        const double gm = gammas_m[idx % gammas_m.size()];
        fidelity[idx] = cubic_steady_fidelity(g1, kappa, r, gamma, nbar, gm, cavity_cutoff,
                                              mech_cutoff, max_time, checkpoint, rel_tol);
    });

    CsvWriter csv(view.text("output.path"), {"nbar", "gamma_m", "fidelity"});
    for (int idx = 0; idx < points; ++idx)
        csv.row({fmt17(nbars[idx / gammas_m.size()]), fmt17(gammas_m[idx % gammas_m.size()]),
                 fmt17(fidelity[idx])});

    json extra;
    extra["cutoffs"] = {cavity_cutoff, mech_cutoff};
    extra["target_norm_loss"] = cubic_phase_norm_loss(gamma, s_of_r(r), mech_cutoff);
    extra["workers"] = worker_count();
    const double wall =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    write_metadata(view.text("output.path"), raw, std::move(extra), csv.rows(), wall);
    return kExitOk;
}

int run_two_node_cluster(const ConfigView& view, const RawConfig& raw) {
    const auto t0 = std::chrono::steady_clock::now();
    const double beta = view.number("physical.beta");
    const double tau = view.number("protocol.tau");
    const int c1 = view.integer("numerics.mech_cutoff1");
    const int c2 = view.integer("numerics.mech_cutoff2");
    const int cc = view.integer("numerics.cavity_cutoff");

    ClusterSpec spec = ClusterSpec::two_node(view.number("physical.s1"),
                                             view.number("physical.s2"),
                                             view.number("physical.gamma1"),
                                             view.number("physical.gamma2"));
    SwitchingPlan plan{spec, beta, tau / 2.0, view.boolean("protocol.precool"),
                       view.number("protocol.precool_duration")};

    PhysicalParams params = PhysicalParams::rates(
        view.number("physical.kappa"),
        RealVector::Constant(2, view.number("physical.gamma_m")),
        (RealVector(2) << view.number("physical.nbar1"), view.number("physical.nbar2"))
            .finished());

    QState initial = tensor(tensor(cavity_vacuum(cc), mech_initial(view.number("physical.nbar1"), c1)),
                            mech_initial(view.number("physical.nbar2"), c2));

    EvolutionOptions evo;
    evo.rel_tol = view.number("numerics.rel_tol");
    evo.sample_interval = view.number("numerics.sample_interval");
    if (evo.sample_interval <= 0.0) evo.sample_interval = tau / 200.0;

    StateOptions target_opts;
    target_opts.norm_loss_tol = view.number("numerics.norm_loss_tol");
    SwitchingResult run = run_switching(plan, initial, params, evo, target_opts);

    CsvWriter csv(view.text("output.path"), {"time", "phase", "fidelity", "d_occupation"});
    for (size_t k = 0; k < run.times.size(); ++k)
        csv.row({fmt17(run.times[k]), std::to_string(run.phase_labels[k]),
                 fmt17(run.fidelity[k]), fmt17(run.collective_occupation[k])});

    json extra;
    extra["cutoffs"] = {cc, c1, c2};
    extra["final_fidelity"] = run.final_fidelity;
    extra["max_trace_drift"] = run.diagnostics.max_trace_drift;
    extra["steps"] = run.diagnostics.steps;
    extra["truncation"] = truncation_json(truncation_report(run.final_state));
    const double wall =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    write_metadata(view.text("output.path"), raw, std::move(extra), csv.rows(), wall);
    return kExitOk;
}

int run_rwa_check(const ConfigView& view, const RawConfig& raw) {
    const auto t0 = std::chrono::steady_clock::now();
    const double g1 = view.number("physical.g1");
    const double kappa = view.number("physical.kappa");
    const double r = view.number("physical.r");
    const double gamma = view.number("physical.gamma");
    const double ratio_R = view.number("physical.R");
    const double Omega = view.number("physical.Omega");
    const int cc = view.integer("numerics.cavity_cutoff");
    const int mc = view.integer("numerics.mech_cutoff");
    const double t_final = view.number("numerics.t_final");

    TensorSpace space = TensorSpace::cavity_mechanics(cc, {mc});
    DriveSet drives = cubic_drive_couplings(g1, r, gamma);
    TimeDependentHamiltonian h = full_hamiltonian_with_crt(drives, ratio_R, Omega, space);
    OpenSystem sys(h, standard_dissipators(space, kappa, RealVector::Zero(1),
                                           RealVector::Zero(1)));

    StateOptions target_opts;
    target_opts.norm_loss_tol = 1.0;
    QState target = cubic_phase_state(gamma, s_of_r(r), mc, target_opts);
    const Vector& target_psi = target.vector();

    std::vector<double> times, fids;
    EvolutionOptions evo;
    evo.rel_tol = view.number("numerics.rel_tol");
    evo.sample_interval = view.number("numerics.sample_interval");
    if (evo.sample_interval <= 0.0) evo.sample_interval = t_final / 200.0;
    evo.sample_hook = [&](double t, const Matrix& rho) {
        Matrix red = partial_trace_dense(rho, space, {1});
        times.push_back(t);
        fids.push_back(std::sqrt(std::max(0.0, target_psi.dot(red * target_psi).real())));
    };
    QState start = QState::pure(space, Vector::Unit(space.dim(), 0));
    EvolutionResult res = evolve(sys, start, t_final, {}, evo);

    CsvWriter csv(view.text("output.path"), {"time", "fidelity"});
    for (size_t k = 0; k < times.size(); ++k) csv.row({fmt17(times[k]), fmt17(fids[k])});

    json extra;
    extra["cutoffs"] = {cc, mc};
    extra["final_fidelity"] = fids.back();
    extra["rwa_ratio_general"] = rwa_validity(drives, ratio_R, Omega).ratio;
    extra["rwa_ratio_cubic"] = rwa_validity_cubic(g1, ratio_R, Omega).ratio;
    extra["max_trace_drift"] = res.diagnostics.max_trace_drift;
    extra["truncation"] = truncation_json(truncation_report(res.final_state));
    const double wall =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    write_metadata(view.text("output.path"), raw, std::move(extra), csv.rows(), wall);
    return kExitOk;
}

int run_cubic_gate(const ConfigView& view, const RawConfig& raw) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<double> nbars = view.list("physical.nbar");
    const std::vector<double> gammas_m = view.list("physical.gamma_m");

    CubicGateOptions opts;
    const int c1 = view.integer("numerics.mech_cutoff1");
    const int c2 = view.integer("numerics.mech_cutoff2");
    if (c1 > 0 && c2 > 0) opts.mech_cutoffs = {c1, c2};
    opts.n_samples = view.integer("numerics.n_samples");
    opts.seed = view.uint64("numerics.seed");
    opts.grid_points = view.integer("numerics.grid_points");
    opts.state_options.norm_loss_tol = view.number("numerics.norm_loss_tol");
    const std::string prep = view.text("physical.preparation");
    if (prep == "switching")
        opts.preparation = CubicGateOptions::Preparation::Switching;
    else if (prep != "direct")
        throw std::runtime_error("physical.preparation must be 'direct' or 'switching'");
    opts.beta = view.number("physical.beta");
    opts.kappa = view.number("physical.kappa");
    opts.cavity_cutoff = view.integer("numerics.cavity_cutoff");
    opts.step_duration = view.number("protocol.step_duration");
    opts.precool = view.boolean("protocol.precool");
    opts.precool_duration = view.number("protocol.precool_duration");

    const double s = view.number("physical.s");
    const double gamma = view.number("physical.gamma");
    const int points = static_cast<int>(nbars.size() * gammas_m.size());

    json extra;
    long long rows = 0;
    if (points == 1) {
        opts.nbar = RealVector::Constant(2, nbars[0]);
        opts.Gamma_m = RealVector::Constant(2, gammas_m[0]);
        CubicGateResult res = cubic_gate_pipeline(s, gamma, opts);
        CsvWriter csv(view.text("output.path"), {"sample", "m", "density", "fidelity"});
        for (size_t k = 0; k < res.samples.size(); ++k)
            csv.row({std::to_string(k), fmt17(res.samples[k].m), fmt17(res.samples[k].density),
                     fmt17(res.samples[k].fidelity)});
        rows = csv.rows();
        extra["average_fidelity"] = res.average_fidelity;
    } else {
        std::vector<double> avg(points, 0.0);
        parallel_for(points, [&](int idx) {
            CubicGateOptions local = opts;
            local.nbar = RealVector::Constant(2, nbars[idx / gammas_m.size()]);
            local.Gamma_m = RealVector::Constant(2, gammas_m[idx % gammas_m.size()]);
            avg[idx] = cubic_gate_pipeline(s, gamma, local).average_fidelity;
        });
        CsvWriter csv(view.text("output.path"), {"nbar", "gamma_m", "average_fidelity"});
        for (int idx = 0; idx < points; ++idx)
            csv.row({fmt17(nbars[idx / gammas_m.size()]), fmt17(gammas_m[idx % gammas_m.size()]),
                     fmt17(avg[idx])});
        rows = csv.rows();
    }

    extra["n_samples"] = opts.n_samples;
    extra["seed"] = opts.seed;
    const double wall =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    write_metadata(view.text("output.path"), raw, std::move(extra), rows, wall);
    return kExitOk;
}

int run_stability_scan(const ConfigView& view, const RawConfig& raw) {
    const auto t0 = std::chrono::steady_clock::now();
    const int n = view.integer("scan.n_samples");
    const std::uint64_t seed = view.uint64("scan.seed");
    const double kappa = view.number("physical.kappa");
    const double Gamma = view.number("physical.Gamma");
    const double amp = view.number("scan.max_amplitude");

    CsvWriter csv(view.text("output.path"),
                  {"re_g1", "im_g1", "re_g2", "im_g2", "rh_margin", "stable_rh", "stable_eig",
                   "max_re_eig"});
    auto next_uniform = [](std::uint64_t& state) {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return static_cast<double>(z >> 11) * 0x1.0p-53;
    };
    std::uint64_t state = seed;
    int agreements = 0, checked = 0;
    for (int k = 0; k < n; ++k) {
        const Complex g1(amp * (2.0 * next_uniform(state) - 1.0),
                         amp * (2.0 * next_uniform(state) - 1.0));
        const Complex g2(amp * (2.0 * next_uniform(state) - 1.0),
                         amp * (2.0 * next_uniform(state) - 1.0));
        StabilityReport rep = drift_matrix(DriveSet::single(g1, g2), kappa, Gamma);
        csv.row({fmt17(g1.real()), fmt17(g1.imag()), fmt17(g2.real()), fmt17(g2.imag()),
                 fmt17(rep.rh_margin), rep.stable_rh ? "1" : "0", rep.stable_eig ? "1" : "0",
                 fmt17(rep.eigen_real_parts.maxCoeff())});
        if (std::abs(rep.rh_margin) > 1e-9) {
            ++checked;
            if (rep.stable_rh == rep.stable_eig) ++agreements;
        }
    }

    json extra;
    extra["seed"] = seed;
    extra["non_marginal"] = checked;
    extra["agreements"] = agreements;
    const double wall =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    write_metadata(view.text("output.path"), raw, std::move(extra), csv.rows(), wall);
    return kExitOk;
}

}  // namespace

int worker_count() {
    if (const char* env = std::getenv("OMCV_WORKERS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

int run_experiment(const RawConfig& config) {
    ValidationReport report = validate_against_schema(config);
    if (!report.ok()) {
        for (const auto& err : report.errors) std::cerr << "config error: " << err << "\n";
        return kExitConfig;
    }
    ConfigView view(config);
    try {
        if (config.experiment == "cubic-steady") return run_cubic_steady(view, config);
        if (config.experiment == "cubic-noise-sweep") return run_cubic_noise_sweep(view, config);
        if (config.experiment == "two-node-cluster") return run_two_node_cluster(view, config);
        if (config.experiment == "rwa-check") return run_rwa_check(view, config);
        if (config.experiment == "cubic-gate") return run_cubic_gate(view, config);
        if (config.experiment == "stability-scan") return run_stability_scan(view, config);
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const TruncationError& e) {
        std::cerr << "truncation failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const DomainError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    std::cerr << "config error: unknown experiment " << config.experiment << "\n";
    return kExitConfig;
}

bool validate_and_report(const RawConfig& config) {
    ValidationReport report = validate_against_schema(config);
    for (const auto& err : report.errors) std::cout << "error: " << err << "\n";

    bool physics_ok = true;
    if (report.ok()) {
        ConfigView view(config);
        const bool has_r = config.has("physical.r");
        if (has_r) {
            const double r = view.number("physical.r");
            if (r < 0.0 || r >= 1.0) {
                std::cout << "error: physical.r = " << r
                          << " violates the stability window [0, 1)\n";
                physics_ok = false;
            } else {
                const double g1 =
                    config.has("physical.g1") ? view.number("physical.g1") : 1.0;
                DriveSet drives = cubic_drive_couplings(g1, r, view.number("physical.gamma"));
                StabilityReport stab =
                    drift_matrix(drives, view.number("physical.kappa"), 0.0);
                std::cout << "stability: |g1| > |g2| " << (stab.stable_rh ? "holds" : "fails")
                          << ", rh margin " << stab.rh_margin << "\n";
                physics_ok = physics_ok && stab.stable_rh;
            }
        }
        if (config.experiment == "rwa-check") {
            const double margin = view.number("numerics.rwa_margin");
            RwaValidityReport rwa = rwa_validity_cubic(
                view.number("physical.g1"), view.number("physical.R"),
                view.number("physical.Omega"), margin);
            std::cout << "rwa margin: worst coupling ratio " << rwa.ratio << " vs margin "
                      << margin << " -> " << (rwa.pass ? "pass" : "WARNING: fails") << "\n";
            if (!rwa.pass) std::cout << "warning: counter-rotating terms will be significant\n";
        }
    }
    const bool ok = report.ok() && physics_ok;
    std::cout << (ok ? "valid" : "invalid") << ": experiment '" << config.experiment << "'\n";
    return ok;
}

}  // namespace omcv::cli
