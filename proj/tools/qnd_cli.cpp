// Command-line front end: simulate, calibrate, decode, benchmark, fit-t1,
// fit-prep-error. All outputs are machine-readable (JSON/CSV) and every
// artifact embeds the effective configuration and master seed.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "qnd/experiments.hpp"
#include "qnd/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qnd;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

constexpr const char* kVersion = "0.1.0";

struct CliError : std::runtime_error {
    int code;
    CliError(int code, const std::string& message) : std::runtime_error(message), code(code) {}
};

void ensure_out_dir(const fs::path& dir, bool force) {
    if (fs::exists(dir)) {
        if (!fs::is_directory(dir)) throw CliError(kExitData, "output path is not a directory");
        if (!force && !fs::is_empty(dir))
            throw CliError(kExitData,
                           "output directory is not empty (use --force to overwrite): " +
                               dir.string());
    } else {
        fs::create_directories(dir);
    }
}

void write_json_file(const fs::path& path, const json& obj) {
    io::write_text_file(path.string(), obj.dump(2) + "\n");
}

json manifest_for(const std::string& command, const json& config, std::uint64_t master_seed) {
    return json{{"tool", "qnd"},
                {"version", kVersion},
                {"command", command},
                {"master_seed", master_seed},
                {"config", config}};
}

// ---- simulate ----

struct SimulateJob {
    SimConfig sim;
    std::size_t n_trials = 100;
    std::size_t n_cycles = 15;
    std::string prepared_state = "both";  // "0", "1", or "both"
};

SimulateJob simulate_job_from_json(const json& obj) {
    io::require_keys(obj, {"sim", "n_trials", "n_cycles", "prepared_state"}, "simulate config");
    SimulateJob job;
    if (obj.contains("sim")) job.sim = io::sim_config_from_json(obj.at("sim"));
    io::read_field(obj, "n_trials", job.n_trials);
    io::read_field(obj, "n_cycles", job.n_cycles);
    io::read_field(obj, "prepared_state", job.prepared_state);
    if (job.prepared_state != "0" && job.prepared_state != "1" && job.prepared_state != "both")
        throw io::ConfigError("simulate config: prepared_state must be '0', '1', or 'both'");
    if (job.n_trials == 0) throw io::ConfigError("simulate config: n_trials must be >= 1");
    if (job.n_cycles == 0) throw io::ConfigError("simulate config: n_cycles must be >= 1");
    return job;
}

json simulate_job_to_json(const SimulateJob& job) {
    return json{{"sim", io::to_json(job.sim)},
                {"n_trials", job.n_trials},
                {"n_cycles", job.n_cycles},
                {"prepared_state", job.prepared_state}};
}

int run_simulate(const std::string& config_path, const std::string& out_dir, bool force) {
    const json config = io::load_json_file(config_path);
    const SimulateJob job = simulate_job_from_json(config);
    job.sim.validate();

    ensure_out_dir(out_dir, force);

    std::vector<RunRecord> runs;
    auto simulate_state = [&](QubitState state, std::uint64_t base) {
        for (std::size_t trial = 0; trial < job.n_trials; ++trial)
            runs.push_back(simulate_run(state, job.n_cycles, job.sim, base + trial));
    };
    if (job.prepared_state == "1" || job.prepared_state == "both")
        simulate_state(QubitState::Up, 0);
    if (job.prepared_state == "0" || job.prepared_state == "both")
        simulate_state(QubitState::Down, job.prepared_state == "both" ? job.n_trials : 0);

    std::ostringstream traces, truth;
    io::write_trace_batch_csv(traces, runs);
    io::write_truth_csv(truth, runs);
    const fs::path dir(out_dir);
    io::write_text_file((dir / "traces.csv").string(), traces.str());
    io::write_text_file((dir / "truth.csv").string(), truth.str());
    write_json_file(dir / "manifest.json",
                    manifest_for("simulate", simulate_job_to_json(job), job.sim.master_seed));
    return kExitOk;
}

// ---- calibrate ----

int run_calibrate(const std::string& traces_path, const std::string& truth_path,
                  const std::string& out_path, const std::string& sweep_out, double dt_sample,
                  double dt_rep, std::size_t n_bins, double pseudo_count, double llr_clamp,
                  std::vector<double> t_r_grid) {
    std::ifstream traces_in(traces_path), truth_in(truth_path);
    if (!traces_in) throw CliError(kExitData, "cannot open trace batch: " + traces_path);
    if (!truth_in) throw CliError(kExitData, "missing labels (truth table): " + truth_path);

    const io::TraceBatch batch = io::read_trace_batch_csv(traces_in, truth_in, dt_sample, dt_rep);

    // Single-repetition calibration on the first cycle, labeled by the
    // prepared state.
    std::vector<Trace> traces1, traces0;
    for (const RunRecord& run : batch.runs) {
        if (run.traces.empty()) continue;
        if (run.hidden_states.empty())
            throw CliError(kExitData, "missing labels for trial in trace batch");
        (run.x0 == QubitState::Up ? traces1 : traces0).push_back(run.traces.front());
    }
    if (traces1.empty() || traces0.empty())
        throw CliError(kExitData, "calibration needs traces for both prepared states");

    if (t_r_grid.empty()) t_r_grid = default_t_r_grid(dt_sample, dt_sample * traces1[0].samples.size());

    const auto sweep = sweep_readout_times(traces1, traces0, t_r_grid, n_bins, pseudo_count, llr_clamp);
    const CalibrationResult result =
        optimize_readout_time(traces1, traces0, t_r_grid, n_bins, pseudo_count, llr_clamp);

    json out = io::to_json(result);
    out["config"] = json{{"dt_sample", dt_sample},
                         {"dt_rep", dt_rep},
                         {"n_bins", n_bins},
                         {"pseudo_count", pseudo_count},
                         {"llr_clamp", llr_clamp},
                         {"n_traces1", traces1.size()},
                         {"n_traces0", traces0.size()}};
    write_json_file(out_path, out);

    if (!sweep_out.empty()) {
        std::ostringstream csv;
        csv << "t_r,eps1,eps0,eps_avg\n";
        for (const auto& point : sweep)
            csv << io::format_double(point.t_r) << ',' << io::format_double(point.eps1) << ','
                << io::format_double(point.eps0) << ',' << io::format_double(point.eps_avg)
                << '\n';
        io::write_text_file(sweep_out, csv.str());
    }
    return kExitOk;
}

// ---- decode ----

int run_decode(const std::string& records_path, const std::string& calibration_path,
               const std::string& mode, double t1, double prior1, double eps1_flag,
               double eps0_flag, bool have_eps_flags, bool have_t1_flag,
               const std::string& out_path) {
    const json records_json = io::load_json_file(records_path);
    if (!records_json.is_array()) throw CliError(kExitData, "records file must be a JSON array");

    std::vector<ReadoutRecord> records;
    for (const auto& item : records_json) records.push_back(io::record_from_json(item));

    ObservationModel model;
    if (mode == "soft") {
        if (calibration_path.empty())
            throw CliError(kExitData, "soft mode requires --calibration");
        model = io::calibration_from_json(io::load_json_file(calibration_path))
                    .observation_model();
    } else if (mode == "hard") {
        if (have_eps_flags) {
            model = ObservationModel::binary(eps1_flag, eps0_flag);
        } else if (!calibration_path.empty()) {
            const auto calibration =
                io::calibration_from_json(io::load_json_file(calibration_path));
            model = ObservationModel::binary(calibration.eps1, calibration.eps0);
        } else {
            throw CliError(kExitData, "hard mode requires --calibration or --eps1/--eps0");
        }
    } else if (mode == "majority") {
        if (have_t1_flag)
            std::cerr << "warning: majority mode ignores --t1\n";
    } else {
        throw CliError(kExitConfig, "unknown decode mode: " + mode);
    }

    json out = json::array();
    for (const ReadoutRecord& record : records) {
        if (mode == "majority") {
            if (record.kind != ObservationKind::Binary)
                throw CliError(kExitData, "majority mode requires binary records");
            std::vector<int> bits;
            json per_cycle = json::array();
            for (double o : record.observations) {
                bits.push_back(static_cast<int>(o));
                per_cycle.push_back(bit_of(majority_vote(bits)));
            }
            out.push_back(json{{"decision", bits.empty() ? 0 : bit_of(majority_vote(bits))},
                               {"per_cycle_decision", per_cycle}});
            continue;
        }
        if (record.kind != model.kind)
            throw CliError(kExitData, "record kind does not match decode mode");
        const Vec2 priors{prior1, 1.0 - prior1};
        out.push_back(io::to_json(decode(record, model, t1, priors)));
    }
    write_json_file(out_path, out);
    return kExitOk;
}

// ---- benchmark ----

struct FigureWriters {
    static void fig2b(const fs::path& path, const ErrorCurve& curve, double dt_rep) {
        std::ostringstream csv;
        csv << "N,t,single_rep_p1_prep1,single_rep_p1_prep0,cumulative_p1_prep1,"
               "cumulative_p1_prep0\n";
        const auto& probs = curve.cycle_probabilities;
        for (std::size_t k = 0; k < curve.max_cycles; ++k)
            csv << (k + 1) << ',' << io::format_double((k + 1) * dt_rep) << ','
                << io::format_double(probs.single_rep_p1_prep1[k]) << ','
                << io::format_double(probs.single_rep_p1_prep0[k]) << ','
                << io::format_double(probs.cumulative_p1_prep1[k]) << ','
                << io::format_double(probs.cumulative_p1_prep0[k]) << '\n';
        io::write_text_file(path.string(), csv.str());
    }

    static void error_rate_csv(const fs::path& path, const ErrorCurve& curve) {
        std::ostringstream csv;
        io::write_error_curve_csv(csv, curve);
        io::write_text_file(path.string(), csv.str());
    }
};

int run_benchmark(const std::string& config_path, const std::string& suite,
                  const std::string& out_dir, unsigned threads, bool force, bool plot_data) {
    ensure_out_dir(out_dir, force);
    const fs::path dir(out_dir);

    if (suite == "paper-defaults") {
        // One command reproducing the five figure-shaped datasets.
        ExperimentConfig base;
        base.sim = paper_matched_sim();
        base.n_trials_per_state = 10000;
        base.max_cycles = 30;
        base.mode_majority = true;
        base.threads = threads;

        ExperimentConfig with_prep = base;
        with_prep.prep_error_eta1 = 0.04;
        with_prep.prep_error_eta0 = 0.0044;

        const ErrorCurve ideal = run_error_curve(base);
        const ErrorCurve measured = run_error_curve(with_prep);

        ExperimentConfig noisy = base;
        noisy.max_cycles = 15;
        noisy.added_noise_sigma = tune_added_noise(base, 0.5 * (0.411 + 0.423));
        const ErrorCurve low_snr = run_error_curve(noisy);

        FigureWriters::fig2b(dir / "fig2b.csv", measured, base.sim.dt_rep);
        FigureWriters::error_rate_csv(dir / "fig3c.csv", measured);
        FigureWriters::error_rate_csv(dir / "fig3d.csv", low_snr);

        // eps(t_R) sweep with and without added noise, from the
        // calibration trace sets.
        {
            auto sweep_for = [&](const ExperimentConfig& cfg) {
                SimConfig calib_sim = cfg.sim;
                calib_sim.master_seed =
                    detail::derived_seed(cfg.sim.master_seed, detail::kCalibTag);
                std::vector<Trace> traces1, traces0;
                const std::size_t n = cfg.n_calibration_per_state();
                for (std::size_t trial = 0; trial < n; ++trial) {
                    auto take = [&](QubitState s, std::uint64_t base, std::vector<Trace>& out) {
                        RunRecord run = simulate_run(s, 1, calib_sim, base + trial);
                        Trace trace = std::move(run.traces[0]);
                        if (cfg.added_noise_sigma > 0.0) {
                            auto rng = make_stream(calib_sim.master_seed, base + trial, 0,
                                                   detail::kNoiseTag);
                            trace = add_gaussian_noise(trace, cfg.added_noise_sigma, rng);
                        }
                        out.push_back(std::move(trace));
                    };
                    take(QubitState::Up, 0, traces1);
                    take(QubitState::Down, n, traces0);
                }
                const auto grid = default_t_r_grid(cfg.sim.dt_sample, cfg.sim.trace_length);
                return sweep_readout_times(traces1, traces0, grid, cfg.n_bins, cfg.pseudo_count,
                                           cfg.llr_clamp);
            };
            const auto clean_sweep = sweep_for(base);
            const auto noisy_sweep = sweep_for(noisy);
            std::ostringstream csv;
            csv << "noise,t_r,eps1,eps0,eps_avg\n";
            for (const auto& p : clean_sweep)
                csv << "none," << io::format_double(p.t_r) << ',' << io::format_double(p.eps1)
                    << ',' << io::format_double(p.eps0) << ',' << io::format_double(p.eps_avg)
                    << '\n';
            for (const auto& p : noisy_sweep)
                csv << "added," << io::format_double(p.t_r) << ',' << io::format_double(p.eps1)
                    << ',' << io::format_double(p.eps0) << ',' << io::format_double(p.eps_avg)
                    << '\n';
            io::write_text_file((dir / "figS1.csv").string(), csv.str());
        }

        // Measured (with preparation error) vs simulated (ideal) hard
        // curves plus the composition fit.
        {
            std::ostringstream csv;
            csv << "prepared_state,N,eps_measured,eps_simulated\n";
            for (std::size_t k = 0; k < measured.max_cycles; ++k) {
                csv << "1," << (k + 1) << ',' << io::format_double(measured.hard.eps1[k]) << ','
                    << io::format_double(ideal.hard.eps1[k]) << '\n';
                csv << "0," << (k + 1) << ',' << io::format_double(measured.hard.eps0[k]) << ','
                    << io::format_double(ideal.hard.eps0[k]) << '\n';
            }
            io::write_text_file((dir / "figS2.csv").string(), csv.str());

            // Odd N only: ties break toward 0, so the symmetric composition
            // relation does not hold at even N.
            std::vector<double> m1, m0, i1, i0;
            for (std::size_t k = 0; k < measured.max_cycles; k += 2) {
                m1.push_back(measured.hard.eps1[k]);
                m0.push_back(measured.hard.eps0[k]);
                i1.push_back(ideal.hard.eps1[k]);
                i0.push_back(ideal.hard.eps0[k]);
            }
            const auto fit1 = fit_preparation_error(m1, i1);
            const auto fit0 = fit_preparation_error(m0, i0);
            write_json_file(dir / "fit_prep_error.json",
                            json{{"eta1", fit1.eta},
                                 {"eta1_stderr", fit1.eta_stderr},
                                 {"eta0", fit0.eta},
                                 {"eta0_stderr", fit0.eta_stderr},
                                 {"eta_avg", 0.5 * (fit1.eta + fit0.eta)}});
        }

        const auto t1_fit = fit_t1_from_cycles(measured.cycle_probabilities, base.sim.dt_rep);
        write_json_file(dir / "fit_t1.json", json{{"amplitude", t1_fit.amplitude},
                                                  {"baseline", t1_fit.baseline},
                                                  {"t1", t1_fit.t1},
                                                  {"t1_stderr", t1_fit.t1_stderr},
                                                  {"converged", t1_fit.converged},
                                                  {"degenerate", t1_fit.degenerate}});

        write_json_file(dir / "error_curves.json", io::to_json(measured));
        FigureWriters::error_rate_csv(dir / "error_curves.csv", measured);
        json config = io::to_json(with_prep);
        config["suite"] = "paper-defaults";
        write_json_file(dir / "manifest.json",
                        manifest_for("benchmark", config, base.sim.master_seed));
        return kExitOk;
    }

    if (config_path.empty())
        throw CliError(kExitConfig, "benchmark requires --config or --suite paper-defaults");

    json config = io::load_json_file(config_path);
    // A manifest from a previous run may be passed back in directly.
    if (config.contains("config")) config = config.at("config");
    config.erase("suite");
    const ExperimentConfig cfg = [&] {
        ExperimentConfig parsed = io::experiment_config_from_json(config);
        parsed.threads = threads;
        return parsed;
    }();

    const ErrorCurve curve = run_error_curve(cfg);

    FigureWriters::error_rate_csv(dir / "error_curves.csv", curve);
    write_json_file(dir / "error_curves.json", io::to_json(curve));
    if (curve.has_calibration)
        write_json_file(dir / "calibration.json", io::to_json(curve.calibration));
    if (plot_data) FigureWriters::fig2b(dir / "fig2b.csv", curve, cfg.sim.dt_rep);

    const auto t1_fit = fit_t1_from_cycles(curve.cycle_probabilities, cfg.sim.dt_rep);
    write_json_file(dir / "fit_t1.json", json{{"amplitude", t1_fit.amplitude},
                                              {"baseline", t1_fit.baseline},
                                              {"t1", t1_fit.t1},
                                              {"t1_stderr", t1_fit.t1_stderr},
                                              {"converged", t1_fit.converged},
                                              {"degenerate", t1_fit.degenerate}});

    write_json_file(dir / "manifest.json",
                    manifest_for("benchmark", io::to_json(cfg), cfg.sim.master_seed));
    return kExitOk;
}

// ---- fits ----

int run_fit_t1(const std::string& input_path, const std::string& out_path) {
    std::ifstream in(input_path);
    if (!in) throw CliError(kExitData, "cannot open input: " + input_path);
    std::string line;
    if (!std::getline(in, line) || line != "curve,t,p")
        throw CliError(kExitData, "fit-t1 input must have header 'curve,t,p'");
    std::vector<double> t1s, p1s, t0s, p0s;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = io::split_csv_line(line);
        if (fields.size() != 3) throw CliError(kExitData, "fit-t1: malformed row");
        if (fields[0] == "p1") {
            t1s.push_back(std::stod(fields[1]));
            p1s.push_back(std::stod(fields[2]));
        } else if (fields[0] == "p0") {
            t0s.push_back(std::stod(fields[1]));
            p0s.push_back(std::stod(fields[2]));
        } else {
            throw CliError(kExitData, "fit-t1: curve must be 'p1' or 'p0'");
        }
    }
    const auto fit = fit_t1(p1s, t1s, p0s, t0s);
    if (fit.degenerate && !fit.converged)
        std::cerr << "warning: degenerate fit (flat curve?), T1 unidentifiable\n";
    write_json_file(out_path, json{{"amplitude", fit.amplitude},
                                   {"amplitude_stderr", fit.amplitude_stderr},
                                   {"baseline", fit.baseline},
                                   {"baseline_stderr", fit.baseline_stderr},
                                   {"t1", fit.t1},
                                   {"t1_stderr", fit.t1_stderr},
                                   {"residual_norm", fit.residual_norm},
                                   {"converged", fit.converged},
                                   {"degenerate", fit.degenerate}});
    return fit.degenerate && !fit.converged ? kExitNumerical : kExitOk;
}

int run_fit_prep_error(const std::string& experiment_path, const std::string& simulated_path,
                       const std::string& out_path) {
    auto read_curve = [](const std::string& path) {
        std::ifstream in(path);
        if (!in) throw CliError(kExitData, "cannot open input: " + path);
        std::string line;
        if (!std::getline(in, line) || line != "N,eps")
            throw CliError(kExitData, "fit-prep-error input must have header 'N,eps'");
        std::vector<double> eps;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto fields = io::split_csv_line(line);
            if (fields.size() != 2) throw CliError(kExitData, "fit-prep-error: malformed row");
            eps.push_back(std::stod(fields[1]));
        }
        return eps;
    };
    const auto experiment = read_curve(experiment_path);
    const auto simulated = read_curve(simulated_path);
    const auto fit = fit_preparation_error(experiment, simulated);
    write_json_file(out_path, json{{"eta", fit.eta},
                                   {"eta_stderr", fit.eta_stderr},
                                   {"residual_norm", fit.residual_norm}});
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Repetitive QND readout: simulator, calibration, decoding, benchmarks"};
    app.require_subcommand(1);

    // simulate
    std::string sim_config, sim_out;
    bool sim_force = false;
    auto* simulate_cmd = app.add_subcommand("simulate", "Generate a synthetic trace batch");
    simulate_cmd->add_option("--config", sim_config, "Simulation config JSON")->required();
    simulate_cmd->add_option("--out-dir", sim_out, "Output directory")->required();
    simulate_cmd->add_flag("--force", sim_force, "Overwrite a non-empty output directory");

    // calibrate
    std::string cal_traces, cal_truth, cal_out, cal_sweep;
    double cal_dt_sample = 16.38e-6, cal_dt_rep = 3.263e-3, cal_pseudo = 0.5, cal_clamp = 50.0;
    std::size_t cal_bins = 60;
    std::vector<double> cal_grid;
    auto* calibrate_cmd =
        app.add_subcommand("calibrate", "Calibrate single-repetition readout from labeled traces");
    calibrate_cmd->add_option("--traces", cal_traces, "Trace batch CSV")->required();
    calibrate_cmd->add_option("--truth", cal_truth, "Ground-truth CSV (labels)")->required();
    calibrate_cmd->add_option("--out", cal_out, "Calibration JSON output")->required();
    calibrate_cmd->add_option("--sweep-out", cal_sweep, "Optional eps(t_R) sweep CSV");
    calibrate_cmd->add_option("--dt-sample", cal_dt_sample, "Sensor sampling interval [s]");
    calibrate_cmd->add_option("--dt-rep", cal_dt_rep, "Cycle period [s]");
    calibrate_cmd->add_option("--bins", cal_bins, "Histogram bin count");
    calibrate_cmd->add_option("--pseudo-count", cal_pseudo, "Additive smoothing per bin");
    calibrate_cmd->add_option("--llr-clamp", cal_clamp, "Log-likelihood-ratio clamp [nats]");
    calibrate_cmd->add_option("--t-r", cal_grid, "Explicit readout-time grid [s]");

    // decode
    std::string dec_records, dec_calibration, dec_mode = "hard", dec_out;
    double dec_t1 = std::numeric_limits<double>::infinity(), dec_prior1 = 0.5;
    double dec_eps1 = 0.0, dec_eps0 = 0.0;
    auto* decode_cmd = app.add_subcommand("decode", "Decode readout records");
    decode_cmd->add_option("--records", dec_records, "Records JSON (array)")->required();
    decode_cmd->add_option("--calibration", dec_calibration, "Calibration JSON");
    decode_cmd->add_option("--mode", dec_mode, "hard | soft | majority")
        ->check(CLI::IsMember({"hard", "soft", "majority"}));
    auto* t1_opt = decode_cmd->add_option("--t1", dec_t1, "Logical T1 [s], default infinite");
    decode_cmd->add_option("--prior1", dec_prior1, "Prior probability of state 1")
        ->check(CLI::Range(0.0, 1.0));
    auto* eps1_opt = decode_cmd->add_option("--eps1", dec_eps1, "Hard channel eps1");
    auto* eps0_opt = decode_cmd->add_option("--eps0", dec_eps0, "Hard channel eps0");
    decode_cmd->add_option("--out", dec_out, "Decisions JSON output")->required();

    // benchmark
    std::string bench_config, bench_suite, bench_out;
    unsigned bench_threads = 1;
    bool bench_force = false, bench_plot = false;
    auto* benchmark_cmd = app.add_subcommand("benchmark", "Run a Monte Carlo error-rate study");
    benchmark_cmd->add_option("--config", bench_config, "Experiment config or manifest JSON");
    benchmark_cmd->add_option("--suite", bench_suite, "Named suite (paper-defaults)");
    benchmark_cmd->add_option("--out-dir", bench_out, "Output directory")->required();
    benchmark_cmd->add_option("--threads", bench_threads, "Worker threads (does not affect results)");
    benchmark_cmd->add_flag("--force", bench_force, "Overwrite a non-empty output directory");
    benchmark_cmd->add_flag("--plot-data", bench_plot, "Also emit figure-shaped CSV datasets");

    // fit-t1
    std::string fit_t1_in, fit_t1_out;
    auto* fit_t1_cmd = app.add_subcommand("fit-t1", "Joint exponential fit of P1/P0 curves");
    fit_t1_cmd->add_option("--input", fit_t1_in, "CSV with header curve,t,p")->required();
    fit_t1_cmd->add_option("--out", fit_t1_out, "Fit JSON output")->required();

    // fit-prep-error
    std::string fpe_exp, fpe_sim, fpe_out;
    auto* fpe_cmd =
        app.add_subcommand("fit-prep-error", "Fit the preparation-error composition relation");
    fpe_cmd->add_option("--experiment", fpe_exp, "Measured curve CSV (N,eps)")->required();
    fpe_cmd->add_option("--simulated", fpe_sim, "Simulated curve CSV (N,eps)")->required();
    fpe_cmd->add_option("--out", fpe_out, "Fit JSON output")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate_cmd->parsed()) return run_simulate(sim_config, sim_out, sim_force);
        if (calibrate_cmd->parsed())
            return run_calibrate(cal_traces, cal_truth, cal_out, cal_sweep, cal_dt_sample,
                                 cal_dt_rep, cal_bins, cal_pseudo, cal_clamp, cal_grid);
        if (decode_cmd->parsed())
            return run_decode(dec_records, dec_calibration, dec_mode, dec_t1, dec_prior1,
                              dec_eps1, dec_eps0, eps1_opt->count() > 0 && eps0_opt->count() > 0,
                              t1_opt->count() > 0, dec_out);
        if (benchmark_cmd->parsed())
            return run_benchmark(bench_config, bench_suite, bench_out, bench_threads, bench_force,
                                 bench_plot);
        if (fit_t1_cmd->parsed()) return run_fit_t1(fit_t1_in, fit_t1_out);
        if (fpe_cmd->parsed()) return run_fit_prep_error(fpe_exp, fpe_sim, fpe_out);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code;
    } catch (const io::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const io::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitOk;
}
