#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qnd/calibration.hpp"
#include "qnd/decoder.hpp"
#include "qnd/experiments.hpp"
#include "qnd/sim.hpp"

namespace qnd::io {

using nlohmann::json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& context) {
    if (!obj.is_object()) throw ConfigError(context + ": expected a JSON object");
    for (const auto& item : obj.items())
        if (!allowed.contains(item.key()))
            throw ConfigError(context + ": unknown key '" + item.key() + "'");
}

template <typename T>
void read_field(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

// ---- SimConfig ----

inline json to_json(const SimConfig& cfg) {
    return json{{"dt_sample", cfg.dt_sample},
                {"trace_length", cfg.trace_length},
                {"dt_rep", cfg.dt_rep},
                {"t1_logical", cfg.t1_logical},
                {"t1_ancilla", cfg.t1_ancilla},
                {"gamma_out", cfg.gamma_out},
                {"gamma_in", cfg.gamma_in},
                {"gamma_dark", cfg.gamma_dark},
                {"p_crot_flip", cfg.p_crot_flip},
                {"p_ancilla_init", cfg.p_ancilla_init},
                {"i_low", cfg.i_low},
                {"i_high", cfg.i_high},
                {"sigma_noise", cfg.sigma_noise},
                {"master_seed", cfg.master_seed}};
}

inline SimConfig sim_config_from_json(const json& obj) {
    require_keys(obj,
                 {"dt_sample", "trace_length", "dt_rep", "t1_logical", "t1_ancilla", "gamma_out",
                  "gamma_in", "gamma_dark", "p_crot_flip", "p_ancilla_init", "i_low", "i_high",
                  "sigma_noise", "master_seed"},
                 "sim config");
    SimConfig cfg;
    read_field(obj, "dt_sample", cfg.dt_sample);
    read_field(obj, "trace_length", cfg.trace_length);
    read_field(obj, "dt_rep", cfg.dt_rep);
    read_field(obj, "t1_logical", cfg.t1_logical);
    read_field(obj, "t1_ancilla", cfg.t1_ancilla);
    read_field(obj, "gamma_out", cfg.gamma_out);
    read_field(obj, "gamma_in", cfg.gamma_in);
    read_field(obj, "gamma_dark", cfg.gamma_dark);
    read_field(obj, "p_crot_flip", cfg.p_crot_flip);
    read_field(obj, "p_ancilla_init", cfg.p_ancilla_init);
    read_field(obj, "i_low", cfg.i_low);
    read_field(obj, "i_high", cfg.i_high);
    read_field(obj, "sigma_noise", cfg.sigma_noise);
    read_field(obj, "master_seed", cfg.master_seed);
    return cfg;
}

// ---- ExperimentConfig ----

inline json to_json(const ExperimentConfig& cfg) {
    json modes = json::array();
    if (cfg.mode_hard) modes.push_back("hard");
    if (cfg.mode_soft) modes.push_back("soft");
    if (cfg.mode_majority) modes.push_back("majority");
    json obj{{"sim", to_json(cfg.sim)},
             {"n_trials_per_state", cfg.n_trials_per_state},
             {"max_cycles", cfg.max_cycles},
             {"decode_modes", modes},
             {"added_noise_sigma", cfg.added_noise_sigma},
             {"calibration_fraction", cfg.calibration_fraction},
             {"prep_error_eta1", cfg.prep_error_eta1},
             {"prep_error_eta0", cfg.prep_error_eta0},
             {"n_bins", cfg.n_bins},
             {"pseudo_count", cfg.pseudo_count},
             {"llr_clamp", cfg.llr_clamp},
             {"forced_binary", cfg.forced_binary}};
    if (cfg.forced_binary) {
        obj["forced_eps1"] = cfg.forced_eps1;
        obj["forced_eps0"] = cfg.forced_eps0;
    }
    return obj;
}

inline ExperimentConfig experiment_config_from_json(const json& obj) {
    require_keys(obj,
                 {"sim", "n_trials_per_state", "max_cycles", "decode_modes", "added_noise_sigma",
                  "calibration_fraction", "prep_error_eta1", "prep_error_eta0", "n_bins",
                  "pseudo_count", "llr_clamp", "forced_binary", "forced_eps1", "forced_eps0"},
                 "experiment config");
    ExperimentConfig cfg;
    if (obj.contains("sim")) cfg.sim = sim_config_from_json(obj.at("sim"));
    read_field(obj, "n_trials_per_state", cfg.n_trials_per_state);
    read_field(obj, "max_cycles", cfg.max_cycles);
    if (obj.contains("decode_modes")) {
        cfg.mode_hard = cfg.mode_soft = cfg.mode_majority = false;
        for (const auto& mode : obj.at("decode_modes")) {
            const auto name = mode.get<std::string>();
            if (name == "hard")
                cfg.mode_hard = true;
            else if (name == "soft")
                cfg.mode_soft = true;
            else if (name == "majority")
                cfg.mode_majority = true;
            else
                throw ConfigError("experiment config: unknown decode mode '" + name + "'");
        }
    }
    read_field(obj, "added_noise_sigma", cfg.added_noise_sigma);
    read_field(obj, "calibration_fraction", cfg.calibration_fraction);
    read_field(obj, "prep_error_eta1", cfg.prep_error_eta1);
    read_field(obj, "prep_error_eta0", cfg.prep_error_eta0);
    read_field(obj, "n_bins", cfg.n_bins);
    read_field(obj, "pseudo_count", cfg.pseudo_count);
    read_field(obj, "llr_clamp", cfg.llr_clamp);
    read_field(obj, "forced_binary", cfg.forced_binary);
    read_field(obj, "forced_eps1", cfg.forced_eps1);
    read_field(obj, "forced_eps0", cfg.forced_eps0);
    return cfg;
}

// ---- ReadoutRecord ----

inline json to_json(const ReadoutRecord& record) {
    return json{{"cycle_duration_s", record.cycle_duration_s},
                {"kind", record.kind == ObservationKind::Binary ? "binary" : "peak"},
                {"observations", record.observations}};
}

inline ReadoutRecord record_from_json(const json& obj) {
    require_keys(obj, {"cycle_duration_s", "kind", "observations"}, "readout record");
    ReadoutRecord record;
    if (!obj.contains("kind") || !obj.contains("cycle_duration_s") || !obj.contains("observations"))
        throw DataError("readout record: missing required field");
    const auto kind = obj.at("kind").get<std::string>();
    if (kind == "binary")
        record.kind = ObservationKind::Binary;
    else if (kind == "peak")
        record.kind = ObservationKind::Peak;
    else
        throw DataError("readout record: kind must be 'binary' or 'peak'");
    record.cycle_duration_s = obj.at("cycle_duration_s").get<double>();
    record.observations = obj.at("observations").get<std::vector<double>>();
    if (record.kind == ObservationKind::Binary)
        for (double o : record.observations)
            if (o != 0.0 && o != 1.0) throw DataError("readout record: binary outcome not 0/1");
    return record;
}

inline json to_json(const DecodeResult& result) {
    return json{{"lambda_log", result.lambda_log},
                {"decision", bit_of(result.decision)},
                {"per_cycle_lambda", result.per_cycle_lambda}};
}

// ---- CalibrationResult ----

inline json to_json(const CalibrationResult& result) {
    json obj{{"t_r_opt", result.t_r_opt},
             {"eps1", result.eps1},
             {"eps0", result.eps0},
             {"eps_avg", result.eps_avg},
             {"stderr1", result.stderr1},
             {"stderr0", result.stderr0},
             {"bin_edges", result.dist1.bin_edges()},
             {"counts1", result.dist1.counts()},
             {"counts0", result.dist0.counts()},
             {"pseudo_count", result.dist1.pseudo_count()},
             {"llr_table", result.llr},
             {"llr_clamp", result.llr_clamp}};
    if (result.threshold_equivalent)
        obj["threshold_equivalent"] = *result.threshold_equivalent;
    else
        obj["threshold_equivalent"] = nullptr;
    return obj;
}

inline CalibrationResult calibration_from_json(json obj) {
    obj.erase("config");  // provenance block added by the CLI
    require_keys(obj,
                 {"t_r_opt", "eps1", "eps0", "eps_avg", "stderr1", "stderr0", "bin_edges",
                  "counts1", "counts0", "pseudo_count", "llr_table", "llr_clamp",
                  "threshold_equivalent"},
                 "calibration");
    CalibrationResult result;
    result.t_r_opt = obj.at("t_r_opt").get<double>();
    result.eps1 = obj.at("eps1").get<double>();
    result.eps0 = obj.at("eps0").get<double>();
    result.eps_avg = obj.at("eps_avg").get<double>();
    result.stderr1 = obj.at("stderr1").get<double>();
    result.stderr0 = obj.at("stderr0").get<double>();
    result.llr = obj.at("llr_table").get<std::vector<double>>();
    result.llr_clamp = obj.at("llr_clamp").get<double>();
    const auto edges = obj.at("bin_edges").get<std::vector<double>>();
    if (edges.size() < 2) throw DataError("calibration: need at least 2 bin edges");
    const double pseudo = obj.at("pseudo_count").get<double>();
    result.dist1 = EmpiricalDistribution(edges.front(), edges.back(), edges.size() - 1, pseudo);
    result.dist0 = EmpiricalDistribution(edges.front(), edges.back(), edges.size() - 1, pseudo);
    result.dist1.set_counts(obj.at("counts1").get<std::vector<std::uint64_t>>());
    result.dist0.set_counts(obj.at("counts0").get<std::vector<std::uint64_t>>());
    if (!obj.at("threshold_equivalent").is_null())
        result.threshold_equivalent = obj.at("threshold_equivalent").get<double>();
    return result;
}

// ---- CSV helpers ----

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Trace batch: one row per sample, plus a ground-truth table.
inline void write_trace_batch_csv(std::ostream& out, const std::vector<RunRecord>& runs) {
    out << "trial,cycle,sample_index,current\n";
    for (std::size_t trial = 0; trial < runs.size(); ++trial) {
        const RunRecord& run = runs[trial];
        for (std::size_t cycle = 0; cycle < run.traces.size(); ++cycle) {
            const auto& samples = run.traces[cycle].samples;
            for (std::size_t i = 0; i < samples.size(); ++i)
                out << trial << ',' << cycle << ',' << i << ',' << format_double(samples[i])
                    << '\n';
        }
    }
}

inline void write_truth_csv(std::ostream& out, const std::vector<RunRecord>& runs) {
    out << "trial,x0,cycle,hidden_state,ancilla_bit\n";
    for (std::size_t trial = 0; trial < runs.size(); ++trial) {
        const RunRecord& run = runs[trial];
        for (std::size_t cycle = 0; cycle < run.hidden_states.size(); ++cycle)
            out << trial << ',' << bit_of(run.x0) << ',' << cycle << ','
                << bit_of(run.hidden_states[cycle]) << ',' << bit_of(run.ancilla_bits[cycle])
                << '\n';
    }
}

struct TraceBatch {
    std::vector<RunRecord> runs;  // traces plus ground truth, indexed by trial
    double dt_sample = 0.0;
    double dt_rep = 0.0;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
}

inline TraceBatch read_trace_batch_csv(std::istream& traces, std::istream& truth,
                                       double dt_sample, double dt_rep) {
    TraceBatch batch;
    batch.dt_sample = dt_sample;
    batch.dt_rep = dt_rep;

    std::string line;
    if (!std::getline(traces, line) || line != "trial,cycle,sample_index,current")
        throw DataError("trace batch: bad or missing header");
    while (std::getline(traces, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 4) throw DataError("trace batch: malformed row");
        const auto trial = static_cast<std::size_t>(std::stoull(fields[0]));
        const auto cycle = static_cast<std::size_t>(std::stoull(fields[1]));
        const double current = std::stod(fields[3]);
        if (trial >= batch.runs.size()) batch.runs.resize(trial + 1);
        auto& run = batch.runs[trial];
        if (cycle >= run.traces.size()) run.traces.resize(cycle + 1, Trace{{}, dt_sample});
        run.traces[cycle].samples.push_back(current);
    }

    if (!std::getline(truth, line) || line != "trial,x0,cycle,hidden_state,ancilla_bit")
        throw DataError("truth table: bad or missing header");
    while (std::getline(truth, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 5) throw DataError("truth table: malformed row");
        const auto trial = static_cast<std::size_t>(std::stoull(fields[0]));
        const auto cycle = static_cast<std::size_t>(std::stoull(fields[2]));
        if (trial >= batch.runs.size()) throw DataError("truth table: trial not in trace batch");
        auto& run = batch.runs[trial];
        run.x0 = state_from_bit(std::stoi(fields[1]));
        if (cycle >= run.hidden_states.size()) {
            run.hidden_states.resize(cycle + 1, QubitState::Down);
            run.ancilla_bits.resize(cycle + 1, QubitState::Down);
        }
        run.hidden_states[cycle] = state_from_bit(std::stoi(fields[3]));
        run.ancilla_bits[cycle] = state_from_bit(std::stoi(fields[4]));
    }
    return batch;
}

inline const char* mode_name(DecodeMode mode) {
    switch (mode) {
        case DecodeMode::Hard: return "hard";
        case DecodeMode::Soft: return "soft";
        default: return "majority";
    }
}

// Tidy error-curve CSV: mode, prepared_state, N, eps, stderr.
inline void write_error_curve_csv(std::ostream& out, const ErrorCurve& curve) {
    out << "mode,prepared_state,N,eps,stderr\n";
    auto emit = [&](const char* name, const ModeCurve& mode) {
        for (std::size_t k = 0; k < curve.max_cycles; ++k) {
            out << name << ",1," << (k + 1) << ',' << format_double(mode.eps1[k]) << ','
                << format_double(mode.stderr1[k]) << '\n';
            out << name << ",0," << (k + 1) << ',' << format_double(mode.eps0[k]) << ','
                << format_double(mode.stderr0[k]) << '\n';
        }
    };
    if (curve.has_hard) emit("hard", curve.hard);
    if (curve.has_soft) emit("soft", curve.soft);
    if (curve.has_majority) emit("majority", curve.majority);
}

inline json to_json(const ErrorCurve& curve) {
    json obj{{"max_cycles", curve.max_cycles},
             {"n_trials_per_state", curve.n_trials_per_state},
             {"hard_eps1", curve.hard_eps1},
             {"hard_eps0", curve.hard_eps0}};
    auto mode_json = [&](const ModeCurve& mode) {
        json m{{"eps1", mode.eps1},
               {"eps0", mode.eps0},
               {"eps_avg", mode.eps_avg},
               {"stderr1", mode.stderr1},
               {"stderr0", mode.stderr0}};
        json fidelity = json::array(), visibility = json::array();
        for (std::size_t n = 1; n <= curve.max_cycles; ++n) {
            fidelity.push_back(mode.fidelity(n));
            visibility.push_back(mode.visibility(n));
        }
        m["fidelity"] = fidelity;
        m["visibility"] = visibility;
        return m;
    };
    if (curve.has_hard) obj["hard"] = mode_json(curve.hard);
    if (curve.has_soft) obj["soft"] = mode_json(curve.soft);
    if (curve.has_majority) obj["majority"] = mode_json(curve.majority);
    obj["cycle_probabilities"] = json{
        {"single_rep_p1_prep1", curve.cycle_probabilities.single_rep_p1_prep1},
        {"single_rep_p1_prep0", curve.cycle_probabilities.single_rep_p1_prep0},
        {"cumulative_p1_prep1", curve.cycle_probabilities.cumulative_p1_prep1},
        {"cumulative_p1_prep0", curve.cycle_probabilities.cumulative_p1_prep0}};
    if (curve.has_calibration) obj["calibration"] = to_json(curve.calibration);
    return obj;
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    json obj;
    try {
        in >> obj;
    } catch (const json::parse_error& e) {
        throw DataError("invalid JSON in " + path + ": " + e.what());
    }
    return obj;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << text;
}

}  // namespace qnd::io
