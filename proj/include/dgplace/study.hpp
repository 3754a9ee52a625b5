#pragma once

// Study orchestration behind the command-line tool: config parsing, the five
// subcommands, table/CSV writers and the reproducibility manifest.
//
// Study config files are `key = value` lines ('#' starts a comment). Paths
// inside a config resolve relative to the config file's directory.

#include <openssl/evp.h>
#include <openssl/opensslv.h>

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dgplace/dgplace.hpp"

#ifndef DGPLACE_VERSION
#define DGPLACE_VERSION "unknown"
#endif

namespace dgplace::study {

enum class RunMode { compare, optimize, sweep };

inline const char* to_string(RunMode m) {
    switch (m) {
    case RunMode::compare: return "compare";
    case RunMode::optimize: return "optimize";
    case RunMode::sweep: return "sweep";
    }
    return "?";
}

struct StudyConfig {
    std::string feeder_path;
    SolverOptions solver;
    IndexWeights weights;
    LtapEnd ltap_end = LtapEnd::receiving;
    GaConfig ga;                       // empty candidate_buses means every non-slack bus
    std::optional<DGPlan> plan;
    std::string plan_source;           // inline text or file path, as given
    std::optional<RunMode> mode;       // set when the config names it
    std::uint64_t enumeration_cap = kDefaultEnumerationCap;
    std::string out_dir = "out";
    std::string config_path;
    std::string config_text;
};

namespace study_detail {

using io_detail::format_exact;

inline std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

inline std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

inline std::string pad(const std::string& s, std::size_t width, bool left = false) {
    if (s.size() >= width) return s;
    return left ? s + std::string(width - s.size(), ' ') : std::string(width - s.size(), ' ') + s;
}

[[noreturn]] inline void bad(std::size_t line_no, const std::string& msg) {
    throw ConfigError("config line " + std::to_string(line_no) + ": " + msg);
}

inline double config_double(std::string_view v, std::size_t line_no, const std::string& key) {
    try {
        return io_detail::parse_double(v, line_no, key);
    } catch (const InputError&) {
        bad(line_no, key + " expects a number, got '" + std::string(v) + "'");
    }
}

inline long long config_int(std::string_view v, std::size_t line_no, const std::string& key) {
    const double d = config_double(v, line_no, key);
    if (d != std::floor(d)) bad(line_no, key + " expects an integer, got '" + std::string(v) + "'");
    return static_cast<long long>(d);
}

inline std::vector<double> config_list(std::string_view v, std::size_t line_no, const std::string& key) {
    std::vector<double> out;
    for (std::string_view f : io_detail::split_fields(v)) out.push_back(config_double(f, line_no, key));
    return out;
}

inline IndexWeights parse_weights(std::string_view text, IndexWeights w) {
    std::vector<double> v;
    for (std::string_view f : io_detail::split_fields(text)) {
        try {
            v.push_back(io_detail::parse_double(f, 0, "weight"));
        } catch (const InputError&) {
            throw ConfigError("weights expect three numbers bw_vpi,bw_llr,bw_ltap; got '" + std::string(text) + "'");
        }
    }
    if (v.size() != 3)
        throw ConfigError("weights expect three numbers bw_vpi,bw_llr,bw_ltap; got '" + std::string(text) + "'");
    w.bw_vpi = v[0];
    w.bw_llr = v[1];
    w.bw_ltap = v[2];
    w.check();
    return w;
}

inline FitnessMode parse_fitness_mode(std::string_view s) {
    if (s == "as-written" || s == "as_written") return FitnessMode::as_written;
    if (s == "consistent") return FitnessMode::consistent;
    throw ConfigError("fitness mode must be as-written or consistent, got '" + std::string(s) + "'");
}

inline DGPlan plan_from_text(const std::string& text) {
    if (text.empty() || text == "none") return {};
    return parse_inline_plan(text);
}

/// A plan argument is a file path when such a file exists, otherwise inline `bus:p:q;...`.
inline DGPlan load_plan_arg(const std::string& arg, const std::filesystem::path& base = {}) {
    const std::filesystem::path p = base.empty() ? std::filesystem::path(arg) : base / arg;
    if (!arg.empty() && std::filesystem::is_regular_file(p)) return parse_plan(io_detail::read_file(p.string()));
    return plan_from_text(arg);
}

inline std::string method_name(SolverMethod m) {
    switch (m) {
    case SolverMethod::automatic: return "auto";
    case SolverMethod::sweep: return "sweep";
    case SolverMethod::newton: return "newton";
    }
    return "?";
}

inline std::string join(const std::vector<double>& v) {
    std::string out;
    for (double x : v) out += (out.empty() ? "" : ",") + format_exact(x);
    return out;
}

inline std::string join(const std::vector<int>& v) {
    std::string out;
    for (int x : v) out += (out.empty() ? "" : ",") + std::to_string(x);
    return out;
}

}  // namespace study_detail

/// Parses study config text. `base_dir` anchors relative paths.
inline StudyConfig parse_study_config(std::string_view text, const std::filesystem::path& base_dir = {}) {
    using namespace study_detail;
    StudyConfig cfg;
    cfg.config_text = std::string(text);
    std::map<std::string, std::size_t> seen;
    io_detail::for_each_content_line(text, [&](std::size_t line_no, std::string_view line) {
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) bad(line_no, "expected key = value");
        const std::string key(io_detail::trim(line.substr(0, eq)));
        const std::string_view v = io_detail::trim(line.substr(eq + 1));
        if (!seen.emplace(key, line_no).second) bad(line_no, "duplicate key '" + key + "'");
        GaConfig& ga = cfg.ga;
        if (key == "mode") {
            if (v == "compare") cfg.mode = RunMode::compare;
            else if (v == "optimize") cfg.mode = RunMode::optimize;
            else if (v == "sweep") cfg.mode = RunMode::sweep;
            else bad(line_no, "mode must be compare, optimize or sweep");
        } else if (key == "feeder") {
            cfg.feeder_path = (base_dir / std::string(v)).lexically_normal().string();
        } else if (key == "plan") {
            cfg.plan_source = std::string(v);
            if (std::filesystem::is_regular_file(base_dir / v)) cfg.plan_source = (base_dir / v).string();
            try {
                cfg.plan = load_plan_arg(std::string(v), base_dir);
            } catch (const InputError& e) {
                bad(line_no, std::string("plan: ") + e.what());
            }
        } else if (key == "out") {
            cfg.out_dir = std::string(v);
        } else if (key == "weights") {
            cfg.weights = parse_weights(v, cfg.weights);
        } else if (key == "fitness_mode") {
            cfg.weights.mode = parse_fitness_mode(v);
        } else if (key == "ltap_end") {
            if (v == "receiving") cfg.ltap_end = LtapEnd::receiving;
            else if (v == "sending") cfg.ltap_end = LtapEnd::sending;
            else bad(line_no, "ltap_end must be receiving or sending");
        } else if (key == "solver") {
            if (v == "auto") cfg.solver.method = SolverMethod::automatic;
            else if (v == "sweep") cfg.solver.method = SolverMethod::sweep;
            else if (v == "newton") cfg.solver.method = SolverMethod::newton;
            else bad(line_no, "solver must be auto, sweep or newton");
        } else if (key == "tolerance") {
            cfg.solver.tolerance = config_double(v, line_no, key);
        } else if (key == "max_iterations") {
            cfg.solver.max_iterations = static_cast<int>(config_int(v, line_no, key));
        } else if (key == "slack_voltage") {
            cfg.solver.slack_voltage = config_double(v, line_no, key);
        } else if (key == "n_dg") {
            ga.n_dg = static_cast<int>(config_int(v, line_no, key));
        } else if (key == "candidate_buses") {
            ga.candidate_buses.clear();
            if (v != "all")
                for (double b : config_list(v, line_no, key)) {
                    if (b != std::floor(b)) bad(line_no, "candidate_buses expects bus ids");
                    ga.candidate_buses.push_back(static_cast<int>(b));
                }
        } else if (key == "p_grid") {
            ga.p_grid = config_list(v, line_no, key);
        } else if (key == "q_grid") {
            ga.q_grid = config_list(v, line_no, key);
        } else if (key == "p_min") {
            ga.unit_limits.p_min = config_double(v, line_no, key);
        } else if (key == "p_max") {
            ga.unit_limits.p_max = config_double(v, line_no, key);
        } else if (key == "q_min") {
            ga.unit_limits.q_min = config_double(v, line_no, key);
        } else if (key == "q_max") {
            ga.unit_limits.q_max = config_double(v, line_no, key);
        } else if (key == "population_size") {
            ga.population_size = static_cast<int>(config_int(v, line_no, key));
        } else if (key == "mutation_rate") {
            ga.mutation_rate = config_double(v, line_no, key);
        } else if (key == "penalty_coefficient") {
            ga.penalty_coefficient = config_double(v, line_no, key);
        } else if (key == "stall_generations") {
            ga.stall_generations = static_cast<int>(config_int(v, line_no, key));
        } else if (key == "max_generations") {
            ga.max_generations = static_cast<int>(config_int(v, line_no, key));
        } else if (key == "seed") {
            const long long s = config_int(v, line_no, key);
            if (s < 0) bad(line_no, "seed must be >= 0");
            ga.rng_seed = static_cast<std::uint64_t>(s);
        } else if (key == "threads") {
            ga.threads = static_cast<int>(config_int(v, line_no, key));
        } else if (key == "enumeration_cap") {
            const long long c = config_int(v, line_no, key);
            if (c < 1) bad(line_no, "enumeration_cap must be >= 1");
            cfg.enumeration_cap = static_cast<std::uint64_t>(c);
        } else {
            bad(line_no, "unknown key '" + key + "'");
        }
    });
    return cfg;
}

inline StudyConfig load_study_config(const std::string& path) {
    const std::string text = io_detail::read_file(path);
    StudyConfig cfg = parse_study_config(text, std::filesystem::path(path).parent_path());
    cfg.config_path = path;
    return cfg;
}

/// Effective settings as config text, enough to rerun the study.
inline std::string describe_config(const StudyConfig& c) {
    using namespace study_detail;
    std::string out;
    auto kv = [&out](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };
    if (c.mode) kv("mode", to_string(*c.mode));
    kv("feeder", c.feeder_path);
    if (c.plan) kv("plan", describe_plan(merge_units(*c.plan)));
    kv("weights", format_exact(c.weights.bw_vpi) + "," + format_exact(c.weights.bw_llr) + "," +
                      format_exact(c.weights.bw_ltap));
    kv("fitness_mode", c.weights.mode == FitnessMode::consistent ? "consistent" : "as-written");
    kv("ltap_end", c.ltap_end == LtapEnd::receiving ? "receiving" : "sending");
    kv("solver", method_name(c.solver.method));
    kv("tolerance", format_exact(c.solver.tolerance));
    kv("max_iterations", std::to_string(c.solver.max_iterations));
    kv("slack_voltage", format_exact(c.solver.slack_voltage));
    if (c.mode == RunMode::optimize || c.mode == RunMode::sweep) {
        const GaConfig& g = c.ga;
        kv("n_dg", std::to_string(g.n_dg));
        kv("candidate_buses", g.candidate_buses.empty() ? "all" : join(g.candidate_buses));
        kv("p_grid", join(g.p_grid));
        kv("q_grid", join(g.q_grid));
        kv("p_min", format_exact(g.unit_limits.p_min));
        kv("p_max", format_exact(g.unit_limits.p_max));
        kv("q_min", format_exact(g.unit_limits.q_min));
        kv("q_max", format_exact(g.unit_limits.q_max));
        kv("penalty_coefficient", format_exact(g.penalty_coefficient));
        if (c.mode == RunMode::optimize) {
            kv("population_size", std::to_string(g.population_size));
            kv("mutation_rate", format_exact(g.mutation_rate));
            kv("stall_generations", std::to_string(g.stall_generations));
            kv("max_generations", std::to_string(g.max_generations));
            kv("seed", std::to_string(g.rng_seed));
        } else {
            kv("enumeration_cap", std::to_string(c.enumeration_cap));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Report text

inline std::string voltages_csv(const PowerFlowSolution& sol) {
    using study_detail::format_exact;
    std::string out = "bus,v_mag_pu,v_ang_rad\n";
    for (std::size_t i = 0; i < sol.v_mag.size(); ++i)
        out += std::to_string(i + 1) + "," + format_exact(sol.v_mag[i]) + "," + format_exact(sol.v_ang[i]) + "\n";
    return out;
}

inline std::string currents_csv(const PowerFlowSolution& sol, const Network& net) {
    using study_detail::format_exact;
    std::string out = "branch,from,to,i_pu,i_amp,p_flow_pu,q_flow_pu\n";
    const auto flows = branch_flows(sol, net);
    for (std::size_t b = 0; b < net.branch_count(); ++b) {
        const Branch& br = net.branches[b];
        out += std::to_string(br.id) + "," + std::to_string(br.from_bus) + "," + std::to_string(br.to_bus) + "," +
               format_exact(sol.i_branch[b]) + "," + format_exact(to_amps(sol.i_branch[b], net)) + "," +
               format_exact(flows[b].p_flow) + "," + format_exact(flows[b].q_flow) + "\n";
    }
    return out;
}

struct CaseSummary {
    double p_loss_kw = 0.0;
    double q_loss_kvar = 0.0;
    double regulation_pct = 0.0;
    double v_min = 0.0;
    int v_min_bus = 0;
    std::vector<double> currents_amp;
};

inline CaseSummary summarize(const PowerFlowSolution& sol, const Network& net) {
    CaseSummary s;
    const LossTotals loss = total_losses(sol, net);
    s.p_loss_kw = net.from_pu_power(loss.p_loss) * 1000.0;
    s.q_loss_kvar = net.from_pu_power(loss.q_loss) * 1000.0;
    s.regulation_pct = voltage_regulation(sol);
    const auto it = std::min_element(sol.v_mag.begin(), sol.v_mag.end());
    s.v_min = *it;
    s.v_min_bus = static_cast<int>(it - sol.v_mag.begin()) + 1;
    for (double i : sol.i_branch) s.currents_amp.push_back(to_amps(i, net));
    return s;
}

inline std::string line_label(const Branch& br) {
    return "Line " + std::to_string(br.id) + " (" + std::to_string(br.from_bus) + "-" + std::to_string(br.to_bus) +
           ") current (A)";
}

inline std::string summary_text(const CaseSummary& s, const Network& net, const PowerFlowSolution& sol) {
    using namespace study_detail;
    std::string out;
    auto row = [&out](const std::string& label, const std::string& v) {
        out += pad(label, 34, true) + pad(v, 12) + "\n";
    };
    row("Quantity", "Without DG");
    row("Active Losses (kW)", fixed(s.p_loss_kw, 2));
    row("Reactive Losses (kVAr)", fixed(s.q_loss_kvar, 2));
    row("Voltage Regulation (%)", fixed(s.regulation_pct, 2));
    row("Minimum Voltage (pu) at bus " + std::to_string(s.v_min_bus), fixed(s.v_min, 4));
    for (std::size_t b = 0; b < net.branch_count(); ++b) row(line_label(net.branches[b]), fixed(s.currents_amp[b], 2));
    out += "solver " + method_name(sol.method) + ", " + std::to_string(sol.iterations) + " iterations, mismatch " +
           format_exact(sol.mismatch) + " pu\n";
    return out;
}

/// 100 (without - with) / without; 0 when both are zero.
inline std::optional<double> percentage_reduction(double without, double with) {
    if (without == 0.0) return with == 0.0 ? std::optional<double>(0.0) : std::nullopt;
    return 100.0 * (without - with) / without;
}

struct CompareRow {
    std::string label;
    double without = 0.0;
    double with = 0.0;
    std::optional<double> reduction;
};

inline std::vector<CompareRow> compare_rows(const CaseSummary& base, const CaseSummary& dg, const Network& net) {
    std::vector<CompareRow> rows;
    auto add = [&rows](std::string label, double without, double with) {
        rows.push_back({std::move(label), without, with, percentage_reduction(without, with)});
    };
    add("Active Losses (kW)", base.p_loss_kw, dg.p_loss_kw);
    add("Reactive Losses (kVAr)", base.q_loss_kvar, dg.q_loss_kvar);
    add("Voltage Regulation (%)", base.regulation_pct, dg.regulation_pct);
    for (std::size_t b = 0; b < net.branch_count(); ++b)
        add(line_label(net.branches[b]), base.currents_amp[b], dg.currents_amp[b]);
    return rows;
}

inline std::string compare_text(const std::vector<CompareRow>& rows, const IndexReport& r, const DGPlan& plan) {
    using namespace study_detail;
    std::string out = "DG plan: " + describe_plan(merge_units(plan)) + "\n\n";
    out += pad("Quantity", 34, true) + pad("Without DG", 12) + pad("With DG", 12) + pad("Reduction %", 13) + "\n";
    for (const CompareRow& row : rows)
        out += pad(row.label, 34, true) + pad(fixed(row.without, 2), 12) + pad(fixed(row.with, 2), 12) +
               pad(row.reduction ? fixed(*row.reduction, 2) : "n/a", 13) + "\n";
    out += "\n";
    auto pair_row = [&out](const std::string& label, double without, double with) {
        out += pad(label, 34, true) + pad(fixed(without, 6), 12) + pad(fixed(with, 6), 12) + "\n";
    };
    out += pad("Index", 34, true) + pad("Without DG", 12) + pad("With DG", 12) + "\n";
    pair_row("LL", r.ll_without, r.ll_with);
    pair_row("VP", r.vp_without, r.vp_with);
    pair_row("LTAP", r.ltap_without, r.ltap_with);
    auto one = [&out](const std::string& label, double v) { out += pad(label, 34, true) + pad(fixed(v, 4), 12) + "\n"; };
    one("LLRI", r.llri);
    one("VPII", r.vpii);
    one("LTAPII", r.ltapii);
    one("BI", r.bi);
    out += "Constraint violations: " + std::to_string(r.constraint_violations.size()) + "\n";
    for (const auto& v : r.constraint_violations) out += "  " + v.describe() + "\n";
    return out;
}

inline std::string compare_csv(const std::vector<CompareRow>& rows) {
    using study_detail::format_exact;
    std::string out = "quantity,without_dg,with_dg,reduction_pct\n";
    for (const CompareRow& row : rows)
        out += row.label + "," + format_exact(row.without) + "," + format_exact(row.with) + "," +
               (row.reduction ? format_exact(*row.reduction) : "nan") + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Commands

/// Flags as given on the command line; empty means "not given".
struct CliOptions {
    std::string command;
    std::string feeder;
    std::string config;
    std::string plan;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string weights;
    std::string fitness_mode;
};

class OutputDir {
public:
    explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw InputError("cannot create output directory " + dir_.string() + ": " + ec.message());
    }

    void write(const std::string& name, const std::string& content) {
        const auto path = dir_ / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out || !(out << content)) throw InputError("cannot write " + path.string());
        written_.emplace_back(name, study_detail::sha256_hex(content));
    }

    const std::filesystem::path& path() const { return dir_; }
    const std::vector<std::pair<std::string, std::string>>& written() const { return written_; }

private:
    std::filesystem::path dir_;
    std::vector<std::pair<std::string, std::string>> written_;
};

inline std::string manifest_text(const std::string& command, const StudyConfig& cfg, const OutputDir& dir) {
    using study_detail::sha256_hex;
    std::string out = "# dgplace run manifest\n";
    out += "tool = dgplace " DGPLACE_VERSION "\n";
    out += "command = " + command + "\n";
    out += "compiler = " + std::string(__VERSION__) + "\n";
    out += "eigen = " + std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
           std::to_string(EIGEN_MINOR_VERSION) + "\n";
    out += "openssl = " OPENSSL_VERSION_TEXT "\n";
    out += "feeder_sha256 = " + sha256_hex(io_detail::read_file(cfg.feeder_path)) + "\n";
    if (!cfg.config_path.empty()) out += "config_sha256 = " + sha256_hex(cfg.config_text) + "\n";
    if (!cfg.plan_source.empty() && std::filesystem::is_regular_file(cfg.plan_source))
        out += "plan_sha256 = " + sha256_hex(io_detail::read_file(cfg.plan_source)) + "\n";
    out += "seed = " + (cfg.mode == RunMode::optimize ? std::to_string(cfg.ga.rng_seed) : std::string("none")) + "\n";
    out += "\n# effective settings\n" + describe_config(cfg);
    out += "\n# outputs\n";
    for (const auto& [name, hash] : dir.written()) out += "sha256 " + name + " = " + hash + "\n";
    return out;
}

/// Config from --config (if any) with command-line flags layered on top.
/// `mode` is empty for solve, which only uses the feeder and solver settings.
inline StudyConfig resolve_config(const CliOptions& o, std::optional<RunMode> mode) {
    StudyConfig cfg = o.config.empty() ? StudyConfig{} : load_study_config(o.config);
    if (!o.feeder.empty()) cfg.feeder_path = o.feeder;
    if (!o.plan.empty()) {
        cfg.plan_source = o.plan;
        cfg.plan = study_detail::load_plan_arg(o.plan);
    }
    if (!o.out.empty()) cfg.out_dir = o.out;
    if (o.seed) cfg.ga.rng_seed = *o.seed;
    if (!o.weights.empty()) cfg.weights = study_detail::parse_weights(o.weights, cfg.weights);
    if (!o.fitness_mode.empty()) cfg.weights.mode = study_detail::parse_fitness_mode(o.fitness_mode);

    if (cfg.feeder_path.empty()) throw ConfigError("no feeder given (--feeder or 'feeder' in the config)");
    if (mode && cfg.mode && *cfg.mode != *mode)
        throw ConfigError(std::string("config selects mode ") + to_string(*cfg.mode) + ", not " + to_string(*mode));
    if (mode && *mode != RunMode::compare && cfg.plan)
        throw ConfigError("a fixed plan cannot be combined with " + std::string(to_string(*mode)));
    cfg.mode = mode;
    cfg.solver.check();
    cfg.weights.check();
    return cfg;
}

/// Every non-slack bus when the config leaves candidate_buses open.
inline void resolve_candidates(StudyConfig& cfg, const Network& net) {
    if (!cfg.ga.candidate_buses.empty()) return;
    for (const Bus& b : net.buses)
        if (b.kind != BusKind::slack) cfg.ga.candidate_buses.push_back(b.id);
}

inline int cmd_solve(const CliOptions& o, std::ostream& out) {
    StudyConfig cfg = resolve_config(o, std::nullopt);
    const Network net = load_network_file(cfg.feeder_path);
    const PowerFlowSolution sol = solve(net, cfg.solver);
    const CaseSummary s = summarize(sol, net);
    const std::string summary = summary_text(s, net, sol);
    OutputDir dir(cfg.out_dir);
    dir.write("voltages.csv", voltages_csv(sol));
    dir.write("currents.csv", currents_csv(sol, net));
    dir.write("summary.txt", summary);
    cfg.plan.reset();
    dir.write("manifest.txt", manifest_text("solve", cfg, dir));
    out << summary;
    return 0;
}

struct CompareResult {
    std::vector<CompareRow> rows;
    IndexReport report;
    std::string text;
};

inline CompareResult run_compare(const Network& net, const DGPlan& plan, const StudyConfig& cfg) {
    const Network dg_net = apply_dg(net, plan);
    const PowerFlowSolution base = solve(net, cfg.solver);
    const PowerFlowSolution with = solve(dg_net, cfg.solver);
    CompareResult r;
    r.rows = compare_rows(summarize(base, net), summarize(with, dg_net), net);
    r.report = compute_index_report(net, base, dg_net, with, plan, cfg.weights, cfg.ltap_end);
    r.text = compare_text(r.rows, r.report, plan);
    return r;
}

inline void write_compare(OutputDir& dir, const CompareResult& r) {
    dir.write("compare.txt", r.text);
    dir.write("compare.csv", compare_csv(r.rows));
    dir.write("indices.csv", to_csv(r.report));
}

inline int cmd_compare(const CliOptions& o, std::ostream& out) {
    StudyConfig cfg = resolve_config(o, RunMode::compare);
    if (!cfg.plan) throw ConfigError("compare needs a DG plan (--plan or 'plan' in the config)");
    const Network net = load_network_file(cfg.feeder_path);
    const CompareResult r = run_compare(net, *cfg.plan, cfg);
    OutputDir dir(cfg.out_dir);
    write_compare(dir, r);
    dir.write("manifest.txt", manifest_text("compare", cfg, dir));
    out << r.text;
    return 0;
}

inline int cmd_optimize(const CliOptions& o, std::ostream& out) {
    StudyConfig cfg = resolve_config(o, RunMode::optimize);
    const Network net = load_network_file(cfg.feeder_path);
    resolve_candidates(cfg, net);
    cfg.ga.check(net);
    const GaResult result = optimize(net, cfg.ga, cfg.weights, cfg.solver, cfg.ltap_end);
    const CompareResult r = run_compare(net, result.best_plan, cfg);
    OutputDir dir(cfg.out_dir);
    dir.write("history.csv", history_csv(result));
    dir.write("best_plan.txt", serialize_plan(result.best_plan));
    write_compare(dir, r);
    dir.write("manifest.txt", manifest_text("optimize", cfg, dir));
    out << "best fitness " << study_detail::format_exact(result.best_fitness) << " after " << result.generations_run
        << " generations (" << result.evaluations << " evaluations)\n\n"
        << r.text;
    return 0;
}

inline int cmd_sweep(const CliOptions& o, std::ostream& out) {
    StudyConfig cfg = resolve_config(o, RunMode::sweep);
    const Network net = load_network_file(cfg.feeder_path);
    resolve_candidates(cfg, net);
    const SearchSpace space = SearchSpace::from(cfg.ga, cfg.enumeration_cap);
    space.check();
    const EvaluationSettings settings{cfg.solver, cfg.weights, cfg.ga.penalty_coefficient, cfg.ltap_end};
    const auto ranked = exhaustive_search(net, space, settings, cfg.ga.threads);
    OutputDir dir(cfg.out_dir);
    dir.write("sweep.csv", sweep_report(ranked));
    dir.write("manifest.txt", manifest_text("sweep", cfg, dir));
    out << ranked.size() << " plans evaluated\nbest " << describe_plan(ranked.front().plan) << " fitness "
        << study_detail::format_exact(ranked.front().evaluation.fitness) << "\n";
    return 0;
}

/// Checks the feeder, and the config and plan when given, without solving.
inline int cmd_validate(const CliOptions& o, std::ostream& out) {
    StudyConfig cfg = o.config.empty() ? StudyConfig{} : load_study_config(o.config);
    if (!o.feeder.empty()) cfg.feeder_path = o.feeder;
    if (cfg.feeder_path.empty()) throw ConfigError("no feeder given (--feeder or 'feeder' in the config)");
    const Network net = load_network_file(cfg.feeder_path);
    out << "feeder ok: " << net.bus_count() << " buses, " << net.branch_count() << " branches, " << net.loop_count()
        << " loops\n";
    if (!o.plan.empty()) cfg.plan = study_detail::load_plan_arg(o.plan);
    if (cfg.plan) {
        apply_dg(net, *cfg.plan);
        out << "plan ok: " << describe_plan(merge_units(*cfg.plan)) << "\n";
    }
    if (!o.config.empty()) {
        cfg.solver.check();
        cfg.weights.check();
        if (cfg.mode == RunMode::optimize || cfg.mode == RunMode::sweep) {
            if (cfg.plan) throw ConfigError("a fixed plan cannot be combined with " + std::string(to_string(*cfg.mode)));
            resolve_candidates(cfg, net);
            cfg.ga.check(net);
            if (cfg.mode == RunMode::sweep) SearchSpace::from(cfg.ga, cfg.enumeration_cap).check();
        }
        out << "config ok\n";
    }
    return 0;
}

/// Runs a subcommand, mapping errors to exit codes:
/// 1 input error, 2 non-convergence, 3 configuration error.
inline int run(const CliOptions& o, std::ostream& out, std::ostream& err) {
    try {
        if (o.command == "solve") return cmd_solve(o, out);
        if (o.command == "compare") return cmd_compare(o, out);
        if (o.command == "optimize") return cmd_optimize(o, out);
        if (o.command == "sweep") return cmd_sweep(o, out);
        if (o.command == "validate") return cmd_validate(o, out);
        err << "error: unknown command '" << o.command << "'\n";
        return 1;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << "\n";
        return 1;
    } catch (const ConvergenceError& e) {
        err << "non-convergence: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace dgplace::study
