// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "test_support.hpp"

using namespace dgplace;
using namespace dgplace::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int n, const char* title, const std::function<Outcome()>& fn) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = fn();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double t = seconds_since(t0);
    std::printf("%s [%d] %s: %s (%.3f s)\n", o.pass ? "PASS" : "FAIL", n, title, o.detail.c_str(), t);
    std::fflush(stdout);
    if (!o.pass) ++failures;
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// |V2| of a two-bus feeder from the quartic in |V2|^2.
double closed_form_v2(double p, double q, double r, double x, double v1) {
    const double b = 2.0 * (p * r + q * x) - v1 * v1;
    const double c = (p * p + q * q) * (r * r + x * x);
    return std::sqrt((-b + std::sqrt(b * b - 4.0 * c)) / 2.0);
}

Outcome two_bus_check() {
    double worst = 0.0;
    double worst_time = 0.0;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> load(0.0, 0.8), imp(0.005, 0.05);
    for (int trial = 0; trial < 50; ++trial) {
        const double p = load(rng), q = 0.6 * load(rng), r = imp(rng), x = imp(rng);
        const Network net = two_bus(p, q, r, x);
        const double v2 = closed_form_v2(p, q, r, x, 1.0);
        for (SolverMethod m : {SolverMethod::sweep, SolverMethod::newton}) {
            SolverOptions o;
            o.method = m;
            const int reps = 200;
            const auto t0 = Clock::now();
            PowerFlowSolution sol;
            for (int k = 0; k < reps; ++k) sol = solve(net, o);
            worst_time = std::max(worst_time, seconds_since(t0) / reps);
            worst = std::max(worst, std::abs(sol.v_mag[1] - v2));
        }
    }
    return {worst <= 1e-6 && worst_time < 1e-3,
            "max |dV| " + fmt("%.2e", worst) + " pu, slowest solve " + fmt("%.1f", worst_time * 1e6) + " us"};
}

Outcome power_balance_check() {
    std::mt19937_64 rng(2024);
    double worst_balance = 0.0, worst_branch = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        Network net = random_radial(rng, 30);
        if (trial % 2 == 1 && net.bus_count() > 2) {
            const int bus = std::uniform_int_distribution<int>(2, static_cast<int>(net.bus_count()))(rng);
            net = apply_dg(net, {{{bus, 0.1, 0.02}}});
        }
        const PowerFlowSolution sol = solve(net);
        // Generation: slack injection rebuilt from bus voltages and branch
        // impedances alone, plus DG.
        Complex s_slack{0.0, 0.0};
        const Complex v1 = sol.voltage(1);
        for (const Branch& br : net.branches) {
            const Complex i = (sol.voltage(br.from_bus) - sol.voltage(br.to_bus)) / br.impedance();
            if (br.from_bus == 1) s_slack += v1 * std::conj(i);
            if (br.to_bus == 1) s_slack -= v1 * std::conj(i);
        }
        double gen = s_slack.real(), demand = 0.0, branch_loss = 0.0;
        for (const Bus& bus : net.buses) {
            gen += net.to_pu_power(bus.p_gen);
            demand += net.to_pu_power(bus.p_load);
        }
        for (std::size_t b = 0; b < net.branch_count(); ++b)
            branch_loss += sol.i_branch[b] * sol.i_branch[b] * net.branches[b].resistance();
        const double loss = total_losses(sol, net).p_loss;
        worst_balance = std::max(worst_balance, std::abs(gen - demand - loss));
        worst_branch = std::max(worst_branch, std::abs(loss - branch_loss));
    }
    return {worst_balance < 1e-5 && worst_branch < 1e-5,
            "200 feeders, max balance residual " + fmt("%.2e", worst_balance) + " pu, max loss disagreement " +
                fmt("%.2e", worst_branch) + " pu"};
}

Outcome identity_check() {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const char* feeders[] = {"feeder9.txt", "feeder30.txt", "feeder30_radial.txt", "feeder34.txt", "feeder11.txt"};
    double worst = 0.0;
    int cases = 0;
    for (int k = 0; k < 100; ++k) {
        const Network net = load_network_file(data_path(feeders[k % 5]));
        const PowerFlowSolution sol = solve(net);
        double a = u(rng), b = u(rng), c = u(rng);
        const double s = a + b + c;
        IndexWeights w{a / s, b / s, 1.0 - a / s - b / s};
        for (FitnessMode mode : {FitnessMode::as_written, FitnessMode::consistent}) {
            w.mode = mode;
            const IndexReport r = compute_index_report(net, sol, apply_dg(net, {}), solve(apply_dg(net, {})), {}, w);
            for (double v : {r.llri, r.vpii, r.ltapii, r.bi}) worst = std::max(worst, std::abs(v - 1.0));
            ++cases;
        }
    }
    return {worst <= 1e-9, std::to_string(cases) + " cases, max |index - 1| " + fmt("%.2e", worst)};
}

Outcome reference_arithmetic_check() {
    const double l = llri(0.0048, 0.0198), v = vpii(0.1800, 0.1750), t = ltapii(0.5419, 1.6332);
    const bool ok = l >= 0.236 && l <= 0.247 && std::abs(v - 1.0286) <= 0.0005 && std::abs(t - 0.3318) <= 0.0005;
    return {ok, "LLRI " + fmt("%.4f", l) + ", VPII " + fmt("%.4f", v) + ", LTAPII " + fmt("%.4f", t)};
}

struct Directional {
    double reduction = 0.0, llri = 0.0, vpii = 0.0, ltapii = 0.0, reg_before = 0.0, reg_after = 0.0, seconds = 0.0;
};

Directional directional(const char* feeder, const DGPlan& plan) {
    const auto t0 = Clock::now();
    const Network net = load_network_file(data_path(feeder));
    const Network dg = apply_dg(net, plan);
    const PowerFlowSolution a = solve(net), b = solve(dg);
    const IndexReport r = compute_index_report(net, a, dg, b, plan, IndexWeights{});
    Directional d;
    const double before = total_losses(a, net).p_loss, after = total_losses(b, dg).p_loss;
    d.reduction = 100.0 * (before - after) / before;
    d.llri = r.llri;
    d.vpii = r.vpii;
    d.ltapii = r.ltapii;
    d.reg_before = voltage_regulation(a);
    d.reg_after = voltage_regulation(b);
    d.seconds = seconds_since(t0);
    return d;
}

Outcome directional_check() {
    const Directional t = directional("feeder30.txt", {{{7, 1.75, 1.0}, {23, 1.75, 1.0}}});
    const Directional n = directional("feeder9.txt", {{{7, 6.0, 2.0}}});
    const bool ok30 = t.reduction >= 60.0 && t.vpii > 1.0 && t.llri < 0.5 && t.ltapii < 1.0 &&
                      t.reg_after < t.reg_before && t.seconds < 1.0;
    const bool ok9 = n.reduction >= 70.0 && n.vpii > 1.0 && n.llri < 0.5 && n.ltapii < 1.0 &&
                     n.reg_after < n.reg_before && n.seconds < 1.0;
    return {ok30 && ok9,
            "30-node loss -" + fmt("%.1f", t.reduction) + "% LLRI " + fmt("%.3f", t.llri) + " VPII " +
                fmt("%.3f", t.vpii) + " LTAPII " + fmt("%.3f", t.ltapii) + " reg " + fmt("%.2f", t.reg_before) +
                "->" + fmt("%.2f", t.reg_after) + "%; 9-bus loss -" + fmt("%.1f", n.reduction) + "% LLRI " +
                fmt("%.3f", n.llri) + " VPII " + fmt("%.3f", n.vpii) + " LTAPII " + fmt("%.3f", n.ltapii) + " reg " +
                fmt("%.2f", n.reg_before) + "->" + fmt("%.2f", n.reg_after) + "%"};
}

GaConfig eleven_bus_config(std::uint64_t seed) {
    GaConfig cfg;
    cfg.n_dg = 2;
    cfg.candidate_buses = {2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
    cfg.p_grid = {0.0, 0.6, 1.2, 1.8};
    cfg.q_grid = {0.2};
    cfg.population_size = 40;
    cfg.mutation_rate = 0.2;
    cfg.stall_generations = 15;
    cfg.max_generations = 100;
    cfg.rng_seed = seed;
    return cfg;
}

bool elitist(const GaResult& r) {
    for (std::size_t i = 1; i < r.history.size(); ++i)
        if (r.history[i].best < r.history[i - 1].best) return false;
    return true;
}

int monotone_violations = 0;
int ga_runs = 0;

Outcome ga_vs_oracle_check() {
    const Network net = load_network_file(data_path("feeder11.txt"));
    const SearchSpace space = SearchSpace::from(eleven_bus_config(1));
    const auto ranked = exhaustive_search(net, space, EvaluationSettings{});
    const double optimum = ranked.front().evaluation.fitness;
    int hits = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const GaResult r = optimize(net, eleven_bus_config(seed), IndexWeights{});
        ++ga_runs;
        if (!elitist(r)) ++monotone_violations;
        if (r.best_fitness >= optimum - 0.01 * std::abs(optimum)) ++hits;
    }
    return {hits >= 19, std::to_string(ranked.size()) + " plans, optimum " + fmt("%.5f", optimum) + ", " +
                            std::to_string(hits) + "/20 seeds within 1%"};
}

Outcome ga_invariants_check() {
    const Network net = load_network_file(data_path("feeder11.txt"));
    bool identical = true;
    for (std::uint64_t seed : {3u, 11u, 29u}) {
        GaConfig cfg = eleven_bus_config(seed);
        const GaResult a = optimize(net, cfg, IndexWeights{});
        const GaResult b = optimize(net, cfg, IndexWeights{});
        cfg.threads = 3;
        const GaResult c = optimize(net, cfg, IndexWeights{});
        ga_runs += 3;
        for (const GaResult* r : {&a, &b, &c})
            if (!elitist(*r)) ++monotone_violations;
        identical = identical && a == b && a == c && history_csv(a) == history_csv(b) &&
                    serialize_plan(a.best_plan) == serialize_plan(c.best_plan);
    }
    return {monotone_violations == 0 && identical,
            std::to_string(ga_runs) + " runs, " + std::to_string(monotone_violations) +
                " elitism breaches, repeated seeds " + (identical ? "identical" : "DIFFER")};
}

Outcome constraint_pressure_check() {
    const Network net = load_network_file(data_path("feeder11_tight.txt"));
    GaConfig cfg;
    cfg.n_dg = 1;
    cfg.candidate_buses = {2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
    cfg.p_grid = {0.0, 0.5, 1.0, 1.5, 2.0};
    cfg.q_grid = {0.0, 0.5, 1.0};
    cfg.population_size = 20;
    cfg.mutation_rate = 0.1;
    cfg.rng_seed = 5;

    const SearchSpace space = SearchSpace::from(cfg);
    const auto free = exhaustive_search(net, space, IndexWeights{}, 0.0);
    const std::size_t free_violations = free.front().evaluation.report.constraint_violations.size();

    cfg.penalty_coefficient = 100.0;
    const GaResult r = optimize(net, cfg, IndexWeights{});
    const FitnessEvaluator ev(net, evaluation_settings(cfg, IndexWeights{}));
    const Evaluation e = ev.evaluate(r.best_plan);
    const std::size_t violations = e.report.constraint_violations.size();
    return {free_violations > 0 && e.converged && violations == 0,
            "unpenalized optimum " + describe_plan(free.front().plan) + " has " + std::to_string(free_violations) +
                " violation(s); penalized GA best " + describe_plan(r.best_plan) + " has " +
                std::to_string(violations)};
}

}  // namespace

int main() {
    criterion(1, "two-bus analytic check", two_bus_check);
    criterion(2, "power balance on random radial feeders", power_balance_check);
    criterion(3, "identity suite", identity_check);
    criterion(4, "index arithmetic from reference raw values", reference_arithmetic_check);
    criterion(5, "directional reproduction", directional_check);
    const auto t6 = Clock::now();
    criterion(6, "GA vs exhaustive oracle", [&] {
        Outcome o = ga_vs_oracle_check();
        const double t = seconds_since(t6);
        o.pass = o.pass && t < 60.0;
        return o;
    });
    criterion(7, "GA invariants", ga_invariants_check);
    criterion(8, "constraint pressure", constraint_pressure_check);
    std::printf("%d of 8 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
