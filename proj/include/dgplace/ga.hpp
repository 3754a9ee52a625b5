#pragma once

// Genetic algorithm for DG placement and sizing.
//
// A chromosome is a fixed-length list of (bus, P step, Q step) genes, one per
// DG unit; sizes come from discrete menus. Each generation:
//   1. keep the better half of the population (truncation selection),
//   2. pair survivors in shuffled order, two children per pair (one-point crossover),
//   3. mutate every member of the new pool except the single best survivor,
//   4. evaluate whatever changed.
// The run stops when the best fitness has not improved for
// `stall_generations` generations, or at `max_generations`.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dgplace/errors.hpp"
#include "dgplace/evaluator.hpp"
#include "dgplace/feeder_io.hpp"
#include "dgplace/network.hpp"
#include "dgplace/parallel.hpp"

namespace dgplace {

using Rng = std::mt19937_64;

struct Gene {
    int bus = 0;  // bus id, drawn from the candidate set
    int p_step = 0;
    int q_step = 0;

    bool operator==(const Gene&) const = default;
    auto operator<=>(const Gene&) const = default;
};

struct Chromosome {
    std::vector<Gene> genes;
    std::optional<double> fitness;

    bool operator==(const Chromosome&) const = default;
};

struct UnitLimits {
    double p_min = -kInf;
    double p_max = kInf;
    double q_min = -kInf;
    double q_max = kInf;

    bool operator==(const UnitLimits&) const = default;
};

struct GaConfig {
    int n_dg = 1;
    std::vector<int> candidate_buses;
    std::vector<double> p_grid;  // MW
    std::vector<double> q_grid;  // MVAr
    UnitLimits unit_limits;      // capability attached to every decoded unit
    int population_size = 40;
    double mutation_rate = 0.05;
    double penalty_coefficient = 100.0;
    int stall_generations = 15;
    int max_generations = 200;
    std::uint64_t rng_seed = 1;
    int threads = 1;

    void check() const {
        if (n_dg < 1) throw ConfigError("n_dg must be >= 1");
        if (candidate_buses.empty()) throw ConfigError("no candidate buses");
        if (p_grid.empty() || q_grid.empty()) throw ConfigError("size grids must be non-empty");
        if (population_size < 4 || population_size % 2 != 0)
            throw ConfigError("population_size must be even and >= 4");
        if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) throw ConfigError("mutation_rate must lie in [0, 1]");
        if (!(penalty_coefficient >= 0.0)) throw ConfigError("penalty_coefficient must be >= 0");
        if (stall_generations < 1) throw ConfigError("stall_generations must be >= 1");
        if (max_generations < 0) throw ConfigError("max_generations must be >= 0");
        if (threads < 1) throw ConfigError("threads must be >= 1");
    }

    /// Candidate buses must exist and must not be the slack.
    void check(const Network& net) const {
        check();
        for (int b : candidate_buses) {
            if (!net.has_bus(b)) throw ConfigError("candidate bus " + std::to_string(b) + " does not exist");
            if (net.bus(b).kind == BusKind::slack)
                throw ConfigError("candidate bus " + std::to_string(b) + " is the slack bus");
        }
    }
};

struct GenerationStats {
    int generation = 0;
    double best = 0.0;
    double mean = 0.0;  // over members with finite fitness

    bool operator==(const GenerationStats&) const = default;
};

struct GaResult {
    DGPlan best_plan;
    Chromosome best_chromosome;
    double best_fitness = kInfeasibleFitness;
    std::vector<GenerationStats> history;
    int generations_run = 0;
    std::size_t evaluations = 0;

    bool operator==(const GaResult&) const = default;
};

inline bool is_valid(const Chromosome& c, const GaConfig& cfg) {
    if (c.genes.size() != static_cast<std::size_t>(cfg.n_dg)) return false;
    return std::all_of(c.genes.begin(), c.genes.end(), [&](const Gene& g) {
        return std::find(cfg.candidate_buses.begin(), cfg.candidate_buses.end(), g.bus) != cfg.candidate_buses.end() &&
               g.p_step >= 0 && static_cast<std::size_t>(g.p_step) < cfg.p_grid.size() && g.q_step >= 0 &&
               static_cast<std::size_t>(g.q_step) < cfg.q_grid.size();
    });
}

/// Plan with one unit per gene; units landing on the same bus are merged.
inline DGPlan decode(const Chromosome& c, const GaConfig& cfg) {
    DGPlan plan;
    for (const Gene& g : c.genes) {
        if (g.p_step < 0 || static_cast<std::size_t>(g.p_step) >= cfg.p_grid.size() || g.q_step < 0 ||
            static_cast<std::size_t>(g.q_step) >= cfg.q_grid.size())
            throw ConfigError("gene size index out of grid range at bus " + std::to_string(g.bus));
        DGUnit u;
        u.bus = g.bus;
        u.p_gen = cfg.p_grid[static_cast<std::size_t>(g.p_step)];
        u.q_gen = cfg.q_grid[static_cast<std::size_t>(g.q_step)];
        u.p_min = cfg.unit_limits.p_min;
        u.p_max = cfg.unit_limits.p_max;
        u.q_min = cfg.unit_limits.q_min;
        u.q_max = cfg.unit_limits.q_max;
        plan.units.push_back(u);
    }
    return merge_units(plan);
}

namespace ga_detail {

inline int draw_index(std::size_t size, Rng& rng) {
    return std::uniform_int_distribution<int>(0, static_cast<int>(size) - 1)(rng);
}

inline Gene random_gene(const GaConfig& cfg, Rng& rng) {
    Gene g;
    g.bus = cfg.candidate_buses[static_cast<std::size_t>(draw_index(cfg.candidate_buses.size(), rng))];
    g.p_step = draw_index(cfg.p_grid.size(), rng);
    g.q_step = draw_index(cfg.q_grid.size(), rng);
    return g;
}

inline double finite_mean(const std::vector<Chromosome>& pop) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const Chromosome& c : pop) {
        if (c.fitness && std::isfinite(*c.fitness)) {
            sum += *c.fitness;
            ++n;
        }
    }
    return n == 0 ? kInfeasibleFitness : sum / static_cast<double>(n);
}

}  // namespace ga_detail

inline Chromosome random_chromosome(const GaConfig& cfg, Rng& rng) {
    Chromosome c;
    c.genes.reserve(static_cast<std::size_t>(cfg.n_dg));
    for (int i = 0; i < cfg.n_dg; ++i) c.genes.push_back(ga_detail::random_gene(cfg, rng));
    return c;
}

/// Best half of an evaluated population, best first; equal fitness keeps
/// the lower ordinal first.
inline std::vector<Chromosome> select(const std::vector<Chromosome>& population) {
    if (population.size() % 2 != 0) throw std::logic_error("select: population size must be even");
    std::vector<std::size_t> order(population.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (const Chromosome& c : population)
        if (!c.fitness) throw std::logic_error("select: population contains an unevaluated chromosome");
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return *population[a].fitness > *population[b].fitness; });
    std::vector<Chromosome> survivors;
    survivors.reserve(population.size() / 2);
    for (std::size_t i = 0; i < population.size() / 2; ++i) survivors.push_back(population[order[i]]);
    return survivors;
}

/// One-point crossover at a fixed cut. For multi-gene chromosomes the cut is
/// a gene boundary in [1, n-1]; single-gene chromosomes are cut between the
/// bus field and the size fields.
inline std::pair<Chromosome, Chromosome> crossover_at(const Chromosome& a, const Chromosome& b, std::size_t cut) {
    if (a.genes.size() != b.genes.size()) throw std::logic_error("crossover: parents differ in length");
    Chromosome ca;
    Chromosome cb;
    if (a.genes.size() == 1) {
        ca.genes = {{a.genes[0].bus, b.genes[0].p_step, b.genes[0].q_step}};
        cb.genes = {{b.genes[0].bus, a.genes[0].p_step, a.genes[0].q_step}};
    } else {
        ca.genes.assign(a.genes.begin(), a.genes.begin() + static_cast<std::ptrdiff_t>(cut));
        ca.genes.insert(ca.genes.end(), b.genes.begin() + static_cast<std::ptrdiff_t>(cut), b.genes.end());
        cb.genes.assign(b.genes.begin(), b.genes.begin() + static_cast<std::ptrdiff_t>(cut));
        cb.genes.insert(cb.genes.end(), a.genes.begin() + static_cast<std::ptrdiff_t>(cut), a.genes.end());
    }
    // Copies of an evaluated parent keep its fitness.
    if (ca.genes == a.genes) ca.fitness = a.fitness;
    else if (ca.genes == b.genes) ca.fitness = b.fitness;
    if (cb.genes == b.genes) cb.fitness = b.fitness;
    else if (cb.genes == a.genes) cb.fitness = a.fitness;
    return {std::move(ca), std::move(cb)};
}

inline std::pair<Chromosome, Chromosome> crossover(const Chromosome& a, const Chromosome& b, Rng& rng) {
    std::size_t cut = 1;
    if (a.genes.size() > 1)
        cut = static_cast<std::size_t>(
            std::uniform_int_distribution<int>(1, static_cast<int>(a.genes.size()) - 1)(rng));
    return crossover_at(a, b, cut);
}

struct MutationOutcome {
    Chromosome chromosome;
    std::size_t redraws = 0;  // fields selected for redraw (the value may repeat)
};

inline MutationOutcome mutate_traced(const Chromosome& c, const GaConfig& cfg, Rng& rng) {
    MutationOutcome out{c, 0};
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    auto hit = [&] { return coin(rng) < cfg.mutation_rate; };
    for (Gene& g : out.chromosome.genes) {
        if (hit()) {
            g.bus = cfg.candidate_buses[static_cast<std::size_t>(ga_detail::draw_index(cfg.candidate_buses.size(), rng))];
            ++out.redraws;
        }
        if (hit()) {
            g.p_step = ga_detail::draw_index(cfg.p_grid.size(), rng);
            ++out.redraws;
        }
        if (hit()) {
            g.q_step = ga_detail::draw_index(cfg.q_grid.size(), rng);
            ++out.redraws;
        }
    }
    if (out.chromosome.genes != c.genes) out.chromosome.fitness.reset();
    return out;
}

/// Each field is redrawn uniformly from its domain with probability mutation_rate.
inline Chromosome mutate(const Chromosome& c, const GaConfig& cfg, Rng& rng) {
    return mutate_traced(c, cfg, rng).chromosome;
}

/// Scores a chromosome. Must be safe to call concurrently when cfg.threads > 1.
using FitnessFunction = std::function<double(const Chromosome&)>;

struct GaState {
    std::vector<Chromosome> population;
    Rng rng;
    int generation = 0;
    std::size_t evaluations = 0;

    double best_fitness() const {
        double best = kInfeasibleFitness;
        for (const Chromosome& c : population)
            if (c.fitness) best = std::max(best, *c.fitness);
        return best;
    }
};

/// Fills in fitness for every unevaluated member. Results are written by
/// population ordinal, so the outcome does not depend on thread timing.
inline void evaluate_pending(GaState& state, const FitnessFunction& fitness, int threads) {
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < state.population.size(); ++i)
        if (!state.population[i].fitness) pending.push_back(i);
    std::vector<double> scores(pending.size());
    parallel_for(pending.size(), threads,
                 [&](std::size_t k) { scores[k] = fitness(state.population[pending[k]]); });
    for (std::size_t k = 0; k < pending.size(); ++k) state.population[pending[k]].fitness = scores[k];
    state.evaluations += pending.size();
}

inline GaState initial_state(const GaConfig& cfg, const FitnessFunction& fitness) {
    cfg.check();
    GaState state{{}, Rng(cfg.rng_seed), 0, 0};
    state.population.reserve(static_cast<std::size_t>(cfg.population_size));
    for (int i = 0; i < cfg.population_size; ++i) state.population.push_back(random_chromosome(cfg, state.rng));
    evaluate_pending(state, fitness, cfg.threads);
    return state;
}

/// One generation: select, crossover, mutate all but the elite, evaluate.
inline void step_generation(GaState& state, const GaConfig& cfg, const FitnessFunction& fitness) {
    std::vector<Chromosome> survivors = select(state.population);
    const std::size_t half = survivors.size();
    const std::size_t n_children = state.population.size() - half;

    std::vector<std::size_t> order(half);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), state.rng);

    std::vector<Chromosome> pool = survivors;
    pool.reserve(state.population.size());
    for (std::size_t k = 0; pool.size() < half + n_children; k += 2) {
        const Chromosome& pa = survivors[order[k % half]];
        const Chromosome& pb = survivors[order[(k + 1) % half]];
        auto [ca, cb] = crossover(pa, pb, state.rng);
        pool.push_back(std::move(ca));
        if (pool.size() < half + n_children) pool.push_back(std::move(cb));
    }

    // pool[0] is the best survivor and is exempt from mutation.
    for (std::size_t i = 1; i < pool.size(); ++i) pool[i] = mutate(pool[i], cfg, state.rng);

    state.population = std::move(pool);
    evaluate_pending(state, fitness, cfg.threads);
    ++state.generation;
}

/// Runs the GA against an arbitrary fitness function.
inline GaResult optimize(const GaConfig& cfg, const FitnessFunction& fitness) {
    GaState state = initial_state(cfg, fitness);
    GaResult result;
    auto record = [&] {
        result.history.push_back({state.generation, state.best_fitness(), ga_detail::finite_mean(state.population)});
    };
    record();

    int stall = 0;
    while (state.generation < cfg.max_generations && stall < cfg.stall_generations) {
        const double previous = state.best_fitness();
        step_generation(state, cfg, fitness);
        record();
        stall = state.best_fitness() > previous ? 0 : stall + 1;
    }

    const std::vector<Chromosome> ranked = select(state.population);
    result.best_chromosome = ranked.front();
    result.best_fitness = *ranked.front().fitness;
    result.best_plan = decode(ranked.front(), cfg);
    result.generations_run = state.generation;
    result.evaluations = state.evaluations;
    return result;
}

inline EvaluationSettings evaluation_settings(const GaConfig& cfg, const IndexWeights& weights,
                                              const SolverOptions& solver = {}, LtapEnd end = LtapEnd::receiving) {
    return {solver, weights, cfg.penalty_coefficient, end};
}

/// Fitness of a chromosome on a feeder: penalized benefit index of its decoded plan.
inline double evaluate(const Chromosome& c, const FitnessEvaluator& evaluator, const GaConfig& cfg) {
    return evaluator.fitness(decode(c, cfg));
}

/// Runs the GA on a feeder.
inline GaResult optimize(const Network& net, const GaConfig& cfg, const IndexWeights& weights,
                         const SolverOptions& solver = {}, LtapEnd end = LtapEnd::receiving) {
    cfg.check(net);
    const FitnessEvaluator evaluator(net, evaluation_settings(cfg, weights, solver, end));
    return optimize(cfg, [&](const Chromosome& c) { return evaluate(c, evaluator, cfg); });
}

inline std::string history_csv(const GaResult& r) {
    std::string out = "generation,best,mean\n";
    for (const GenerationStats& s : r.history)
        out += std::to_string(s.generation) + "," + io_detail::format_exact(s.best) + "," +
               io_detail::format_exact(s.mean) + "\n";
    return out;
}

}  // namespace dgplace
