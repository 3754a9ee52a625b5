#pragma once

// Exhaustive search over the GA's discrete decision space. A plan is a
// multiset of n_dg genes (units may share a bus and merge), so the space is
// enumerated as non-decreasing tuples of gene indices: C(G + n - 1, n) plans
// for G = |buses| * |p_grid| * |q_grid|. Every plan is scored through the
// same decode + FitnessEvaluator path the GA uses.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "dgplace/errors.hpp"
#include "dgplace/evaluator.hpp"
#include "dgplace/feeder_io.hpp"
#include "dgplace/ga.hpp"

namespace dgplace {

inline constexpr std::uint64_t kDefaultEnumerationCap = 1'000'000;

struct SearchSpace {
    std::vector<int> candidate_buses;
    std::vector<double> p_grid;
    std::vector<double> q_grid;
    int n_dg = 1;
    UnitLimits unit_limits;
    std::uint64_t cap = kDefaultEnumerationCap;

    static SearchSpace from(const GaConfig& cfg, std::uint64_t cap = kDefaultEnumerationCap) {
        return {cfg.candidate_buses, cfg.p_grid, cfg.q_grid, cfg.n_dg, cfg.unit_limits, cap};
    }

    std::uint64_t gene_count() const {
        return static_cast<std::uint64_t>(candidate_buses.size()) * p_grid.size() * q_grid.size();
    }

    /// C(G + n - 1, n), saturating at UINT64_MAX.
    std::uint64_t enumeration_count() const {
        const std::uint64_t g = gene_count();
        if (g == 0 || n_dg < 1) return 0;
        // Multiplicative binomial; each partial product is itself a binomial coefficient.
        std::uint64_t result = 1;
        for (std::uint64_t k = 1; k <= static_cast<std::uint64_t>(n_dg); ++k) {
            const std::uint64_t top = g - 1 + k;
            if (result > std::numeric_limits<std::uint64_t>::max() / top) return std::numeric_limits<std::uint64_t>::max();
            result = result * top / k;
        }
        return result;
    }

    /// The GA configuration that shares this decision space (for decode).
    GaConfig as_ga_config() const {
        GaConfig cfg;
        cfg.n_dg = n_dg;
        cfg.candidate_buses = candidate_buses;
        cfg.p_grid = p_grid;
        cfg.q_grid = q_grid;
        cfg.unit_limits = unit_limits;
        return cfg;
    }

    Gene gene(std::uint64_t index) const {
        const std::uint64_t per_bus = p_grid.size() * q_grid.size();
        return {candidate_buses[static_cast<std::size_t>(index / per_bus)],
                static_cast<int>((index / q_grid.size()) % p_grid.size()),
                static_cast<int>(index % q_grid.size())};
    }

    void check() const {
        if (candidate_buses.empty()) throw ConfigError("no candidate buses");
        if (p_grid.empty() || q_grid.empty()) throw ConfigError("size grids must be non-empty");
        if (n_dg < 1) throw ConfigError("n_dg must be >= 1");
        const std::uint64_t count = enumeration_count();
        if (count > cap)
            throw ConfigError("search space too large: " + std::to_string(count) + " plans exceeds cap of " +
                              std::to_string(cap));
    }
};

struct RankedPlan {
    Chromosome chromosome;  // genes in enumeration order, fitness filled
    DGPlan plan;
    Evaluation evaluation;
};

/// Enumerates every gene multiset in lexicographic order of gene indices.
template <typename Fn>
void for_each_plan(const SearchSpace& space, Fn&& fn) {
    const std::uint64_t g = space.gene_count();
    const auto n = static_cast<std::size_t>(space.n_dg);
    std::vector<std::uint64_t> idx(n, 0);
    while (true) {
        Chromosome c;
        c.genes.reserve(n);
        for (std::uint64_t i : idx) c.genes.push_back(space.gene(i));
        fn(std::move(c));
        // Advance to the next non-decreasing tuple.
        std::size_t pos = n;
        while (pos > 0 && idx[pos - 1] == g - 1) --pos;
        if (pos == 0) return;
        const std::uint64_t next = idx[pos - 1] + 1;
        for (std::size_t k = pos - 1; k < n; ++k) idx[k] = next;
    }
}

/// Every plan in the space with its fitness, best first. Equal fitness
/// keeps enumeration (lexicographic) order.
inline std::vector<RankedPlan> exhaustive_search(const Network& net, const SearchSpace& space,
                                                 const EvaluationSettings& settings, int threads = 1) {
    space.check();
    const GaConfig cfg = space.as_ga_config();
    cfg.check(net);
    const FitnessEvaluator evaluator(net, settings);

    std::vector<RankedPlan> out;
    out.reserve(static_cast<std::size_t>(space.enumeration_count()));
    for_each_plan(space, [&](Chromosome c) {
        RankedPlan r;
        r.plan = decode(c, cfg);
        r.chromosome = std::move(c);
        out.push_back(std::move(r));
    });
    parallel_for(out.size(), threads, [&](std::size_t i) {
        out[i].evaluation = evaluator.evaluate(out[i].plan);
        out[i].chromosome.fitness = out[i].evaluation.fitness;
    });
    std::stable_sort(out.begin(), out.end(), [](const RankedPlan& a, const RankedPlan& b) {
        return a.evaluation.fitness > b.evaluation.fitness;
    });
    return out;
}

inline std::vector<RankedPlan> exhaustive_search(const Network& net, const SearchSpace& space,
                                                 const IndexWeights& weights, double penalty_coefficient = 100.0,
                                                 const SolverOptions& solver = {}) {
    return exhaustive_search(net, space, EvaluationSettings{solver, weights, penalty_coefficient, LtapEnd::receiving});
}

/// `bus:p:q` items joined by ';', in merged (bus id) order.
inline std::string describe_plan(const DGPlan& plan) {
    std::string out;
    for (const DGUnit& u : plan.units) {
        if (!out.empty()) out += ';';
        out += std::to_string(u.bus) + ":" + io_detail::format_exact(u.p_gen) + ":" + io_detail::format_exact(u.q_gen);
    }
    return out.empty() ? "none" : out;
}

/// Scenario table, one row per plan in ranked order. Plans whose power flow
/// diverged carry `nan` indices and a violation count of -1.
inline std::string sweep_report(const std::vector<RankedPlan>& ranked) {
    using io_detail::format_exact;
    std::string out = "plan,llri,vpii,ltapii,bi,violations\n";
    const std::string nan = "nan";
    for (const RankedPlan& r : ranked) {
        out += describe_plan(r.plan) + ",";
        if (r.evaluation.converged) {
            const IndexReport& rep = r.evaluation.report;
            out += format_exact(rep.llri) + "," + format_exact(rep.vpii) + "," + format_exact(rep.ltapii) + "," +
                   format_exact(rep.bi) + "," + std::to_string(rep.constraint_violations.size()) + "\n";
        } else {
            out += nan + "," + nan + "," + nan + "," + nan + ",-1\n";
        }
    }
    return out;
}

inline std::string sweep_report(const Network& net, const SearchSpace& space, const EvaluationSettings& settings,
                                int threads = 1) {
    return sweep_report(exhaustive_search(net, space, settings, threads));
}

}  // namespace dgplace
