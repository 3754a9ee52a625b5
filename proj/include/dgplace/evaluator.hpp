#pragma once

// Fitness of a DG plan: benefit index of the with/without-DG pair minus a
// penalty proportional to the summed constraint excess. The GA and the
// exhaustive oracle both score plans through FitnessEvaluator::evaluate.

#include <cmath>
#include <limits>

#include "dgplace/errors.hpp"
#include "dgplace/indices.hpp"
#include "dgplace/network.hpp"
#include "dgplace/powerflow.hpp"

namespace dgplace {

/// Fitness assigned to plans whose power flow does not converge.
inline constexpr double kInfeasibleFitness = -std::numeric_limits<double>::infinity();

struct Evaluation {
    double fitness = kInfeasibleFitness;
    bool converged = false;
    IndexReport report;  // meaningful only when converged
};

struct EvaluationSettings {
    SolverOptions solver;
    IndexWeights weights;
    double penalty_coefficient = 100.0;
    LtapEnd ltap_end = LtapEnd::receiving;
};

class FitnessEvaluator {
public:
    /// Solves the no-DG base case once. Throws ConfigError if it fails.
    FitnessEvaluator(Network net, EvaluationSettings settings)
        : net_(std::move(net)), settings_(settings) {
        settings_.weights.check();
        if (!(settings_.penalty_coefficient >= 0.0)) throw ConfigError("penalty coefficient must be >= 0");
        base_ = solve_unchecked(net_, settings_.solver);
        if (!base_.converged)
            throw ConfigError("base case (no DG) power flow did not converge; worst bus " +
                              std::to_string(base_.worst_bus));
    }

    const Network& network() const { return net_; }
    const PowerFlowSolution& base_solution() const { return base_; }
    const EvaluationSettings& settings() const { return settings_; }

    /// Pure and thread-safe: a full power flow plus index computation.
    Evaluation evaluate(const DGPlan& plan) const {
        Evaluation out;
        const Network dg_net = apply_dg(net_, plan);
        PowerFlowSolution sol;
        try {
            sol = solve_unchecked(dg_net, settings_.solver);
        } catch (const ConvergenceError&) {
            return out;
        }
        if (!sol.converged) return out;
        out.converged = true;
        out.report = compute_index_report(net_, base_, dg_net, sol, plan, settings_.weights, settings_.ltap_end,
                                          /*floor_ratios=*/true);
        out.fitness = out.report.bi - settings_.penalty_coefficient * total_excess(out.report.constraint_violations);
        return out;
    }

    double fitness(const DGPlan& plan) const { return evaluate(plan).fitness; }

private:
    Network net_;
    EvaluationSettings settings_;
    PowerFlowSolution base_;
};

}  // namespace dgplace
