#pragma once

// Balanced AC power flow for distribution feeders.
//
// Radial feeders are solved by backward/forward sweep (branch-current
// summation, then voltage-drop update). Feeders with loops are solved by
// polar Newton-Raphson on the bus admittance matrix. Both methods use a flat
// start and stop when the summed absolute bus power mismatch drops below the
// tolerance; the sweep additionally requires the per-iteration voltage change
// to be below it.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <queue>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dgplace/errors.hpp"
#include "dgplace/network.hpp"

namespace dgplace {

using Complex = std::complex<double>;

enum class SolverMethod { automatic, sweep, newton };

struct SolverOptions {
    double tolerance = 1e-6;  // pu
    int max_iterations = 50;
    double slack_voltage = 1.0;  // pu
    SolverMethod method = SolverMethod::automatic;

    void check() const {
        if (!(tolerance > 0.0)) throw ConfigError("solver tolerance must be > 0");
        if (max_iterations < 1) throw ConfigError("solver max_iterations must be >= 1");
        if (!(slack_voltage > 0.0)) throw ConfigError("slack voltage must be > 0");
    }
};

struct PowerFlowSolution {
    std::vector<double> v_mag;          // per bus, pu
    std::vector<double> v_ang;          // per bus, rad
    std::vector<double> i_branch;       // per branch, |I| pu
    std::vector<Complex> i_phasor;      // per branch, from_bus -> to_bus
    double p_slack = 0.0;               // pu
    double q_slack = 0.0;               // pu
    double p_loss = 0.0;                // pu, sum of |I|^2 R over branches
    double q_loss = 0.0;                // pu, sum of |I|^2 X over branches
    int iterations = 0;
    bool converged = false;
    double mismatch = 0.0;              // summed |S| mismatch over non-slack buses
    int worst_bus = 0;
    double worst_mismatch = 0.0;
    SolverMethod method = SolverMethod::automatic;

    Complex voltage(int bus_id) const { return std::polar(v_mag[static_cast<std::size_t>(bus_id - 1)], v_ang[static_cast<std::size_t>(bus_id - 1)]); }
    double v(int bus_id) const { return v_mag[static_cast<std::size_t>(bus_id - 1)]; }
};

namespace pf_detail {

inline void require_converged(const PowerFlowSolution& sol, const char* op) {
    if (!sol.converged) throw ConvergenceError(std::string(op) + ": power flow solution did not converge",
                                               sol.worst_bus, sol.worst_mismatch);
}

/// Net complex demand for every bus in pu, indexed by bus position.
inline std::vector<Complex> demand_vector(const Network& net) {
    std::vector<Complex> s(net.bus_count());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = net.net_demand_pu(static_cast<int>(i) + 1);
    return s;
}

/// Fills currents, losses, slack injection and mismatch bookkeeping from a
/// voltage vector and from->to branch current phasors.
inline void finish_solution(const Network& net, const std::vector<Complex>& v, std::vector<Complex> currents,
                            PowerFlowSolution& sol) {
    const std::size_t n = net.bus_count();
    sol.v_mag.resize(n);
    sol.v_ang.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        sol.v_mag[i] = std::abs(v[i]);
        sol.v_ang[i] = std::arg(v[i]);
    }
    std::vector<Complex> injection(n, Complex{});
    sol.i_branch.resize(currents.size());
    sol.p_loss = sol.q_loss = 0.0;
    for (std::size_t b = 0; b < currents.size(); ++b) {
        const Branch& br = net.branches[b];
        const double mag = std::abs(currents[b]);
        sol.i_branch[b] = mag;
        sol.p_loss += mag * mag * br.resistance();
        sol.q_loss += mag * mag * br.reactance();
        injection[static_cast<std::size_t>(br.from_bus - 1)] += currents[b];
        injection[static_cast<std::size_t>(br.to_bus - 1)] -= currents[b];
    }
    sol.i_phasor = std::move(currents);
    const Complex s_slack = v[0] * std::conj(injection[0]);
    sol.p_slack = s_slack.real();
    sol.q_slack = s_slack.imag();
}

/// Bus power mismatch |S_inj + S_demand| for non-slack buses; records the
/// sum and the worst bus in `sol`.
inline void record_mismatch(const std::vector<Complex>& mismatch, PowerFlowSolution& sol) {
    sol.mismatch = 0.0;
    sol.worst_mismatch = 0.0;
    sol.worst_bus = 0;
    for (std::size_t i = 1; i < mismatch.size(); ++i) {
        const double m = std::abs(mismatch[i]);
        sol.mismatch += m;
        if (m > sol.worst_mismatch || sol.worst_bus == 0) {
            sol.worst_mismatch = m;
            sol.worst_bus = static_cast<int>(i) + 1;
        }
    }
}

inline bool finite_voltages(const std::vector<Complex>& v) {
    return std::all_of(v.begin(), v.end(), [](const Complex& x) {
        return std::isfinite(x.real()) && std::isfinite(x.imag()) && std::abs(x) > 1e-6;
    });
}

struct RadialTree {
    std::vector<int> order;          // bus positions, slack first, parents before children
    std::vector<int> parent_branch;  // per bus position; -1 for the slack
    std::vector<int> parent_bus;     // per bus position
};

inline RadialTree build_tree(const Network& net) {
    const std::size_t n = net.bus_count();
    std::vector<std::vector<int>> incident(n);
    for (std::size_t b = 0; b < net.branch_count(); ++b) {
        incident[static_cast<std::size_t>(net.branches[b].from_bus - 1)].push_back(static_cast<int>(b));
        incident[static_cast<std::size_t>(net.branches[b].to_bus - 1)].push_back(static_cast<int>(b));
    }
    RadialTree tree;
    tree.parent_branch.assign(n, -1);
    tree.parent_bus.assign(n, -1);
    std::vector<bool> seen(n, false);
    std::queue<int> frontier;
    frontier.push(0);
    seen[0] = true;
    while (!frontier.empty()) {
        const int at = frontier.front();
        frontier.pop();
        tree.order.push_back(at);
        for (int b : incident[static_cast<std::size_t>(at)]) {
            const Branch& br = net.branches[static_cast<std::size_t>(b)];
            const int other = (br.from_bus - 1 == at) ? br.to_bus - 1 : br.from_bus - 1;
            if (seen[static_cast<std::size_t>(other)]) continue;
            seen[static_cast<std::size_t>(other)] = true;
            tree.parent_branch[static_cast<std::size_t>(other)] = b;
            tree.parent_bus[static_cast<std::size_t>(other)] = at;
            frontier.push(other);
        }
    }
    if (tree.order.size() != n) throw InputError("network is not connected to the slack bus");
    return tree;
}

inline PowerFlowSolution solve_sweep(const Network& net, const SolverOptions& opts) {
    if (net.loop_count() != 0) throw ConfigError("backward/forward sweep requires a radial network");
    const std::size_t n = net.bus_count();
    const RadialTree tree = build_tree(net);
    const std::vector<Complex> demand = demand_vector(net);

    PowerFlowSolution sol;
    sol.method = SolverMethod::sweep;
    std::vector<Complex> v(n, Complex(opts.slack_voltage, 0.0));
    std::vector<Complex> load_current(n);
    std::vector<Complex> down_current(n);  // current in each bus's parent branch, parent -> child
    std::vector<Complex> mismatch(n);

    for (int iter = 1; iter <= opts.max_iterations; ++iter) {
        sol.iterations = iter;
        for (std::size_t i = 1; i < n; ++i) load_current[i] = std::conj(demand[i] / v[i]);

        // Backward: accumulate currents from the leaves toward the slack.
        std::fill(down_current.begin(), down_current.end(), Complex{});
        for (auto it = tree.order.rbegin(); it != tree.order.rend(); ++it) {
            const auto i = static_cast<std::size_t>(*it);
            if (i == 0) continue;
            down_current[i] += load_current[i];
            down_current[static_cast<std::size_t>(tree.parent_bus[i])] += down_current[i];
        }

        // Forward: voltage drops from the slack outward.
        double max_dv = 0.0;
        for (int pos : tree.order) {
            const auto i = static_cast<std::size_t>(pos);
            if (i == 0) continue;
            const Branch& br = net.branches[static_cast<std::size_t>(tree.parent_branch[i])];
            const Complex updated = v[static_cast<std::size_t>(tree.parent_bus[i])] - br.impedance() * down_current[i];
            max_dv = std::max(max_dv, std::abs(updated - v[i]));
            v[i] = updated;
        }
        if (!finite_voltages(v)) break;

        // The state (v, branch currents) satisfies KVL and KCL exactly; what
        // remains is the load-current error at each bus.
        for (std::size_t i = 1; i < n; ++i) mismatch[i] = demand[i] - v[i] * std::conj(load_current[i]);
        record_mismatch(mismatch, sol);
        if (max_dv < opts.tolerance && sol.mismatch < opts.tolerance) {
            sol.converged = true;
            break;
        }
    }

    std::vector<Complex> currents(net.branch_count(), Complex{});
    for (std::size_t i = 1; i < n; ++i) {
        const auto b = static_cast<std::size_t>(tree.parent_branch[i]);
        const bool forward = net.branches[b].from_bus - 1 == tree.parent_bus[i];
        currents[b] = forward ? down_current[i] : -down_current[i];
    }
    finish_solution(net, v, std::move(currents), sol);
    return sol;
}

inline PowerFlowSolution solve_newton(const Network& net, const SolverOptions& opts) {
    const auto n = static_cast<Eigen::Index>(net.bus_count());
    for (const Branch& br : net.branches)
        if (std::abs(br.impedance()) == 0.0)
            throw ConvergenceError("degenerate network: branch " + std::to_string(br.id) +
                                   " has zero impedance (singular admittance matrix)");

    Eigen::MatrixXcd ybus = Eigen::MatrixXcd::Zero(n, n);
    for (const Branch& br : net.branches) {
        const Complex y = 1.0 / br.impedance();
        const Eigen::Index f = br.from_bus - 1;
        const Eigen::Index t = br.to_bus - 1;
        ybus(f, f) += y;
        ybus(t, t) += y;
        ybus(f, t) -= y;
        ybus(t, f) -= y;
    }
    const std::vector<Complex> demand = demand_vector(net);

    PowerFlowSolution sol;
    sol.method = SolverMethod::newton;
    Eigen::VectorXcd v = Eigen::VectorXcd::Constant(n, Complex(opts.slack_voltage, 0.0));
    Eigen::VectorXd va = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd vm = Eigen::VectorXd::Constant(n, opts.slack_voltage);
    const Eigen::Index m = n - 1;  // every non-slack bus is PQ

    auto mismatch_of = [&](const Eigen::VectorXcd& volts, Eigen::VectorXcd& ibus) {
        ibus = ybus * volts;
        std::vector<Complex> mis(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) mis[static_cast<std::size_t>(i)] = volts(i) * std::conj(ibus(i)) + demand[static_cast<std::size_t>(i)];
        return mis;
    };

    Eigen::VectorXcd ibus;
    std::vector<Complex> mis = mismatch_of(v, ibus);
    record_mismatch(mis, sol);
    if (sol.mismatch < opts.tolerance) sol.converged = true;

    for (int iter = 1; iter <= opts.max_iterations && !sol.converged && m > 0; ++iter) {
        sol.iterations = iter;
        // Complex partial derivatives of bus injections w.r.t. angle and magnitude.
        const Eigen::VectorXcd vnorm = v.array() / vm.array().cast<Complex>();
        Eigen::MatrixXcd ds_dva = -(ybus * v.asDiagonal());
        ds_dva.diagonal() += ibus;
        ds_dva = (Complex(0.0, 1.0) * v.asDiagonal() * ds_dva.conjugate()).eval();
        Eigen::MatrixXcd ds_dvm = v.asDiagonal() * (ybus * vnorm.asDiagonal()).conjugate();
        ds_dvm.diagonal() += ibus.conjugate().cwiseProduct(vnorm);

        Eigen::MatrixXd jac(2 * m, 2 * m);
        jac.topLeftCorner(m, m) = ds_dva.bottomRightCorner(m, m).real();
        jac.topRightCorner(m, m) = ds_dvm.bottomRightCorner(m, m).real();
        jac.bottomLeftCorner(m, m) = ds_dva.bottomRightCorner(m, m).imag();
        jac.bottomRightCorner(m, m) = ds_dvm.bottomRightCorner(m, m).imag();

        Eigen::VectorXd f(2 * m);
        for (Eigen::Index i = 0; i < m; ++i) {
            f(i) = mis[static_cast<std::size_t>(i + 1)].real();
            f(m + i) = mis[static_cast<std::size_t>(i + 1)].imag();
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
        if (!lu.isInvertible()) throw ConvergenceError("singular Jacobian: network is electrically degenerate");
        const Eigen::VectorXd dx = lu.solve(-f);

        va.tail(m) += dx.head(m);
        vm.tail(m) += dx.tail(m);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = std::polar(vm(i), va(i));

        std::vector<Complex> vv(v.data(), v.data() + n);
        if (!finite_voltages(vv) || (vm.array() <= 0.0).any()) break;
        mis = mismatch_of(v, ibus);
        record_mismatch(mis, sol);
        if (sol.mismatch < opts.tolerance) sol.converged = true;
    }
    if (m == 0) sol.converged = true;

    std::vector<Complex> volts(v.data(), v.data() + n);
    std::vector<Complex> currents(net.branch_count());
    for (std::size_t b = 0; b < net.branch_count(); ++b) {
        const Branch& br = net.branches[b];
        currents[b] = (volts[static_cast<std::size_t>(br.from_bus - 1)] - volts[static_cast<std::size_t>(br.to_bus - 1)]) / br.impedance();
    }
    finish_solution(net, volts, std::move(currents), sol);
    return sol;
}

}  // namespace pf_detail

/// Solves the power flow and returns the final iterate whether or not it
/// converged; callers check `converged`.
inline PowerFlowSolution solve_unchecked(const Network& net, const SolverOptions& opts = {}) {
    opts.check();
    SolverMethod method = opts.method;
    if (method == SolverMethod::automatic)
        method = net.loop_count() == 0 ? SolverMethod::sweep : SolverMethod::newton;
    PowerFlowSolution sol = method == SolverMethod::sweep ? pf_detail::solve_sweep(net, opts)
                                                          : pf_detail::solve_newton(net, opts);
    sol.v_mag[0] = opts.slack_voltage;
    sol.v_ang[0] = 0.0;
    return sol;
}

/// Solves the power flow; throws ConvergenceError naming the worst bus when
/// the iteration limit is reached.
inline PowerFlowSolution solve(const Network& net, const SolverOptions& opts = {}) {
    PowerFlowSolution sol = solve_unchecked(net, opts);
    if (!sol.converged)
        throw ConvergenceError("power flow did not converge after " + std::to_string(sol.iterations) +
                                   " iterations; worst mismatch " + std::to_string(sol.worst_mismatch) +
                                   " pu at bus " + std::to_string(sol.worst_bus),
                               sol.worst_bus, sol.worst_mismatch);
    return sol;
}

struct LossTotals {
    double p_loss = 0.0;  // pu
    double q_loss = 0.0;  // pu
};

/// Losses as total generation (slack plus DG) minus total demand.
inline LossTotals total_losses(const PowerFlowSolution& sol, const Network& net) {
    pf_detail::require_converged(sol, "total_losses");
    double p_gen = sol.p_slack;
    double q_gen = sol.q_slack;
    double p_dem = 0.0;
    double q_dem = 0.0;
    for (const Bus& b : net.buses) {
        p_gen += net.to_pu_power(b.p_gen);
        q_gen += net.to_pu_power(b.q_gen);
        p_dem += net.to_pu_power(b.p_load);
        q_dem += net.to_pu_power(b.q_load);
    }
    return {p_gen - p_dem, q_gen - q_dem};
}

/// Percentage sag of the lowest bus voltage relative to the slack voltage.
inline double voltage_regulation(const PowerFlowSolution& sol) {
    pf_detail::require_converged(sol, "voltage_regulation");
    const double v_slack = sol.v_mag.front();
    const double v_low = *std::min_element(sol.v_mag.begin(), sol.v_mag.end());
    return 100.0 * (v_slack - v_low) / v_slack;
}

struct BranchFlow {
    int branch_id = 0;
    double p_flow = 0.0;  // pu, sending (from) end
    double q_flow = 0.0;  // pu, sending (from) end
    double i_mag = 0.0;   // pu
};

inline std::vector<BranchFlow> branch_flows(const PowerFlowSolution& sol, const Network& net) {
    pf_detail::require_converged(sol, "branch_flows");
    std::vector<BranchFlow> out;
    out.reserve(net.branch_count());
    for (std::size_t b = 0; b < net.branch_count(); ++b) {
        const Branch& br = net.branches[b];
        const Complex s = sol.voltage(br.from_bus) * std::conj(sol.i_phasor[b]);
        out.push_back({br.id, s.real(), s.imag(), sol.i_branch[b]});
    }
    return out;
}

inline double to_amps(double i_pu, const Network& net) { return i_pu * net.base_current_amps(); }

}  // namespace dgplace
