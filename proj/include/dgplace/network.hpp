#pragma once

// Feeder data model: buses, branches, bases, and DG injections.
//
// Loads and DG ratings are held in physical units (MW / MVAr) exactly as they
// appear in the feeder file; impedances and flow limits are per-unit. The
// per-unit conversion helpers below are the single place where the two meet.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <map>
#include <numbers>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "dgplace/errors.hpp"

namespace dgplace {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kWeightBudgetTol = 1e-9;
inline constexpr double kDefaultVMin = 0.90;
inline constexpr double kDefaultVMax = 1.05;

enum class BusKind { slack, load };

struct Bus {
    int id = 0;
    BusKind kind = BusKind::load;
    double p_load = 0.0;  // MW
    double q_load = 0.0;  // MVAr
    double v_min = kDefaultVMin;
    double v_max = kDefaultVMax;
    double weight_k = 0.0;
    // DG injection applied by apply_dg; zero in a network read from a feeder file.
    double p_gen = 0.0;  // MW
    double q_gen = 0.0;  // MVAr

    bool has_load() const { return p_load != 0.0 || q_load != 0.0; }
    double net_p() const { return p_load - p_gen; }
    double net_q() const { return q_load - q_gen; }

    bool operator==(const Bus&) const = default;
};

struct Branch {
    int id = 0;
    int from_bus = 0;
    int to_bus = 0;
    double r_per_km = 0.0;  // pu/km
    double x_per_km = 0.0;  // pu/km
    double length_km = 1.0;
    double p_flow_max = kInf;  // pu, applied to |P| at the sending end

    double resistance() const { return r_per_km * length_km; }
    double reactance() const { return x_per_km * length_km; }
    std::complex<double> impedance() const { return {resistance(), reactance()}; }

    bool operator==(const Branch&) const = default;
};

/// A feeder under study. Buses are stored in id order, so bus `id` lives at
/// index `id - 1`; bus 1 is the substation (slack).
struct Network {
    double v_base = 0.0;  // kV, line-to-line
    double s_base = 0.0;  // MVA, three-phase
    std::vector<Bus> buses;
    std::vector<Branch> branches;

    std::size_t bus_count() const { return buses.size(); }
    std::size_t branch_count() const { return branches.size(); }

    bool has_bus(int id) const { return id >= 1 && static_cast<std::size_t>(id) <= buses.size(); }
    const Bus& bus(int id) const { return buses.at(static_cast<std::size_t>(id - 1)); }
    Bus& bus(int id) { return buses.at(static_cast<std::size_t>(id - 1)); }

    /// Independent loops: branches - buses + 1.
    long loop_count() const {
        return static_cast<long>(branches.size()) - static_cast<long>(buses.size()) + 1;
    }

    double to_pu_power(double mw) const { return mw / s_base; }
    double from_pu_power(double pu) const { return pu * s_base; }

    /// I_base = S_base / (sqrt(3) * V_base), in amperes.
    double base_current_amps() const { return s_base * 1e6 / (std::numbers::sqrt3 * v_base * 1e3); }

    /// Net complex demand at a bus in pu (load minus DG).
    std::complex<double> net_demand_pu(int id) const {
        const Bus& b = bus(id);
        return {to_pu_power(b.net_p()), to_pu_power(b.net_q())};
    }

    /// Complex load (ignoring DG) at a bus in pu.
    std::complex<double> load_pu(int id) const {
        const Bus& b = bus(id);
        return {to_pu_power(b.p_load), to_pu_power(b.q_load)};
    }

    bool operator==(const Network&) const = default;
};

struct DGUnit {
    int bus = 0;
    double p_gen = 0.0;  // MW
    double q_gen = 0.0;  // MVAr
    double p_min = -kInf;
    double p_max = kInf;
    double q_min = -kInf;
    double q_max = kInf;

    bool operator==(const DGUnit&) const = default;
};

struct DGPlan {
    std::vector<DGUnit> units;

    bool empty() const { return units.empty(); }
    bool operator==(const DGPlan&) const = default;
};

/// Collapses units sharing a bus into one, summing injections and
/// capability limits. Output is ordered by bus id.
inline DGPlan merge_units(const DGPlan& plan) {
    std::map<int, DGUnit> by_bus;
    for (const DGUnit& u : plan.units) {
        auto [it, inserted] = by_bus.try_emplace(u.bus, u);
        if (inserted) continue;
        DGUnit& m = it->second;
        m.p_gen += u.p_gen;
        m.q_gen += u.q_gen;
        m.p_min += u.p_min;
        m.p_max += u.p_max;
        m.q_min += u.q_min;
        m.q_max += u.q_max;
    }
    DGPlan merged;
    merged.units.reserve(by_bus.size());
    for (auto& [bus, unit] : by_bus) merged.units.push_back(unit);
    return merged;
}

/// Returns a copy of `net` with the plan's injections added to each DG bus.
inline Network apply_dg(const Network& net, const DGPlan& plan) {
    Network out = net;
    for (const DGUnit& u : merge_units(plan).units) {
        if (!net.has_bus(u.bus)) throw InputError("DG unit on unknown bus " + std::to_string(u.bus));
        Bus& b = out.bus(u.bus);
        if (b.kind == BusKind::slack)
            throw InputError("DG unit on slack bus " + std::to_string(u.bus));
        b.p_gen += u.p_gen;
        b.q_gen += u.q_gen;
    }
    return out;
}

/// Sum of K_i over buses that carry a load.
inline double load_weight_sum(const Network& net) {
    double sum = 0.0;
    for (const Bus& b : net.buses)
        if (b.has_load()) sum += b.weight_k;
    return sum;
}

/// Checks every Network invariant and describes each breach. Empty iff valid.
inline std::vector<std::string> validate(const Network& net) {
    std::vector<std::string> out;
    auto bus_name = [](int id) { return "bus " + std::to_string(id); };
    auto branch_name = [](int id) { return "branch " + std::to_string(id); };

    if (!(net.v_base > 0.0)) out.push_back("bases: v_base must be positive");
    if (!(net.s_base > 0.0)) out.push_back("bases: s_base must be positive");
    if (net.buses.empty()) {
        out.push_back("network has no buses");
        return out;
    }

    int slack_count = 0;
    for (std::size_t i = 0; i < net.buses.size(); ++i) {
        const Bus& b = net.buses[i];
        if (b.id != static_cast<int>(i) + 1)
            out.push_back(bus_name(b.id) + ": ids must run 1..N in order (found at position " +
                          std::to_string(i + 1) + ")");
        if (b.kind == BusKind::slack) {
            ++slack_count;
            if (b.id != 1) out.push_back(bus_name(b.id) + ": only bus 1 may be the slack");
        }
        if (!(b.p_load >= 0.0)) out.push_back(bus_name(b.id) + ": p_load must be >= 0");
        if (!std::isfinite(b.q_load)) out.push_back(bus_name(b.id) + ": q_load must be finite");
        if (!(b.v_min > 0.0 && b.v_min < b.v_max))
            out.push_back(bus_name(b.id) + ": voltage bounds must satisfy 0 < v_min < v_max");
        if (!(b.weight_k >= 0.0)) out.push_back(bus_name(b.id) + ": weight_k must be >= 0");
    }
    if (slack_count != 1 || net.buses.front().kind != BusKind::slack)
        out.push_back("exactly one slack bus is required and it must be bus 1 (found " +
                      std::to_string(slack_count) + ")");

    std::set<int> branch_ids;
    for (const Branch& br : net.branches) {
        if (!branch_ids.insert(br.id).second) out.push_back(branch_name(br.id) + ": duplicate id");
        if (!net.has_bus(br.from_bus))
            out.push_back(branch_name(br.id) + ": from bus " + std::to_string(br.from_bus) + " does not exist");
        if (!net.has_bus(br.to_bus))
            out.push_back(branch_name(br.id) + ": to bus " + std::to_string(br.to_bus) + " does not exist");
        if (br.from_bus == br.to_bus) out.push_back(branch_name(br.id) + ": from_bus equals to_bus");
        if (!(br.r_per_km >= 0.0)) out.push_back(branch_name(br.id) + ": r_per_km must be >= 0");
        if (!std::isfinite(br.x_per_km)) out.push_back(branch_name(br.id) + ": x_per_km must be finite");
        if (!(br.length_km > 0.0)) out.push_back(branch_name(br.id) + ": length_km must be > 0");
        if (!(br.p_flow_max > 0.0)) out.push_back(branch_name(br.id) + ": p_flow_max must be > 0");
    }

    // Reachability from the slack.
    const std::size_t n = net.buses.size();
    std::vector<std::vector<int>> adj(n + 1);
    for (const Branch& br : net.branches) {
        if (!net.has_bus(br.from_bus) || !net.has_bus(br.to_bus)) continue;
        adj[static_cast<std::size_t>(br.from_bus)].push_back(br.to_bus);
        adj[static_cast<std::size_t>(br.to_bus)].push_back(br.from_bus);
    }
    std::vector<bool> seen(n + 1, false);
    std::queue<int> frontier;
    frontier.push(1);
    seen[1] = true;
    while (!frontier.empty()) {
        int at = frontier.front();
        frontier.pop();
        for (int next : adj[static_cast<std::size_t>(at)]) {
            if (!seen[static_cast<std::size_t>(next)]) {
                seen[static_cast<std::size_t>(next)] = true;
                frontier.push(next);
            }
        }
    }
    for (std::size_t id = 1; id <= n; ++id)
        if (!seen[id]) out.push_back(bus_name(static_cast<int>(id)) + ": not reachable from the slack bus");

    const bool any_load = std::any_of(net.buses.begin(), net.buses.end(), [](const Bus& b) { return b.has_load(); });
    const double weight_sum = load_weight_sum(net);
    if (any_load && std::abs(weight_sum - 1.0) > kWeightBudgetTol)
        out.push_back("weight budget: sum of K_i over load buses is " + std::to_string(weight_sum) +
                      ", expected 1");
    return out;
}

}  // namespace dgplace
