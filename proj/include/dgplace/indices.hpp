#pragma once

// DG benefit indices computed from a with-DG / without-DG solution pair:
//
//   LL     = 3 * sum_i I_i^2 R_i D_i        line losses
//   VP     = sum_i V_i |L_i| K_i            weighted voltage profile
//   LTAP   = sum_i I_i V_j                  line transmission apparent power
//
// each turned into a with/without ratio (LLRI, VPII, LTAPII), and the
// composite benefit index
//
//   BI = bw_vpi * VPII + bw_llr / LLRI + bw_ltap * g(LTAPII)
//
// where g is the identity in `as_written` mode and 1/x in `consistent` mode.
// Consistent mode makes every term grow as the corresponding benefit grows.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dgplace/errors.hpp"
#include "dgplace/feeder_io.hpp"
#include "dgplace/network.hpp"
#include "dgplace/powerflow.hpp"

namespace dgplace {

inline constexpr double kRatioGuard = 1e-12;

enum class FitnessMode { as_written, consistent };

/// Which bus voltage pairs with a branch current in LTAP.
enum class LtapEnd { receiving, sending };

struct IndexWeights {
    double bw_vpi = 1.0 / 3.0;
    double bw_llr = 1.0 / 3.0;
    double bw_ltap = 1.0 / 3.0;
    FitnessMode mode = FitnessMode::consistent;

    void check() const {
        if (!(bw_vpi >= 0.0) || !(bw_llr >= 0.0) || !(bw_ltap >= 0.0))
            throw ConfigError("index weights must be non-negative");
        const double sum = bw_vpi + bw_llr + bw_ltap;
        if (std::abs(sum - 1.0) > kWeightBudgetTol)
            throw ConfigError("index weights must sum to 1 (got " + io_detail::format_exact(sum) + ")");
    }
};

namespace idx_detail {

inline double ratio(double with, double without, const char* name) {
    if (!(without >= kRatioGuard))
        throw InputError(std::string(name) + ": without-DG value must be positive (got " +
                         io_detail::format_exact(without) + ")");
    return with / without;
}

inline double resistive_sum(const PowerFlowSolution& sol, const Network& net) {
    double sum = 0.0;
    for (std::size_t b = 0; b < net.branch_count(); ++b) {
        const Branch& br = net.branches[b];
        sum += sol.i_branch[b] * sol.i_branch[b] * br.r_per_km * br.length_km;
    }
    return sum;
}

}  // namespace idx_detail

/// Line-loss sum with the three-phase factor; currents in pu as solved.
inline double line_loss(const PowerFlowSolution& sol, const Network& net) {
    pf_detail::require_converged(sol, "line_loss");
    return 3.0 * idx_detail::resistive_sum(sol, net);
}

inline double llri(double ll_with, double ll_without) { return idx_detail::ratio(ll_with, ll_without, "LLRI"); }

inline double voltage_profile(const PowerFlowSolution& sol, const Network& net) {
    pf_detail::require_converged(sol, "voltage_profile");
    if (std::abs(load_weight_sum(net) - 1.0) > kWeightBudgetTol)
        throw InputError("voltage profile: load-bus weights K_i must sum to 1 (got " +
                         io_detail::format_exact(load_weight_sum(net)) + ")");
    double vp = 0.0;
    for (const Bus& b : net.buses) vp += sol.v(b.id) * std::abs(net.load_pu(b.id)) * b.weight_k;
    return vp;
}

inline double vpii(double vp_with, double vp_without) { return idx_detail::ratio(vp_with, vp_without, "VPII"); }

inline double ltap(const PowerFlowSolution& sol, const Network& net, LtapEnd end = LtapEnd::receiving) {
    pf_detail::require_converged(sol, "ltap");
    double sum = 0.0;
    for (std::size_t b = 0; b < net.branch_count(); ++b) {
        const Branch& br = net.branches[b];
        sum += sol.i_branch[b] * sol.v(end == LtapEnd::receiving ? br.to_bus : br.from_bus);
    }
    return sum;
}

inline double ltapii(double ltap_with, double ltap_without) {
    return idx_detail::ratio(ltap_with, ltap_without, "LTAPII");
}

inline double benefit_index(double llri_value, double vpii_value, double ltapii_value, const IndexWeights& w) {
    w.check();
    if (!(llri_value > 0.0)) throw InputError("benefit index: LLRI must be positive");
    if (w.mode == FitnessMode::as_written)
        return w.bw_vpi * vpii_value + w.bw_llr / llri_value + w.bw_ltap * ltapii_value;
    if (!(ltapii_value > 0.0)) throw InputError("benefit index: LTAPII must be positive in consistent mode");
    return w.bw_vpi * vpii_value + w.bw_llr / llri_value + w.bw_ltap / ltapii_value;
}

// ---------------------------------------------------------------------------
// Operating constraints

enum class ViolationKind { p_gen, q_gen, branch_flow, bus_voltage };

inline const char* to_string(ViolationKind k) {
    switch (k) {
    case ViolationKind::p_gen: return "p_gen";
    case ViolationKind::q_gen: return "q_gen";
    case ViolationKind::branch_flow: return "branch_flow";
    case ViolationKind::bus_voltage: return "bus_voltage";
    }
    return "?";
}

struct ConstraintViolation {
    ViolationKind kind = ViolationKind::bus_voltage;
    int entity = 0;       // bus id for p_gen/q_gen/bus_voltage, branch id for branch_flow
    double bound = 0.0;   // the bound that was crossed
    double actual = 0.0;
    double excess = 0.0;  // |actual - bound|, in the quantity's own unit

    std::string describe() const {
        const char* what = kind == ViolationKind::branch_flow ? "branch " : "bus ";
        return std::string(to_string(kind)) + " " + what + std::to_string(entity) +
               ": actual " + io_detail::format_exact(actual) + " vs bound " + io_detail::format_exact(bound) +
               " (excess " + io_detail::format_exact(excess) + ")";
    }
};

/// Every bound crossed by the solved state: DG P/Q capability (MW/MVAr),
/// sending-end |P| on branches (pu), and bus voltage magnitudes (pu).
inline std::vector<ConstraintViolation> check_constraints(const PowerFlowSolution& sol, const Network& net,
                                                          const DGPlan& plan) {
    pf_detail::require_converged(sol, "check_constraints");
    std::vector<ConstraintViolation> out;
    auto bounded = [&out](ViolationKind kind, int entity, double actual, double lo, double hi) {
        if (actual < lo) out.push_back({kind, entity, lo, actual, lo - actual});
        else if (actual > hi) out.push_back({kind, entity, hi, actual, actual - hi});
    };
    for (const DGUnit& u : merge_units(plan).units) {
        bounded(ViolationKind::p_gen, u.bus, u.p_gen, u.p_min, u.p_max);
        bounded(ViolationKind::q_gen, u.bus, u.q_gen, u.q_min, u.q_max);
    }
    for (const BranchFlow& f : branch_flows(sol, net)) {
        const Branch& br = *std::find_if(net.branches.begin(), net.branches.end(),
                                         [&](const Branch& b) { return b.id == f.branch_id; });
        bounded(ViolationKind::branch_flow, f.branch_id, std::abs(f.p_flow), -kInf, br.p_flow_max);
    }
    for (const Bus& b : net.buses) bounded(ViolationKind::bus_voltage, b.id, sol.v(b.id), b.v_min, b.v_max);
    return out;
}

inline double total_excess(const std::vector<ConstraintViolation>& violations) {
    double sum = 0.0;
    for (const auto& v : violations) sum += v.excess;
    return sum;
}

// ---------------------------------------------------------------------------
// Paired report

struct IndexReport {
    double ll_with = 0.0, ll_without = 0.0;
    double vp_with = 0.0, vp_without = 0.0;
    double ltap_with = 0.0, ltap_without = 0.0;
    double llri = 1.0, vpii = 1.0, ltapii = 1.0;
    double bi = 1.0;
    std::vector<ConstraintViolation> constraint_violations;
};

/// Builds the index report for a DG plan. `base_*` is the no-DG case,
/// `dg_*` the same feeder with the plan applied. With `floor_ratios`, a
/// current-free with-DG case gets LLRI and LTAPII floored at 1e-12 instead
/// of an error, so BI stays finite.
inline IndexReport compute_index_report(const Network& base_net, const PowerFlowSolution& base_sol,
                                        const Network& dg_net, const PowerFlowSolution& dg_sol, const DGPlan& plan,
                                        const IndexWeights& w, LtapEnd end = LtapEnd::receiving,
                                        bool floor_ratios = false) {
    IndexReport r;
    r.ll_with = line_loss(dg_sol, dg_net);
    r.ll_without = line_loss(base_sol, base_net);
    // The factor 3 cancels; the ratio is taken on the unscaled sums.
    r.llri = llri(idx_detail::resistive_sum(dg_sol, dg_net), idx_detail::resistive_sum(base_sol, base_net));
    if (floor_ratios) r.llri = std::max(r.llri, kRatioGuard);
    r.vp_with = voltage_profile(dg_sol, dg_net);
    r.vp_without = voltage_profile(base_sol, base_net);
    r.vpii = vpii(r.vp_with, r.vp_without);
    r.ltap_with = ltap(dg_sol, dg_net, end);
    r.ltap_without = ltap(base_sol, base_net, end);
    r.ltapii = ltapii(r.ltap_with, r.ltap_without);
    if (floor_ratios) r.ltapii = std::max(r.ltapii, kRatioGuard);
    r.bi = benefit_index(r.llri, r.vpii, r.ltapii, w);
    r.constraint_violations = check_constraints(dg_sol, dg_net, plan);
    return r;
}

/// `key = value` lines, one per field.
inline std::string to_key_value(const IndexReport& r) {
    using io_detail::format_exact;
    std::string out;
    auto kv = [&out](const char* k, double v) { out += std::string(k) + " = " + format_exact(v) + "\n"; };
    kv("ll_with", r.ll_with);
    kv("ll_without", r.ll_without);
    kv("vp_with", r.vp_with);
    kv("vp_without", r.vp_without);
    kv("ltap_with", r.ltap_with);
    kv("ltap_without", r.ltap_without);
    kv("llri", r.llri);
    kv("vpii", r.vpii);
    kv("ltapii", r.ltapii);
    kv("bi", r.bi);
    out += "violations = " + std::to_string(r.constraint_violations.size()) + "\n";
    for (const auto& v : r.constraint_violations) out += "violation = " + v.describe() + "\n";
    return out;
}

inline std::string to_csv(const IndexReport& r) {
    using io_detail::format_exact;
    std::string out = "ll_with,ll_without,vp_with,vp_without,ltap_with,ltap_without,llri,vpii,ltapii,bi,violations\n";
    for (double v : {r.ll_with, r.ll_without, r.vp_with, r.vp_without, r.ltap_with, r.ltap_without, r.llri, r.vpii,
                     r.ltapii, r.bi})
        out += format_exact(v) + ",";
    out += std::to_string(r.constraint_violations.size()) + "\n";
    return out;
}

}  // namespace dgplace
