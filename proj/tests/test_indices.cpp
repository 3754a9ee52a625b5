#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

using namespace dgplace;
using namespace dgplace::testing;

namespace {

struct Pair {
    Network base, dg;
    PowerFlowSolution base_sol, dg_sol;
    DGPlan plan;
};

Pair solve_pair(const Network& net, const DGPlan& plan) {
    Pair p{net, apply_dg(net, plan), {}, {}, plan};
    p.base_sol = solve(p.base);
    p.dg_sol = solve(p.dg);
    return p;
}

IndexReport report(const Pair& p, const IndexWeights& w = {}) {
    return compute_index_report(p.base, p.base_sol, p.dg, p.dg_sol, p.plan, w);
}

}  // namespace

// Raw with/without values reported for three feeder studies; the ratios are
// checked against independently computed quotients.
TEST(Ratios, NineBusReferenceValues) {
    EXPECT_NEAR(llri(0.0048, 0.0198), 0.2424242, 1e-7);
    EXPECT_NEAR(vpii(0.4314, 0.4160), 1.0370192, 1e-7);
    EXPECT_NEAR(ltapii(0.5832, 2.1321), 0.2735331, 1e-7);
}

TEST(Ratios, ThirtyFourBusReferenceValues) {
    EXPECT_NEAR(llri(0.0016, 0.0071), 0.2253521, 1e-7);
    EXPECT_NEAR(vpii(0.1800, 0.1750), 1.0285714, 1e-7);
    EXPECT_NEAR(ltapii(0.5419, 1.6332), 0.3318026, 1e-7);
}

TEST(Ratios, ThirtyNodeReferenceValues) {
    EXPECT_NEAR(llri(0.0011, 0.0111), 0.0990991, 1e-7);
    EXPECT_NEAR(vpii(0.170, 0.161), 1.0559006, 1e-7);
    EXPECT_NEAR(ltapii(0.2369, 1.4892), 0.1590787, 1e-7);
}

TEST(Ratios, ZeroDenominatorIsAnInputError) {
    EXPECT_THROW(llri(0.1, 0.0), InputError);
    EXPECT_THROW(vpii(0.1, 1e-13), InputError);
    EXPECT_THROW(ltapii(0.1, -1.0), InputError);
}

TEST(BenefitIndex, ConsistentModeExample) {
    EXPECT_NEAR(benefit_index(0.2230, 1.0285, 0.3318, IndexWeights{}), 2.84222, 1e-5);
}

TEST(BenefitIndex, AsWrittenModeExample) {
    IndexWeights w;
    w.mode = FitnessMode::as_written;
    EXPECT_NEAR(benefit_index(0.2230, 1.0285, 0.3318, w), (1.0285 + 1.0 / 0.2230 + 0.3318) / 3.0, 1e-12);
}

TEST(BenefitIndex, NeutralPointIsOneInBothModes) {
    IndexWeights w{0.5, 0.3, 0.2, FitnessMode::consistent};
    EXPECT_DOUBLE_EQ(benefit_index(1.0, 1.0, 1.0, w), 1.0);
    w.mode = FitnessMode::as_written;
    EXPECT_DOUBLE_EQ(benefit_index(1.0, 1.0, 1.0, w), 1.0);
}

TEST(BenefitIndex, WeightsMustFormABudget) {
    EXPECT_THROW(benefit_index(1, 1, 1, IndexWeights{0.5, 0.5, 0.5}), ConfigError);
    EXPECT_THROW(benefit_index(1, 1, 1, IndexWeights{1.2, -0.1, -0.1}), ConfigError);
    EXPECT_NO_THROW(benefit_index(1, 1, 1, IndexWeights{1.0, 0.0, 0.0}));
}

TEST(BenefitIndex, ConsistentModeRewardsEveryBenefit) {
    const IndexWeights w;
    const double b = benefit_index(0.5, 1.02, 0.6, w);
    EXPECT_GT(benefit_index(0.4, 1.02, 0.6, w), b);  // lower losses
    EXPECT_GT(benefit_index(0.5, 1.03, 0.6, w), b);  // better voltage profile
    EXPECT_GT(benefit_index(0.5, 1.02, 0.5, w), b);  // lighter lines
}

TEST(Identity, ZeroPlanGivesUnitRatios) {
    for (const char* name : {"feeder9.txt", "feeder30.txt", "feeder34.txt"}) {
        const Pair p = solve_pair(load_network_file(data_path(name)), {});
        const IndexReport r = report(p);
        EXPECT_EQ(r.llri, 1.0) << name;
        EXPECT_EQ(r.vpii, 1.0) << name;
        EXPECT_EQ(r.ltapii, 1.0) << name;
        EXPECT_DOUBLE_EQ(r.bi, 1.0) << name;
    }
}

TEST(Identity, ZeroSizedUnitsGiveUnitRatios) {
    const Pair p = solve_pair(load_network_file(data_path("feeder30.txt")), {{{7, 0.0, 0.0}, {23, 0.0, 0.0}}});
    const IndexReport r = report(p);
    EXPECT_EQ(r.llri, 1.0);
    EXPECT_EQ(r.vpii, 1.0);
    EXPECT_EQ(r.ltapii, 1.0);
}

TEST(LineLoss, ThreeTimesResistiveLoss) {
    const Network net = load_network_file(data_path("feeder9.txt"));
    const PowerFlowSolution sol = solve(net);
    EXPECT_NEAR(line_loss(sol, net), 3.0 * sol.p_loss, 1e-15);
}

TEST(LineLoss, RatioIsIndependentOfTheThreePhaseFactor) {
    const Pair p = solve_pair(load_network_file(data_path("feeder9.txt")), {{{7, 6.0, 2.0}}});
    const IndexReport r = report(p);
    EXPECT_EQ(r.llri, p.dg_sol.p_loss / p.base_sol.p_loss);
}

TEST(Properties, LengthScalingLeavesRatiosInvariant) {
    // Scaling every r and x per km by 1/c and every length by c leaves the
    // impedances, and hence every index, unchanged.
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        Network net = random_radial(rng, 15);
        if (net.bus_count() < 3) continue;
        const DGPlan plan{{{static_cast<int>(net.bus_count()), 0.05, 0.01}}};
        const IndexReport a = report(solve_pair(net, plan));
        const double c = std::uniform_real_distribution<double>(0.5, 4.0)(rng);
        for (Branch& br : net.branches) {
            br.length_km *= c;
            br.r_per_km /= c;
            br.x_per_km /= c;
        }
        const IndexReport b = report(solve_pair(net, plan));
        EXPECT_NEAR(a.llri, b.llri, 1e-9);
        EXPECT_NEAR(a.vpii, b.vpii, 1e-9);
        EXPECT_NEAR(a.ltapii, b.ltapii, 1e-9);
    }
}

TEST(VoltageProfile, UsesLoadMagnitudesAndWeights) {
    const Network net = two_bus(0.3, 0.4);
    PowerFlowSolution sol;
    sol.converged = true;
    sol.v_mag = {1.0, 0.9};
    EXPECT_NEAR(voltage_profile(sol, net), 0.9 * 0.5, 1e-15);
}

TEST(VoltageProfile, RejectsBrokenWeightBudget) {
    Network net = two_bus();
    const PowerFlowSolution sol = solve(net);
    net.buses[1].weight_k = 0.7;
    EXPECT_THROW(voltage_profile(sol, net), InputError);
}

TEST(Ltap, ReceivingAndSendingEnds) {
    const Network net = two_bus();
    PowerFlowSolution sol;
    sol.converged = true;
    sol.v_mag = {1.0, 0.95};
    sol.i_branch = {0.6};
    EXPECT_NEAR(ltap(sol, net), 0.57, 1e-15);
    EXPECT_NEAR(ltap(sol, net, LtapEnd::sending), 0.6, 1e-15);
}

TEST(Properties, LargerLeafInjectionLowersLlriUntilTheLoadIsMet) {
    const Network net = load_network_file(data_path("feeder9.txt"));
    double prev = 1.0;
    for (double p : {1.0, 2.0, 3.0, 4.0}) {
        const double l = report(solve_pair(net, {{{7, p, 0.0}}})).llri;
        EXPECT_LT(l, prev) << p;
        prev = l;
    }
}

TEST(Properties, SmallInjectionsAtLoadBusesNeverRaiseLosses) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        const Network net = random_radial(rng);
        if (net.bus_count() < 2) continue;
        const int bus = std::uniform_int_distribution<int>(2, static_cast<int>(net.bus_count()))(rng);
        const double p = 0.5 * net.bus(bus).p_load;
        const IndexReport r = report(solve_pair(net, {{{bus, p, 0.0}}}));
        EXPECT_LE(r.llri, 1.0 + 1e-12);
        EXPECT_GE(r.vpii, 1.0 - 1e-12);
    }
}

TEST(Constraints, VoltageBelowMinimum) {
    Network net = two_bus();
    PowerFlowSolution sol;
    sol.converged = true;
    sol.v_mag = {1.0, 0.88};
    sol.v_ang = {0.0, 0.0};
    sol.i_branch = {0.0};
    sol.i_phasor = {{0.0, 0.0}};
    const auto v = check_constraints(sol, net, {});
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].kind, ViolationKind::bus_voltage);
    EXPECT_EQ(v[0].entity, 2);
    EXPECT_EQ(v[0].bound, 0.90);
    EXPECT_NEAR(v[0].excess, 0.02, 1e-12);
}

TEST(Constraints, GeneratorCapability) {
    const Network net = two_bus();
    const DGPlan plan{{{2, 1.5, 0.0, 0.0, 1.0, -0.5, 0.5}}};
    const Pair p = solve_pair(net, plan);
    const auto v = check_constraints(p.dg_sol, p.dg, plan);
    ASSERT_FALSE(v.empty());
    EXPECT_EQ(v[0].kind, ViolationKind::p_gen);
    EXPECT_EQ(v[0].entity, 2);
    EXPECT_NEAR(v[0].excess, 0.5, 1e-12);
    EXPECT_NE(v[0].describe().find("p_gen bus 2"), std::string::npos);
}

TEST(Constraints, BranchFlowLimit) {
    Network net = two_bus();
    net.branches[0].p_flow_max = 0.4;
    const PowerFlowSolution sol = solve(net);
    const auto v = check_constraints(sol, net, {});
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].kind, ViolationKind::branch_flow);
    EXPECT_EQ(v[0].entity, 1);
    EXPECT_NEAR(v[0].excess, 0.5 + sol.p_loss - 0.4, 1e-6);
}

TEST(Constraints, TotalExcessSums) {
    std::vector<ConstraintViolation> v{{ViolationKind::bus_voltage, 2, 0.9, 0.88, 0.02},
                                       {ViolationKind::p_gen, 3, 1.0, 1.5, 0.5}};
    EXPECT_NEAR(total_excess(v), 0.52, 1e-15);
    EXPECT_EQ(total_excess({}), 0.0);
}

TEST(Report, NineBusPlanBenefits) {
    const Pair p = solve_pair(load_network_file(data_path("feeder9.txt")), {{{7, 6.0, 2.0}}});
    const IndexReport r = report(p);
    EXPECT_LT(r.llri, 0.3);
    EXPECT_GT(r.vpii, 1.0);
    EXPECT_LT(r.ltapii, 1.0);
    EXPECT_GT(r.bi, 1.0);
}

TEST(Report, ThirtyFourBusBands) {
    const Pair p = solve_pair(load_network_file(data_path("feeder34.txt")), {{{27, 2.75, 1.65}}});
    const IndexReport r = report(p);
    EXPECT_GT(r.llri, 0.15);
    EXPECT_LT(r.llri, 0.30);
    EXPECT_GT(r.vpii, 1.02);
    EXPECT_LT(r.vpii, 1.06);
    EXPECT_GT(r.ltapii, 0.15);
    EXPECT_LT(r.ltapii, 0.7);
}

TEST(Report, CsvAndKeyValueLayouts) {
    const Pair p = solve_pair(load_network_file(data_path("feeder9.txt")), {{{7, 6.0, 2.0}}});
    const IndexReport r = report(p);
    const std::string csv = to_csv(r);
    EXPECT_EQ(csv.rfind("ll_with,ll_without,vp_with,vp_without,ltap_with,ltap_without,llri,vpii,ltapii,bi,violations\n", 0),
              0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
    const std::string kv = to_key_value(r);
    EXPECT_NE(kv.find("llri = "), std::string::npos);
    EXPECT_NE(kv.find("violations = "), std::string::npos);
}
