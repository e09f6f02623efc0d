#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "rabi/ode.hpp"
#include "rabi/oracle.hpp"
#include "rabi/spectrum.hpp"

using namespace rabi;

namespace {

const ModelParams base{1.0, 0.7, 0.0};

std::vector<double> oracle_x(const ModelParams &p, int sign, double x_min, double x_max, int n_fock = 200)
{
    const auto res = solve_oracle(p, {n_fock});
    std::vector<double> out;
    for (std::size_t i = 0; i < res.eigenvalues.size(); ++i) {
        const double x = x_from_energy(p, res.eigenvalues[i]);
        if (x >= x_min && x < x_max && (sign == 0 || res.parity[i] * sign > 0.0))
            out.push_back(x);
    }
    return out;
}

std::vector<double> xs_of(const std::vector<SpectrumLevel> &levels)
{
    std::vector<double> out;
    for (const auto &l : levels)
        out.push_back(l.x);
    return out;
}

void expect_same_levels(const std::vector<double> &a, const std::vector<double> &b, double tol)
{
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        EXPECT_NEAR(a[i], b[i], tol) << "level " << i;
}

} // namespace

TEST(Scan, SmallCouplingLevelsMatchOracle)
{
    // At g -> 0 the positive-parity levels are |n even, up> at n + delta and
    // |n odd, down> at n - delta.
    const ModelParams p{1e-4, 0.7, 0.0};
    const auto levels = xs_of(scan_regular(p, Parity::positive, 0.0, 4.0));
    expect_same_levels(levels, oracle_x(p, +1, 0.0, 4.0, 40), 1e-8);
    expect_same_levels(levels, {0.3, 0.7, 2.3, 2.7}, 1e-4);
}

TEST(Scan, BothParitiesMatchOracle)
{
    for (auto par : {Parity::positive, Parity::negative}) {
        const auto levels = xs_of(scan_regular(base, par, -1.0, 12.0));
        expect_same_levels(levels, oracle_x(base, sign_of(par), -1.0, 12.0), 1e-8);
    }
}

TEST(Scan, NoRegularLevelsWithoutQubitSplitting)
{
    const ModelParams p{1.0, 0.0, 0.0};
    for (auto par : {Parity::positive, Parity::negative})
        EXPECT_TRUE(scan_regular(p, par, 0.0, 12.0).empty());
}

TEST(Scan, LevelsCarryMetadata)
{
    const auto levels = scan_regular(base, Parity::negative, 0.0, 3.0);
    ASSERT_FALSE(levels.empty());
    for (const auto &l : levels) {
        EXPECT_EQ(l.parity, LevelParity::negative);
        EXPECT_EQ(l.kind, LevelKind::regular);
        EXPECT_EQ(l.method, LevelMethod::g_zero);
        EXPECT_DOUBLE_EQ(l.energy, l.x - base.g * base.g);
        EXPECT_LE(l.bracket_lo, l.x);
        EXPECT_GE(l.bracket_hi, l.x);
        EXPECT_LT(l.residual, 1e-8);
    }
}

TEST(Scan, GridRefinementFindsNoExtraZeros)
{
    ScanOptions coarse;
    ScanOptions fine;
    fine.grid_per_interval = 2 * coarse.grid_per_interval;
    for (auto par : {Parity::positive, Parity::negative}) {
        const auto a = xs_of(scan_regular(base, par, -1.0, 12.0, coarse));
        const auto b = xs_of(scan_regular(base, par, -1.0, 12.0, fine));
        expect_same_levels(a, b, 1e-11);
    }
}

TEST(Scan, HalvingToleranceMovesRootsWithinPreviousTolerance)
{
    ScanOptions a;
    a.tol_x = 1e-8;
    ScanOptions b;
    b.tol_x = 0.5e-8;
    const auto la = xs_of(scan_regular(base, Parity::positive, 0.0, 8.0, a));
    const auto lb = xs_of(scan_regular(base, Parity::positive, 0.0, 8.0, b));
    expect_same_levels(la, lb, a.tol_x);
}

TEST(Scan, WorkerCountDoesNotChangeOutput)
{
    ScanOptions one;
    ScanOptions many;
    many.workers = 4;
    const auto a = scan_regular(base, Parity::positive, 0.0, 12.0, one);
    const auto b = scan_regular(base, Parity::positive, 0.0, 12.0, many);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        EXPECT_EQ(a[i].x, b[i].x);
}

TEST(Scan, ImaginaryAxisPointsReproduceThePlainZeros)
{
    std::mt19937 rng(99991);
    std::uniform_real_distribution<double> t(0.1, 1.7);
    const auto plain = xs_of(scan_regular(base, Parity::positive, 0.0, 8.0));
    for (int i = 0; i < 4; ++i) {
        ScanOptions so;
        so.z0 = cplx(0.0, t(rng) * base.g);
        const auto general = scan_regular_report(base, Parity::positive, 0.0, 8.0, so);
        expect_same_levels(xs_of(general.levels), plain, 1e-9);
        for (const auto &l : general.levels)
            EXPECT_EQ(l.method, LevelMethod::g_general_zero);
    }
}

TEST(Scan, PreconditionsAreChecked)
{
    ScanOptions bad;
    bad.grid_per_interval = 4;
    EXPECT_THROW((void)scan_regular(base, Parity::positive, 0.0, 4.0, bad), invalid_params);
    EXPECT_THROW((void)scan_regular(base, Parity::positive, 4.0, 4.0), invalid_params);
    EXPECT_THROW((void)scan_eps({0.7, 0.4, 0.3}, 5.0, 1.0), invalid_params);
}

TEST(Scan, EpsModelMatchesOracle)
{
    const ModelParams p{0.7, 0.4, 0.3};
    const auto levels = scan_eps(p, -1.0, 12.0);
    for (const auto &l : levels)
        EXPECT_EQ(l.parity, LevelParity::none);
    expect_same_levels(xs_of(levels), oracle_x(p, 0, -1.0, 12.0), 1e-8);
}

TEST(JointZero, PositiveLevelNear71)
{
    const auto lvl = find_joint_zero(base, Parity::positive, cplx(0.0, 5.0), 70.5, 71.5);
    EXPECT_NEAR(lvl.x, 71.00462935, 1e-6);
    EXPECT_NEAR(lvl.energy, 70.00462935, 1e-6);
    EXPECT_EQ(lvl.method, LevelMethod::g_general_zero);
    EXPECT_EQ(lvl.parity, LevelParity::positive);
}

TEST(JointZero, NegativeParityNeighbourIsNotClaimedByPositiveSector)
{
    // x = 70.99557 is a negative-parity level; G_+(x; 5i) also has a joint zero there
    // because the divergent parts of both parities coincide outside D0.
    EXPECT_THROW((void)find_joint_zero(base, Parity::positive, cplx(0.0, 5.0), 70.99, 70.999), no_joint_zero);
    const auto lvl = find_joint_zero(base, Parity::negative, cplx(0.0, 5.0), 70.99, 70.999);
    EXPECT_NEAR(lvl.x, 70.9955721829, 1e-6);
}

TEST(JointZero, InsideD0AgreesWithPlainScan)
{
    const auto plain = scan_regular(base, Parity::positive, 0.0, 3.0);
    ASSERT_FALSE(plain.empty());
    for (const auto &l : plain) {
        const auto j = find_joint_zero(base, Parity::positive, cplx(0.0, 0.5), l.bracket_lo, l.bracket_hi);
        EXPECT_NEAR(j.x, l.x, 1e-9);
    }
}

TEST(JointZero, RealPointYieldsZeroAbsentFromOracle)
{
    // Re-only zero of G_+(x; -0.5) that is not an eigenvalue
    const cplx z0(-0.5, 0.0);
    const auto oracle = oracle_x(base, 0, -1.0, 4.0);
    bool rejected_or_spurious = false;
    try {
        const auto lvl = find_joint_zero(base, Parity::positive, z0, 1.85, 1.95);
        double nearest = 1.0;
        for (double x : oracle)
            nearest = std::min(nearest, std::abs(x - lvl.x));
        rejected_or_spurious = nearest > 1e-3;
        EXPECT_GT(check_conditions(base, lvl.x, z0).res_b, 1e-3);
    } catch (const no_joint_zero &) {
        rejected_or_spurious = true;
    }
    EXPECT_TRUE(rejected_or_spurious);
}

TEST(JointZero, BracketWithoutSignChangeIsAPreconditionError)
{
    EXPECT_THROW((void)find_joint_zero(base, Parity::positive, cplx(0.0, 0.5), 0.2, 0.3), invalid_params);
    EXPECT_THROW((void)find_joint_zero(base, Parity::positive, cplx(0.0, 0.5), 0.3, 0.2), invalid_params);
}

TEST(LargeX, DelegatedScanRecoversOracleLevels)
{
    const auto oracle = solve_oracle(base, {500});
    std::vector<double> ref;
    for (double e : oracle.eigenvalues) {
        const double x = x_from_energy(base, e);
        if (x > 66.0 && x < 72.0)
            ref.push_back(x);
    }
    std::vector<double> found;
    for (auto par : {Parity::positive, Parity::negative})
        for (const auto &l : scan_regular(base, par, 66.0, 72.0))
            found.push_back(l.x);
    std::sort(found.begin(), found.end());
    expect_same_levels(found, ref, 1e-8);
}

TEST(Exceptional, JuddianPointAtSmallCoupling)
{
    const auto pts = find_exceptional({0.3, 0.5, 0.0}, 1, ScanParameter::delta, 0.0, 1.0);
    ASSERT_EQ(pts.size(), 1u);
    const auto &pt = pts.front();
    EXPECT_TRUE(pt.confirmed);
    EXPECT_GT(pt.param_value, 0.0);
    EXPECT_LT(pt.param_value, 1.0);
    EXPECT_LT(std::abs(pt.gap), 1e-8);
    EXPECT_LT(std::abs(pt.residue_plus), 1e-6);
    EXPECT_LT(std::abs(pt.residue_minus), 1e-6);
    const ModelParams at{0.3, pt.param_value, 0.0};
    EXPECT_LT(std::abs(degeneracy_gap(at, 1, 60).gap), 1e-8);
}

TEST(Exceptional, GenericParametersHaveNone)
{
    EXPECT_THROW((void)find_exceptional(base, 1, ScanParameter::delta, 0.7, 0.7), not_found);
    EXPECT_THROW((void)find_exceptional(base, 0, ScanParameter::delta, 0.0, 1.0), invalid_params);
}

TEST(Exceptional, EveryIntegerIsDegenerateWithoutQubitSplitting)
{
    const ModelParams p{0.8, 0.0, 0.0};
    const auto oracle = solve_oracle(p, {120});
    const auto levels = exceptional_levels(p, 8.0, oracle);
    ASSERT_EQ(levels.size(), 16u);
    for (std::size_t i = 0; i < levels.size(); ++i) {
        EXPECT_EQ(levels[i].x, double(i / 2));
        EXPECT_EQ(levels[i].kind, LevelKind::exceptional_candidate);
        EXPECT_EQ(levels[i].method, LevelMethod::oracle);
    }
    EXPECT_EQ(levels[0].parity, LevelParity::positive);
    EXPECT_EQ(levels[1].parity, LevelParity::negative);
}

TEST(Exceptional, UnionWithRegularLevelsIsTheFullSpectrum)
{
    const ModelParams p{0.3, 0.0, 0.0};
    const auto ex = find_exceptional({0.3, 0.5, 0.0}, 1, ScanParameter::delta, 0.0, 1.0).front();
    const ModelParams q{0.3, ex.param_value, 0.0};
    const auto oracle = solve_oracle(q, {80});
    std::vector<double> all;
    for (auto par : {Parity::positive, Parity::negative})
        for (const auto &l : scan_regular(q, par, -1.5, 6.0))
            all.push_back(l.x);
    for (const auto &l : exceptional_levels(q, 6.0, oracle))
        all.push_back(l.x);
    std::sort(all.begin(), all.end());
    std::vector<double> ref;
    for (double e : oracle.eigenvalues)
        if (x_from_energy(q, e) < 6.0)
            ref.push_back(x_from_energy(q, e));
    expect_same_levels(all, ref, 1e-8);
    (void)p;
}
