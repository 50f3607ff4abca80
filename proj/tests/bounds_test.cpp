#include <gtest/gtest.h>

#include <cmath>

#include "freematrix/bounds.hpp"
#include "freematrix/ensembles.hpp"
#include "freematrix/moments.hpp"
#include "test_support.hpp"

using namespace freematrix;
using freematrix::testing::random_selfadjoint_ensemble;

TEST(NormBound, WignerProfileTerms) {
    CoefficientEnsemble e = independent_entries(flat_profile(100));
    BoundReport rep = norm_bound(e, 1.0);
    EXPECT_NEAR(rep.term("xfree_norm"), 2.0, 1e-3);
    double vt = std::sqrt(std::sqrt(2.0 / 100.0));
    EXPECT_NEAR(rep.term("fluctuation"), vt * std::pow(std::log(100.0), 0.75), 1e-9);
    EXPECT_NEAR(rep.term("tail_rate"), std::sqrt(2.0 / 100.0), 1e-9);
    EXPECT_GT(bound_total(rep, 1.0), bound_total(rep, 0.0));
}

TEST(NormBound, DeterministicModelReduces) {
    CoefficientEnsemble e;
    e.a0 = 3.0 * Matrix::Identity(4, 4);
    e.selfadjoint = true;
    BoundReport rep = norm_bound(e);
    EXPECT_NEAR(rep.term("xfree_norm"), 3.0, 1e-12);
    EXPECT_EQ(rep.term("fluctuation"), 0.0);
}

TEST(NormBound, DiagonalModelFluctuationDominates) {
    RealMatrix b2 = RealMatrix::Zero(100, 100);
    b2.diagonal().setOnes();
    CoefficientEnsemble e = independent_entries({100, b2});
    BoundReport rep = norm_bound(e, 1.0);
    // commuting model: v = sigma = 1, the log factor is genuine
    EXPECT_NEAR(rep.term("fluctuation"), std::pow(std::log(100.0), 0.75), 1e-9);
    EXPECT_GE(rep.term("fluctuation"), 0.5 * rep.term("xfree_norm"));
}

TEST(NormBound, ScalesLineary) {
    CounterRng rng(1);
    CoefficientEnsemble e = random_selfadjoint_ensemble(3, 2, rng);
    BoundReport r1 = norm_bound(e);
    CoefficientEnsemble ce = e;
    for (Matrix& a : ce.coeffs) a *= 2.0;
    BoundReport r2 = norm_bound(ce);
    EXPECT_NEAR(bound_total(r2, 1.5), 2.0 * bound_total(r1, 1.5), 2e-3 * bound_total(r2, 1.5));
}

TEST(NckBvh, WignerIntervals) {
    CoefficientEnsemble e = independent_entries(flat_profile(50));
    BoundReport nck = nck_bound(e);
    EXPECT_NEAR(nck.term("lower"), 1.0, 1e-12);
    EXPECT_NEAR(nck.term("upper"), std::sqrt(std::log(100.0)), 1e-12);
    BoundReport bvh = bvh_bound(e);
    EXPECT_NEAR(bvh.term("sigma"), 1.0, 1e-12);
    EXPECT_NEAR(bvh.term("entry_term"), std::sqrt(std::log(50.0) / 50.0), 1e-12);
}

TEST(NckBvh, DiagonalModelTerms) {
    RealMatrix b2 = RealMatrix::Zero(64, 64);
    b2.diagonal().setOnes();
    CoefficientEnsemble e = independent_entries({64, b2});
    BoundReport bvh = bvh_bound(e);
    EXPECT_NEAR(bvh.term("sigma"), 1.0, 1e-12);
    EXPECT_NEAR(bvh.term("entry_term"), std::sqrt(std::log(64.0)), 1e-12);
}

TEST(NckBvh, GeneralModelRejected) {
    CounterRng rng(2);
    CoefficientEnsemble e = random_selfadjoint_ensemble(3, 2, rng);
    EXPECT_THROW(bvh_bound(e), NotIndependentEntryModel);
}

TEST(InclusionRadius, DropsTailAtZero) {
    CoefficientEnsemble e = independent_entries(flat_profile(100));
    double r0 = spectrum_inclusion_radius(e, 0.0, 1.0);
    double vt = std::sqrt(std::sqrt(2.0 / 100.0));
    EXPECT_NEAR(r0, vt * std::pow(std::log(100.0), 0.75), 1e-9);
    double r2 = spectrum_inclusion_radius(e, 2.0, 1.0);
    EXPECT_NEAR(r2, r0 + 2.0 * std::sqrt(2.0 / 100.0), 1e-9);
}

TEST(InclusionRadius, Homogeneous) {
    CounterRng rng(3);
    CoefficientEnsemble e = random_selfadjoint_ensemble(3, 2, rng);
    CoefficientEnsemble ce = e;
    for (Matrix& a : ce.coeffs) a *= 3.0;
    EXPECT_NEAR(spectrum_inclusion_radius(ce, 1.2), 3.0 * spectrum_inclusion_radius(e, 1.2),
                1e-6 * spectrum_inclusion_radius(ce, 1.2));
}

TEST(Stieltjes, UnitImaginaryPart) {
    CounterRng rng(4);
    CoefficientEnsemble e = random_selfadjoint_ensemble(3, 2, rng);
    Matrix z = Complex(0, 1) * Matrix::Identity(3, 3);
    EXPECT_NEAR(stieltjes_deviation(e, z), std::pow(v_tilde(e), 4.0),
                1e-12 * std::pow(v_tilde(e), 4.0));
}

TEST(Stieltjes, WignerAtTwoI) {
    CoefficientEnsemble e = independent_entries(flat_profile(16));
    Matrix z = Complex(0, 2) * Matrix::Identity(16, 16);
    // vtilde^4 = v^2 sigma^2 = 2/16; (Im z)^{-5} = 2^{-5}
    EXPECT_NEAR(stieltjes_deviation(e, z), (2.0 / 16.0) / 32.0, 1e-14);
}

TEST(Stieltjes, RejectsIndefiniteImaginaryPart) {
    CoefficientEnsemble e = independent_entries(flat_profile(4));
    Matrix z = Matrix::Identity(4, 4);  // real
    EXPECT_THROW(stieltjes_deviation(e, z), ImPartNotPd);
}

TEST(SmoothStat, BudgetFormula) {
    CoefficientEnsemble e = independent_entries(flat_profile(9));
    double vt4 = std::pow(v_tilde(e), 4.0);
    EXPECT_NEAR(smooth_stat_budget(e, 2.5, 1.5), 1.5 * vt4 * 2.5, 1e-12);
}

TEST(SampleCov, IidGamma) {
    RealMatrix b2 = RealMatrix::Constant(6, 4, 1.0);
    CoefficientEnsemble e = independent_rectangular(b2);
    BoundReport rep = sample_cov_bound(e);
    // Gamma = 2 sqrt(d m) + d for iid standard entries
    EXPECT_NEAR(rep.term("gamma_upper"), 2.0 * std::sqrt(24.0) + 6.0, 1e-9);
    EXPECT_NEAR(rep.term("gamma_lower"), rep.term("gamma_upper") / 5.0, 1e-12);
}

TEST(SampleCov, SingleColumnCovariance) {
    CounterRng rng(5);
    Matrix l = freematrix::testing::random_matrix(4, rng);
    Matrix sig = l * l.adjoint();
    CoefficientEnsemble e = independent_columns({sig});
    BoundReport rep = sample_cov_bound(e);
    double tr = sig.trace().real();
    double expect = 2.0 * std::sqrt(tr * lambda_max(sig)) + tr;
    EXPECT_NEAR(rep.term("gamma_upper"), expect, 1e-8 * expect);
}

TEST(SampleCov, RequiresZeroMean) {
    RealMatrix b2 = RealMatrix::Constant(4, 2, 1.0);
    CoefficientEnsemble e = independent_rectangular(b2);
    e.a0(0, 0) = 1.0;
    EXPECT_THROW(sample_cov_bound(e), A0NotZero);
}

TEST(Smin, IidLeadingTerm) {
    RealMatrix b2 = RealMatrix::Constant(8, 3, 1.0);
    CoefficientEnsemble e = independent_rectangular(b2);
    BoundReport rep = smin_bound(e);
    EXPECT_NEAR(rep.term("smin_free_lower"), std::sqrt(8.0) - std::sqrt(3.0), 1e-10);
    EXPECT_TRUE(rep.notes.empty());
}

TEST(Smin, SquareCaseVacuousFlag) {
    RealMatrix b2 = RealMatrix::Constant(4, 4, 1.0);
    CoefficientEnsemble e = independent_rectangular(b2);
    BoundReport rep = smin_bound(e);
    EXPECT_NEAR(rep.term("smin_free_lower"), 0.0, 1e-9);
    EXPECT_NE(rep.notes.find("vacuous"), std::string::npos);
}

TEST(Smin, InjectivePatternBlocks) {
    // partition of [d] x [m] with at most one entry per row and column in
    // each block: E X^*X = d 1, E XX^* = m 1 at unit scale
    const Index d = 6, m = 3;
    PatternPartition part;
    part.d = d;
    part.m = m;
    part.scale = 1.0;
    for (Index g = 0; g < d / m; ++g)
        for (Index t = 0; t < m; ++t) {
            std::vector<std::pair<Index, Index>> block;
            for (Index j = 0; j < m; ++j) block.emplace_back(g * m + j, (j + t) % m);
            part.blocks.push_back(std::move(block));
        }
    CoefficientEnsemble e = pattern(part);
    BoundReport rep = smin_bound(e);
    EXPECT_NEAR(rep.term("smin_free_lower"), std::sqrt(6.0) - std::sqrt(3.0), 1e-10);
}

TEST(MomentDeviation, HoldsOnRandomEnsembles) {
    CounterRng rng(6);
    for (int rep = 0; rep < 10; ++rep) {
        CoefficientEnsemble e = random_selfadjoint_ensemble(3, 2, rng, rep % 2 == 0);
        for (int p : {1, 2, 3}) EXPECT_NO_THROW(moment_gap(e, p));
    }
}

TEST(NormBound, LehnerTighterThanPisier) {
    CounterRng rng(7);
    for (int rep = 0; rep < 10; ++rep) {
        CoefficientEnsemble e = random_selfadjoint_ensemble(3, 3, rng);
        BoundReport rep_norm = norm_bound(e);
        double pisier_total = pisier_bounds(e).second + rep_norm.term("fluctuation");
        EXPECT_LE(bound_total(rep_norm, 0.0), pisier_total + 1e-8);
    }
}
