#include <gtest/gtest.h>

#include "freematrix/ensemble.hpp"
#include "freematrix/linalg.hpp"
#include "freematrix/montecarlo.hpp"
#include "freematrix/params.hpp"
#include "test_support.hpp"

using namespace freematrix;
using freematrix::testing::random_general_ensemble;
using freematrix::testing::random_selfadjoint_ensemble;

TEST(Validate, AcceptsSymmetricRealMatrix) {
    CoefficientEnsemble e;
    e.a0 = Matrix::Zero(2, 2);
    Matrix a(2, 2);
    a << 0, 1, 1, 0;
    e.coeffs.push_back(a);
    e.selfadjoint = true;
    EXPECT_NO_THROW(validate(e));
}

TEST(Validate, RejectsStrictlyUpperTriangular) {
    CoefficientEnsemble e;
    e.a0 = Matrix::Zero(2, 2);
    Matrix a(2, 2);
    a << 0, 1, 0, 0;
    e.coeffs.push_back(a);
    e.selfadjoint = true;
    EXPECT_THROW(validate(e), NotSelfAdjoint);
    try {
        validate(e);
    } catch (const NotSelfAdjoint& ex) {
        EXPECT_NE(std::string(ex.what()).find("coefficient 1"), std::string::npos);
    }
}

TEST(Validate, RejectsMixedDimensions) {
    CoefficientEnsemble e;
    e.a0 = Matrix::Zero(2, 2);
    e.coeffs.push_back(Matrix::Zero(2, 2));
    e.coeffs.push_back(Matrix::Zero(3, 3));
    EXPECT_THROW(validate(e), DimensionMismatch);
}

TEST(Covariance, Scalar) {
    CoefficientEnsemble e = make_centered({Matrix::Ones(1, 1)}, true);
    CovarianceMatrix cov = covariance(e);
    ASSERT_EQ(cov.dim(), 1);
    EXPECT_NEAR(cov.entries(0, 0).real(), 1.0, 1e-15);
}

TEST(Covariance, DiagonalModelDisjointSupports) {
    Matrix a1 = Matrix::Zero(2, 2), a2 = Matrix::Zero(2, 2);
    a1(0, 0) = 1;
    a2(1, 1) = 1;
    CoefficientEnsemble e = make_centered({a1, a2}, true);
    CovarianceMatrix cov = covariance(e);
    ASSERT_EQ(cov.dim(), 4);
    // column-major vec: entry (0,0) -> 0, entry (1,1) -> 3
    for (Index i = 0; i < 4; ++i)
        for (Index j = 0; j < 4; ++j) {
            double expected = ((i == 0 && j == 0) || (i == 3 && j == 3)) ? 1.0 : 0.0;
            EXPECT_NEAR(std::abs(cov.entries(i, j)), expected, 1e-15);
        }
}

TEST(Covariance, MatchesBruteForceDoubleLoop) {
    CounterRng rng(42);
    CoefficientEnsemble e = random_general_ensemble(3, 4, rng);
    CovarianceMatrix cov = covariance(e);
    const Index d = 3;
    // oracle: Cov_{(ij),(kl)} = sum_s (A_s)_{ij} conj((A_s)_{kl}), column-major
    for (Index j = 0; j < d; ++j)
        for (Index i = 0; i < d; ++i)
            for (Index l = 0; l < d; ++l)
                for (Index k = 0; k < d; ++k) {
                    Complex expect(0, 0);
                    for (const Matrix& a : e.coeffs) expect += a(i, j) * std::conj(a(k, l));
                    EXPECT_NEAR(std::abs(cov.entries(j * d + i, l * d + k) - expect), 0.0, 1e-12);
                }
}

TEST(Covariance, HermitianPsdProperty) {
    CounterRng rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        CoefficientEnsemble e = random_general_ensemble(3, 1 + rep % 4, rng);
        CovarianceMatrix cov = covariance(e);
        EXPECT_LE(selfadjoint_defect(cov.entries), 1e-12);
        EXPECT_GE(lambda_min(cov.entries), -1e-10);
    }
}

TEST(Dilate, ScalarBecomesOffDiagonalPair) {
    CoefficientEnsemble e = make_centered({Matrix::Ones(1, 1)}, false);
    CoefficientEnsemble de = dilate(e);
    ASSERT_EQ(de.dim(), 2);
    EXPECT_TRUE(de.selfadjoint);
    Matrix expect(2, 2);
    expect << 0, 1, 1, 0;
    EXPECT_NEAR((de.coeffs[0] - expect).cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(Dilate, EigenvaluesArePlusMinusSingularValues) {
    CounterRng rng(11);
    for (int rep = 0; rep < 10; ++rep) {
        CoefficientEnsemble e = random_general_ensemble(4, 3, rng, /*with_mean=*/rep % 2 == 0);
        CoefficientEnsemble de = dilate(e);
        // the dilated model shares the Gaussian weights with the base model
        Matrix x = sample(e, 99, rep);
        Matrix xd = sample(de, 99, rep);
        Eigen::JacobiSVD<Matrix> svd(x);
        RealVector sv = svd.singularValues();
        RealVector ev = eigenvalues_sa(xd);
        for (Index k = 0; k < 4; ++k) {
            EXPECT_NEAR(ev(7 - k), sv(k), 1e-10);
            EXPECT_NEAR(ev(k), -sv(k), 1e-10);
        }
    }
}

TEST(Dilate, ParameterBehavior) {
    CounterRng rng(13);
    for (int rep = 0; rep < 10; ++rep) {
        CoefficientEnsemble e = random_general_ensemble(3, 3, rng);
        CoefficientEnsemble de = dilate(e);
        EXPECT_NEAR(sigma(de), sigma(e), 1e-9 * sigma(e));
        double ve = v(e), vde = v(de);
        EXPECT_GE(vde, ve - 1e-9);
        EXPECT_LE(vde, std::sqrt(2.0) * ve + 1e-9);
    }
}

TEST(Dilate, TwiceGivesSymmetricSpectrum) {
    CounterRng rng(17);
    CoefficientEnsemble e = random_general_ensemble(3, 2, rng, true);
    CoefficientEnsemble dde = dilate(dilate(e));
    EXPECT_EQ(dde.dim(), 12);
    RealVector ev = sample_eigenvalues(dde, 5, 0);
    for (Index k = 0; k < ev.size(); ++k) EXPECT_NEAR(ev(k), -ev(ev.size() - 1 - k), 1e-10);
}

TEST(Orthogonalize, DuplicatedCoefficientCollapses) {
    Matrix a(2, 2);
    a << 1, 2, 2, -1;
    CoefficientEnsemble e = make_centered({a, a}, true);
    CoefficientEnsemble oe = orthogonalize(e);
    ASSERT_EQ(oe.count(), 1);
    // sqrt(2) * A up to a global sign
    Matrix c = oe.coeffs[0];
    double sign = c(0, 0).real() > 0 ? 1.0 : -1.0;
    EXPECT_NEAR((sign * c - std::sqrt(2.0) * a).cwiseAbs().maxCoeff(), 0.0, 1e-10);
}

TEST(Orthogonalize, PreservesCovariance) {
    CounterRng rng(23);
    for (int rep = 0; rep < 10; ++rep) {
        bool sa = rep % 2 == 0;
        CoefficientEnsemble e = sa ? random_selfadjoint_ensemble(3, 4, rng)
                                   : random_general_ensemble(3, 4, rng);
        CoefficientEnsemble oe = orthogonalize(e);
        EXPECT_LE(oe.count(), 9);
        Matrix diff = covariance(e).entries - covariance(oe).entries;
        EXPECT_LE(diff.cwiseAbs().maxCoeff(), 1e-9);
        for (Index i = 0; i < oe.count(); ++i)
            for (Index j = 0; j < i; ++j) {
                Complex ip = (oe.coeffs[i].adjoint() * oe.coeffs[j]).trace();
                EXPECT_LE(std::abs(ip), 1e-9);
            }
        if (sa) {
            EXPECT_NO_THROW(validate(oe));
        }
    }
}

TEST(Orthogonalize, AlreadyOrthogonalKeepsCount) {
    Matrix a1 = Matrix::Zero(2, 2), a2 = Matrix::Zero(2, 2);
    a1(0, 0) = 1;
    a2(1, 1) = 1;
    CoefficientEnsemble e = make_centered({a1, a2}, true);
    CoefficientEnsemble oe = orthogonalize(e);
    EXPECT_EQ(oe.count(), 2);
    Matrix diff = covariance(e).entries - covariance(oe).entries;
    EXPECT_LE(diff.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Orthogonalize, CountBoundedByDimSquared) {
    CounterRng rng(29);
    CoefficientEnsemble e = random_selfadjoint_ensemble(2, 9, rng);
    CoefficientEnsemble oe = orthogonalize(e);
    EXPECT_LE(oe.count(), 4);
}

TEST(TensorIdentity, SpectrumPreserved) {
    CounterRng rng(31);
    CoefficientEnsemble e = random_selfadjoint_ensemble(3, 2, rng, true);
    CoefficientEnsemble te = tensor_identity(e, 2);
    EXPECT_EQ(te.dim(), 6);
    EXPECT_NEAR(sigma(te), sigma(e), 1e-12);
}
