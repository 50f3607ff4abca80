#pragma once

#include <complex>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "freematrix/errors.hpp"

namespace freematrix {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kSelfAdjointTol = 1e-12;

/// Shape of a rectangular model before zero padding to a square matrix.
struct RectShape {
    Index rows = 0;
    Index cols = 0;
};

/// Optional constructor metadata attached by the model builders. Downstream
/// code uses it to pick specialized formulas (variance profiles, column
/// covariance summaries, block structure) that are not recoverable from the
/// raw coefficient list.
struct ModelMeta {
    std::string kind;
    std::optional<RealMatrix> profile;  // entrywise variances b_{ij}^2
    std::optional<RectShape> rect;      // original rows x cols before padding
    std::map<std::string, double> values;
};

inline constexpr const char* kKindIndependentEntries = "independent_entries";
inline constexpr const char* kKindIndependentRect = "independent_rect";

/// The Gaussian model X = A_0 + sum_i g_i A_i with deterministic complex
/// d x d coefficients and i.i.d. standard real Gaussians g_i.
struct CoefficientEnsemble {
    Matrix a0;
    std::vector<Matrix> coeffs;
    bool selfadjoint = false;
    std::optional<ModelMeta> meta;

    Index dim() const { return a0.rows(); }
    Index count() const { return static_cast<Index>(coeffs.size()); }
};

/// Covariance of the d^2 scalar entries of X, as a d^2 x d^2 PSD matrix.
struct CovarianceMatrix {
    Matrix entries;
    Index dim() const { return entries.rows(); }
};

inline double selfadjoint_defect(const Matrix& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

/// True when the ensemble is a self-adjoint independent-entry model whose
/// coefficients are exactly b_{ij} E_{ij} for the symmetric profile in meta.
inline bool has_symmetric_profile(const CoefficientEnsemble& e) {
    return e.meta && e.meta->profile && !e.meta->rect &&
           e.meta->kind == kKindIndependentEntries;
}

/// True for rectangular models with all-independent entries (zero-padded).
inline bool has_rect_profile(const CoefficientEnsemble& e) {
    return e.meta && e.meta->profile && e.meta->rect && e.meta->kind == kKindIndependentRect;
}

inline CoefficientEnsemble make_ensemble(Matrix a0, std::vector<Matrix> coeffs,
                                         bool selfadjoint) {
    CoefficientEnsemble e;
    e.a0 = std::move(a0);
    e.coeffs = std::move(coeffs);
    e.selfadjoint = selfadjoint;
    return e;
}

/// Zero-mean ensemble from coefficients only.
inline CoefficientEnsemble make_centered(std::vector<Matrix> coeffs,
                                         bool selfadjoint) {
    if (coeffs.empty()) throw DimensionMismatch("centered ensemble needs at least one coefficient");
    Index d = coeffs.front().rows();
    return make_ensemble(Matrix::Zero(d, d), std::move(coeffs), selfadjoint);
}

/// Checks square shapes, consistent dimension and (if flagged) self-adjointness
/// of every matrix. Inputs are rejected, never repaired.
inline void validate(const CoefficientEnsemble& e) {
    const Index d = e.a0.rows();
    if (d < 1) throw DimensionMismatch("a0 must be at least 1x1");
    if (e.a0.cols() != d) throw DimensionMismatch("a0 is not square");
    for (std::size_t i = 0; i < e.coeffs.size(); ++i) {
        const Matrix& a = e.coeffs[i];
        if (a.rows() != d || a.cols() != d) {
            throw DimensionMismatch("coefficient " + std::to_string(i + 1) + " has shape " +
                                    std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                    ", expected " + std::to_string(d) + "x" + std::to_string(d));
        }
    }
    if (e.selfadjoint) {
        double defect = selfadjoint_defect(e.a0);
        if (defect > kSelfAdjointTol) {
            throw NotSelfAdjoint("a0 fails self-adjointness, max entrywise defect " +
                                 std::to_string(defect));
        }
        for (std::size_t i = 0; i < e.coeffs.size(); ++i) {
            defect = selfadjoint_defect(e.coeffs[i]);
            if (defect > kSelfAdjointTol) {
                throw NotSelfAdjoint("coefficient " + std::to_string(i + 1) +
                                     " fails self-adjointness, max entrywise defect " +
                                     std::to_string(defect));
            }
        }
    }
}

inline void require_selfadjoint(const CoefficientEnsemble& e, const char* where) {
    if (!e.selfadjoint) throw NotSelfAdjoint(std::string(where) + ": ensemble must be self-adjoint");
}

inline Vector vec(const Matrix& m) {
    return Eigen::Map<const Vector>(m.data(), m.size());
}

/// Cov(X)_{ij,kl} = E[X_ij conj(X_kl)] = sum_s vec(A_s) vec(A_s)^*.
/// A_0 does not contribute. Index order follows Eigen's column-major vec.
inline CovarianceMatrix covariance(const CoefficientEnsemble& e) {
    validate(e);
    const Index d = e.dim();
    Matrix cov = Matrix::Zero(d * d, d * d);
    for (const Matrix& a : e.coeffs) {
        Vector va = vec(a);
        cov.noalias() += va * va.adjoint();
    }
    return CovarianceMatrix{std::move(cov)};
}

/// Self-adjoint dilation: each coefficient becomes [[0, A], [A^*, 0]] in
/// dimension 2d. Eigenvalues of samples are the +- singular values of X
/// together with possible zeros.
inline CoefficientEnsemble dilate(const CoefficientEnsemble& e) {
    validate(e);
    const Index d = e.dim();
    auto lift = [d](const Matrix& a) {
        Matrix b = Matrix::Zero(2 * d, 2 * d);
        b.block(0, d, d, d) = a;
        b.block(d, 0, d, d) = a.adjoint();
        return b;
    };
    CoefficientEnsemble out;
    out.a0 = lift(e.a0);
    out.coeffs.reserve(e.coeffs.size());
    for (const Matrix& a : e.coeffs) out.coeffs.push_back(lift(a));
    out.selfadjoint = true;
    if (e.meta) {
        out.meta = e.meta;
        out.meta->kind += "_dilated";
    }
    return out;
}

/// Ensemble of the dilated model when needed, otherwise a copy.
inline CoefficientEnsemble as_selfadjoint(const CoefficientEnsemble& e) {
    return e.selfadjoint ? e : dilate(e);
}

namespace detail {

/// Gram matrix G_{st} = Tr[A_s^* A_t] of the coefficient list.
inline Matrix coefficient_gram(const CoefficientEnsemble& e) {
    const Index n = e.count();
    Matrix g(n, n);
    for (Index s = 0; s < n; ++s)
        for (Index t = s; t < n; ++t) {
            Complex val = (e.coeffs[s].adjoint() * e.coeffs[t]).trace();
            g(s, t) = val;
            g(t, s) = std::conj(val);
        }
    return g;
}

}  // namespace detail

/// Re-represents the same Gaussian distribution with trace-orthogonal
/// coefficients, via the eigendecomposition of the coefficient Gram matrix.
/// Eigendirections below 1e-12 * ||Cov|| are dropped, so the output has at
/// most d^2 coefficients.
inline CoefficientEnsemble orthogonalize(const CoefficientEnsemble& e) {
    validate(e);
    const Index n = e.count();
    if (n == 0) return e;
    Matrix gram = detail::coefficient_gram(e);
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    const RealVector& lam = es.eigenvalues();
    const Matrix& u = es.eigenvectors();
    const double lmax = lam.size() > 0 ? std::max(0.0, lam(lam.size() - 1)) : 0.0;
    const double cut = 1e-12 * lmax;

    CoefficientEnsemble out;
    out.a0 = e.a0;
    out.selfadjoint = e.selfadjoint;
    out.meta = e.meta;
    const Index d = e.dim();
    for (Index k = 0; k < n; ++k) {
        if (lam(k) <= cut) continue;
        Matrix c = Matrix::Zero(d, d);
        for (Index s = 0; s < n; ++s) c.noalias() += u(s, k) * e.coeffs[s];
        if (e.selfadjoint) c = ((c + c.adjoint()) / 2.0).eval();  // scrub roundoff phase
        out.coeffs.push_back(std::move(c));
    }
    return out;
}

/// X tensor 1_N: every matrix becomes A otimes 1_N. Spectrum is unchanged,
/// v grows by sqrt(N).
inline CoefficientEnsemble tensor_identity(const CoefficientEnsemble& e, Index n_copies) {
    validate(e);
    const Index d = e.dim();
    auto lift = [&](const Matrix& a) {
        Matrix b = Matrix::Zero(d * n_copies, d * n_copies);
        for (Index k = 0; k < n_copies; ++k) b.block(k * d, k * d, d, d) = a;
        return b;
    };
    CoefficientEnsemble out;
    out.a0 = lift(e.a0);
    for (const Matrix& a : e.coeffs) out.coeffs.push_back(lift(a));
    out.selfadjoint = e.selfadjoint;
    return out;
}

}  // namespace freematrix
