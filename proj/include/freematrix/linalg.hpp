#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "freematrix/ensemble.hpp"
#include "freematrix/rng.hpp"

namespace freematrix {

inline RealVector eigenvalues_sa(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

/// Largest eigenvalue of a Hermitian matrix.
inline double lambda_max(const Matrix& m) {
    RealVector ev = eigenvalues_sa(m);
    return ev(ev.size() - 1);
}

inline double lambda_min(const Matrix& m) {
    return eigenvalues_sa(m)(0);
}

/// Spectral norm. Hermitian matrices get an eigensolve, general ones an SVD.
inline double op_norm(const Matrix& m) {
    if (m.rows() == m.cols() && selfadjoint_defect(m) <= 1e-13 * (1.0 + m.cwiseAbs().maxCoeff())) {
        RealVector ev = eigenvalues_sa(m);
        return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
    }
    return m.jacobiSvd().singularValues()(0);
}

inline double op_norm_sa(const Matrix& m) {
    RealVector ev = eigenvalues_sa(m);
    return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

inline Matrix hermitian_part(const Matrix& m) { return (m + m.adjoint()) / 2.0; }

/// Im M = (M - M^*) / 2i as a Hermitian matrix.
inline Matrix imag_part(const Matrix& m) {
    return (m - m.adjoint()) / Complex(0.0, 2.0);
}

/// Haar-distributed unitary via QR of a complex Ginibre matrix with the
/// standard phase fix on the diagonal of R.
inline Matrix haar_unitary(Index d, CounterRng rng) {
    Matrix g(d, d);
    for (Index j = 0; j < d; ++j)
        for (Index i = 0; i < d; ++i)
            g(i, j) = Complex(rng.next_normal(), rng.next_normal());
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index j = 0; j < d; ++j) {
        Complex rjj = r(j, j);
        double a = std::abs(rjj);
        q.col(j) *= (a > 0 ? rjj / a : Complex(1, 0));
    }
    return q;
}

/// Random unit vector in C^d.
inline Vector random_unit_vector(Index d, CounterRng& rng) {
    Vector v(d);
    for (Index i = 0; i < d; ++i) v(i) = Complex(rng.next_normal(), rng.next_normal());
    return v / v.norm();
}

/// The covariance map S[M] = sum_i A_i M A_i of a self-adjoint model.
///
/// Three backends:
///  - dense coefficient list (the general case),
///  - entrywise variance profile b_{ij}^2 of an independent-entry model,
///    applied in O(d^2) via the closed form of E_{ij} M E_{ij},
///  - a precomputed d^2 x d^2 matrix acting on vec(M), worthwhile when the
///    coefficient list is long and d^4 storage is affordable.
class SOperator {
public:
    static SOperator from_coefficients(std::vector<Matrix> coeffs, Index dim) {
        SOperator s;
        s.dim_ = dim;
        s.coeffs_ = std::move(coeffs);
        return s;
    }

    static SOperator from_ensemble(const CoefficientEnsemble& e) {
        return from_coefficients(e.coeffs, e.dim());
    }

    /// Independent-entry model with coefficients b_{ij} E_{ij}; b2 holds the
    /// variances b_{ij}^2 and must be symmetric.
    static SOperator from_profile(RealMatrix b2) {
        SOperator s;
        s.dim_ = b2.rows();
        s.profile_ = std::move(b2);
        return s;
    }

    Index dim() const { return dim_; }

    /// Replaces the coefficient sum by a single d^2 x d^2 matrix-vector
    /// product. Pays off once n is a fair multiple of d.
    void precompute_kron() {
        if (kron_ || profile_.size() > 0) return;
        const Index d = dim_;
        // T vec(M) = vec(S[M]) with column-major vec: T = sum_i A_i^T kron A_i.
        Matrix t = Matrix::Zero(d * d, d * d);
        for (const Matrix& a : coeffs_)
            for (Index j = 0; j < d; ++j)
                for (Index i = 0; i < d; ++i) t.block(j * d, i * d, d, d) += a(i, j) * a;
        kron_ = std::move(t);
    }

    Matrix apply(const Matrix& m) const {
        const Index d = dim_;
        if (profile_.size() > 0) {
            // S[M]_{kk} = sum_j b2_{kj} M_{jj};  S[M]_{kl} = b2_{kl} M_{lk} for k != l.
            Matrix out = profile_.cast<Complex>().cwiseProduct(m.transpose());
            Vector diag = profile_.cast<Complex>() * m.diagonal();
            out.diagonal() = diag;
            return out;
        }
        if (kron_) {
            Vector vm = vec(m);
            Vector vs = (*kron_) * vm;
            return Eigen::Map<const Matrix>(vs.data(), d, d);
        }
        Matrix out = Matrix::Zero(d, d);
        for (const Matrix& a : coeffs_) out.noalias() += a * m * a;
        return out;
    }

    /// sum_i A_i A_i = S[1].
    Matrix apply_identity() const { return apply(Matrix::Identity(dim_, dim_)); }

private:
    Index dim_ = 0;
    std::vector<Matrix> coeffs_;
    RealMatrix profile_;
    std::optional<Matrix> kron_;
};

}  // namespace freematrix
