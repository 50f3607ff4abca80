#pragma once

#include <algorithm>
#include <cmath>

#include "freematrix/ensemble.hpp"
#include "freematrix/linalg.hpp"
#include "freematrix/rng.hpp"

namespace freematrix {

/// The model parameters controlling the deviation of X from X_free.
struct ParamSet {
    double sigma = 0.0;
    double sigma_star_lower = 0.0;
    double sigma_star_upper = 0.0;
    double v = 0.0;
    double v_tilde = 0.0;
    double w_upper = 0.0;
    double w_lower = 0.0;
};

/// sigma(X)^2 = max(||sum A_i^* A_i||, ||sum A_i A_i^*||).
inline double sigma(const CoefficientEnsemble& e) {
    validate(e);
    if (has_symmetric_profile(e)) {
        // max_i sqrt(sum_j b_{ij}^2) for independent-entry models
        return std::sqrt(e.meta->profile->rowwise().sum().maxCoeff());
    }
    if (has_rect_profile(e)) {
        const RealMatrix& b2 = *e.meta->profile;
        return std::sqrt(std::max(b2.rowwise().sum().maxCoeff(), b2.colwise().sum().maxCoeff()));
    }
    const Index d = e.dim();
    Matrix sl = Matrix::Zero(d, d), sr = Matrix::Zero(d, d);
    for (const Matrix& a : e.coeffs) {
        sl.noalias() += a.adjoint() * a;
        sr.noalias() += a * a.adjoint();
    }
    return std::sqrt(std::max(lambda_max(sl), lambda_max(sr)));
}

/// v(X)^2 = ||Cov(X)||, computed from the coefficient Gram matrix (the
/// nonzero spectra of V V^* and V^* V coincide).
inline double v(const CoefficientEnsemble& e) {
    validate(e);
    if (e.count() == 0) return 0.0;
    if (has_symmetric_profile(e)) {
        // Cov splits over entry pairs: 2 b_{ij}^2 off the diagonal, b_{ii}^2 on it.
        const RealMatrix& b2 = *e.meta->profile;
        double best = b2.diagonal().maxCoeff();
        const Index d = b2.rows();
        for (Index i = 0; i < d; ++i)
            for (Index j = 0; j < i; ++j) best = std::max(best, 2.0 * b2(i, j));
        return std::sqrt(std::max(0.0, best));
    }
    if (has_rect_profile(e)) return std::sqrt(e.meta->profile->maxCoeff());
    Matrix gram = detail::coefficient_gram(e);
    return std::sqrt(std::max(0.0, lambda_max(gram)));
}

inline double v_tilde(const CoefficientEnsemble& e) { return std::sqrt(v(e) * sigma(e)); }

struct SigmaStarResult {
    double lower = 0.0;
    double upper = 0.0;
    Vector witness_v;
    Vector witness_w;
};

namespace detail {

/// For fixed w, sup_v sum |<v, A_i w>|^2 is the top eigenpair of
/// sum (A_i w)(A_i w)^*. One alternating pass from a given start. For a
/// self-adjoint model both half-steps reduce to S[uu^*], which the profile
/// backend evaluates in O(d^2).
inline double sigma_star_alternate(const CoefficientEnsemble& e, const SOperator* sop, Vector w,
                                   Vector* v_out, Vector* w_out) {
    const Index d = e.dim();
    auto left_matrix = [&](const Vector& u) {  // sum (A_i u)(A_i u)^*
        if (sop) return sop->apply(u * u.adjoint());
        Matrix m = Matrix::Zero(d, d);
        for (const Matrix& a : e.coeffs) {
            Vector au = a * u;
            m.noalias() += au * au.adjoint();
        }
        return m;
    };
    auto right_matrix = [&](const Vector& u) {  // sum (A_i^* u)(A_i^* u)^*
        if (sop) return sop->apply(u * u.adjoint());
        Matrix m = Matrix::Zero(d, d);
        for (const Matrix& a : e.coeffs) {
            Vector au = a.adjoint() * u;
            m.noalias() += au * au.adjoint();
        }
        return m;
    };
    double value = 0.0;
    Vector vv = Vector::Zero(d);
    for (int it = 0; it < 200; ++it) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(left_matrix(w));
        double val = es.eigenvalues()(d - 1);
        vv = es.eigenvectors().col(d - 1);

        Eigen::SelfAdjointEigenSolver<Matrix> es2(right_matrix(vv));
        double val2 = es2.eigenvalues()(d - 1);
        w = es2.eigenvectors().col(d - 1);
        if (std::abs(val2 - value) <= 1e-14 * std::max(1.0, std::abs(val2))) {
            value = val2;
            break;
        }
        value = std::max(val, val2);
    }
    if (v_out) *v_out = vv;
    if (w_out) *w_out = w;
    return std::sqrt(std::max(0.0, value));
}

}  // namespace detail

/// sigma_*(X)^2 = sup over unit v, w of sum |<v, A_i w>|^2. The exact value
/// is a tensor injective norm; this returns a certified bracket: the best
/// value found by alternating maximization over `restarts` starts (a lower
/// bound) and min(sigma, v) (an upper bound). Deterministic given the seed.
inline SigmaStarResult sigma_star(const CoefficientEnsemble& e, int restarts = 32,
                                  std::uint64_t seed = 0) {
    validate(e);
    SigmaStarResult res;
    const double sig = sigma(e);
    const double vv = v(e);
    res.upper = std::min(sig, vv);
    if (e.count() == 0 && !has_symmetric_profile(e)) return res;
    const Index d = e.dim();
    std::optional<SOperator> sop;
    if (has_symmetric_profile(e)) sop = SOperator::from_profile(*e.meta->profile);
    CounterRng master(seed, /*stream=*/0xa17);
    for (int r = 0; r <= restarts; ++r) {
        Vector w0;
        if (r == 0) {
            w0 = Vector::Zero(d);
            w0(0) = 1.0;
        } else {
            CounterRng rr = master.substream(static_cast<std::uint64_t>(r));
            w0 = random_unit_vector(d, rr);
        }
        Vector vw, ww;
        double val = detail::sigma_star_alternate(e, sop ? &*sop : nullptr, w0, &vw, &ww);
        if (val > res.lower) {
            res.lower = val;
            res.witness_v = vw;
            res.witness_w = ww;
        }
    }
    res.lower = std::min(res.lower, res.upper);  // the bracket is ordered by construction
    return res;
}

/// w(X) <= sqrt(v sigma) = v_tilde(X).
inline double w_upper(const CoefficientEnsemble& e) {
    require_selfadjoint(e, "w_upper");
    return v_tilde(e);
}

/// Certified lower bound on the alignment parameter
/// sup_{U,V,W} ||sum_{ij} A_i U A_j V A_i W A_j||^{1/4}: the best value over
/// `trials` Haar unitary triples, with the identity triple as trial 0.
inline double w_lower(const CoefficientEnsemble& e, int trials = 32, std::uint64_t seed = 0) {
    require_selfadjoint(e, "w_lower");
    validate(e);
    const Index d = e.dim();
    const Index n = e.count();
    if (n == 0) return 0.0;
    SOperator s = SOperator::from_ensemble(e);
    if (n >= 4 * d && d <= 40) s.precompute_kron();
    CounterRng master(seed, /*stream=*/0x317);
    double best = 0.0;
    for (int t = 0; t <= trials; ++t) {
        Matrix u, vmat, wmat;
        if (t == 0) {
            u = vmat = wmat = Matrix::Identity(d, d);
        } else {
            CounterRng rt = master.substream(static_cast<std::uint64_t>(t));
            u = haar_unitary(d, rt.substream(0));
            vmat = haar_unitary(d, rt.substream(1));
            wmat = haar_unitary(d, rt.substream(2));
        }
        // sum_{ij} A_i U A_j V A_i W A_j = sum_i A_i U S[V A_i W]
        Matrix total = Matrix::Zero(d, d);
        for (const Matrix& a : e.coeffs) total.noalias() += a * u * s.apply(vmat * a * wmat);
        best = std::max(best, std::pow(op_norm(total), 0.25));
    }
    return best;
}

/// Bundles sigma, sigma_*, v, v_tilde and the w bracket with the default
/// restart/trial counts. Non-self-adjoint models are dilated for the w
/// parameters, which the dilation leaves within the reported bracket.
inline ParamSet params(const CoefficientEnsemble& e, std::uint64_t seed = 0) {
    validate(e);
    ParamSet p;
    p.sigma = sigma(e);
    p.v = v(e);
    p.v_tilde = std::sqrt(p.sigma * p.v);
    SigmaStarResult ss = sigma_star(e, 32, seed);
    p.sigma_star_lower = ss.lower;
    p.sigma_star_upper = ss.upper;
    const CoefficientEnsemble sa = as_selfadjoint(e);
    p.w_upper = w_upper(sa);
    p.w_lower = freematrix::w_lower(sa, 32, seed);
    return p;
}

}  // namespace freematrix
