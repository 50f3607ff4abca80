#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <vector>

#include "freematrix/ensemble.hpp"
#include "freematrix/linalg.hpp"
#include "freematrix/params.hpp"

namespace freematrix {

/// Result of the variational norm computation
/// ||X_free|| = max_{eps = +-1} inf_{Z > 0} lambda_max(Z^{-1} + eps A_0 + S[Z]).
struct LehnerResult {
    double norm = 0.0;
    double lambda_max_plus = 0.0;
    double lambda_max_minus = 0.0;
    Matrix witness_plus;
    Matrix witness_minus;
    int iterations = 0;
    double certificate_gap = 0.0;
    bool converged = true;
    /// Eigenvalue spread of Z^{-1} + eps A_0 + S[Z] at the best iterate. At an
    /// exact optimum of an irreducible model this matrix is a multiple of the
    /// identity; decomposable models keep a spread in their subdominant
    /// blocks, so this is a diagnostic, not a convergence criterion.
    double identity_defect = 0.0;
};

struct LehnerOptions {
    double tol = 1e-9;       // relative objective decrease cutoff per stage
    int max_iter = 4000;     // total objective evaluations per sign
    double mu_final = 3e-7;  // last smoothing level, relative to sigma
};

namespace detail {

/// Hermitian matrices packed as real vectors: diagonal, then re/im of the
/// strict upper triangle. Gradients pack with the factor 2 so that packed
/// dot products reproduce the real Frobenius pairing.
inline Eigen::VectorXd pack_hermitian(const Matrix& z, bool gradient) {
    const Index d = z.rows();
    Eigen::VectorXd x(d * d);
    Index k = 0;
    for (Index i = 0; i < d; ++i) x(k++) = z(i, i).real();
    const double f = gradient ? 2.0 : 1.0;
    for (Index j = 1; j < d; ++j)
        for (Index i = 0; i < j; ++i) {
            x(k++) = f * z(i, j).real();
            x(k++) = f * z(i, j).imag();
        }
    return x;
}

inline Matrix unpack_hermitian(const Eigen::VectorXd& x, Index d) {
    Matrix z(d, d);
    Index k = 0;
    for (Index i = 0; i < d; ++i) z(i, i) = x(k++);
    for (Index j = 1; j < d; ++j)
        for (Index i = 0; i < j; ++i) {
            Complex val(x(k), x(k + 1));
            k += 2;
            z(i, j) = val;
            z(j, i) = std::conj(val);
        }
    return z;
}

struct LehnerObjective {
    const Matrix* a0;
    const SOperator* s;
    double eps;
    double mu;

    /// Smoothed objective mu * log tr exp(M(Z)/mu) with
    /// M(Z) = Z^{-1} + eps A_0 + S[Z], plus its Frobenius gradient and the
    /// raw lambda_max value. Returns false when Z is not positive definite.
    bool eval(const Matrix& z, double* f_smooth, double* f_raw, Matrix* grad) const {
        const Index d = z.rows();
        Eigen::LLT<Matrix> llt(z);
        if (llt.info() != Eigen::Success) return false;
        Matrix zinv = llt.solve(Matrix::Identity(d, d));
        zinv = hermitian_part(zinv);
        Matrix m = zinv + eps * (*a0) + s->apply(z);
        m = hermitian_part(m);
        Eigen::SelfAdjointEigenSolver<Matrix> es(m);
        const RealVector& lam = es.eigenvalues();
        const double lmax = lam(d - 1);
        *f_raw = lmax;
        RealVector w(d);
        double sum = 0;
        for (Index i = 0; i < d; ++i) {
            w(i) = std::exp((lam(i) - lmax) / mu);
            sum += w(i);
        }
        *f_smooth = lmax + mu * std::log(sum);
        if (grad) {
            w /= sum;
            Matrix p = es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
            Matrix zp = llt.solve(p);                   // Z^{-1} P
            Matrix zpz = llt.solve(zp.adjoint()).adjoint();  // Z^{-1} P Z^{-1}
            *grad = hermitian_part(-zpz + s->apply(p));
        }
        return true;
    }
};

/// L-BFGS with Armijo backtracking restricted to the PD cone. Returns the
/// best raw lambda_max seen and the iterate achieving it.
inline void lbfgs_minimize(const LehnerObjective& obj, Matrix& z, double grad_tol, double rel_tol,
                           int max_evals, int* evals_used, double* best_raw, Matrix* best_z) {
    const Index d = z.rows();
    const int mem = 8;
    std::deque<Eigen::VectorXd> s_hist, y_hist;
    Eigen::VectorXd x = pack_hermitian(z, false);
    double f, raw;
    Matrix grad;
    int evals = 0;
    if (!obj.eval(z, &f, &raw, &grad)) {
        *evals_used = 0;
        return;
    }
    ++evals;
    if (raw < *best_raw) {
        *best_raw = raw;
        *best_z = z;
    }
    Eigen::VectorXd g = pack_hermitian(grad, true);

    while (evals < max_evals) {
        if (g.norm() <= grad_tol) break;
        // two-loop recursion
        Eigen::VectorXd q = -g;
        std::vector<double> alpha(s_hist.size());
        for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
            double rho = 1.0 / y_hist[i].dot(s_hist[i]);
            alpha[i] = rho * s_hist[i].dot(q);
            q -= alpha[i] * y_hist[i];
        }
        if (!s_hist.empty()) {
            double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
            q *= gamma;
        }
        for (std::size_t i = 0; i < s_hist.size(); ++i) {
            double rho = 1.0 / y_hist[i].dot(s_hist[i]);
            double beta = rho * y_hist[i].dot(q);
            q += (alpha[i] - beta) * s_hist[i];
        }
        double descent = g.dot(q);
        if (descent >= 0) {  // fall back to steepest descent
            q = -g;
            descent = -g.squaredNorm();
            s_hist.clear();
            y_hist.clear();
        }

        double t = 1.0;
        double f_new = f, raw_new = raw;
        Matrix z_new, grad_new;
        bool accepted = false;
        for (int ls = 0; ls < 50 && evals < max_evals; ++ls) {
            Eigen::VectorXd x_try = x + t * q;
            Matrix z_try = unpack_hermitian(x_try, d);
            double ft, rawt;
            Matrix gt;
            if (obj.eval(z_try, &ft, &rawt, &gt)) {
                ++evals;
                if (ft <= f + 1e-4 * t * descent) {
                    z_new = std::move(z_try);
                    f_new = ft;
                    raw_new = rawt;
                    grad_new = std::move(gt);
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if (!accepted) break;

        Eigen::VectorXd x_new = x + t * q;
        Eigen::VectorXd g_new = pack_hermitian(grad_new, true);
        Eigen::VectorXd sv = x_new - x;
        Eigen::VectorXd yv = g_new - g;
        if (sv.dot(yv) > 1e-14 * sv.norm() * yv.norm()) {
            s_hist.push_back(sv);
            y_hist.push_back(yv);
            if (static_cast<int>(s_hist.size()) > mem) {
                s_hist.pop_front();
                y_hist.pop_front();
            }
        }
        double decrease = f - f_new;
        x = std::move(x_new);
        g = std::move(g_new);
        z = unpack_hermitian(x, d);
        f = f_new;
        if (raw_new < *best_raw) {
            *best_raw = raw_new;
            *best_z = z;
        }
        raw = raw_new;
        if (decrease <= rel_tol * std::max(1.0, std::abs(f))) break;
    }
    *evals_used = evals;
}

/// inf_{Z>0} lambda_max(Z^{-1} + eps A_0 + S[Z]) by smoothing continuation:
/// the log-sum-exp softening of lambda_max is minimized by L-BFGS for a
/// decreasing sequence of smoothing levels; its gradient tends to the
/// subgradient -Z^{-1} u u^* Z^{-1} + S[u u^*] at the top eigenvector u.
inline double lehner_minimize_sign(const Matrix& a0, const SOperator& s, double eps, double scale,
                                   const LehnerOptions& opt, Matrix* witness, int* total_evals,
                                   bool* converged, double* identity_defect) {
    const Index d = a0.rows();
    Matrix z = Matrix::Identity(d, d) / std::max(scale, 1e-300);
    double best_raw = std::numeric_limits<double>::infinity();
    Matrix best_z = z;
    int evals_total = 0;

    std::vector<double> mus;
    for (double m = 3e-2; m > opt.mu_final * 0.999; m /= 8.0) mus.push_back(m);
    mus.push_back(opt.mu_final);

    for (double mu_rel : mus) {
        LehnerObjective obj{&a0, &s, eps, mu_rel * std::max(scale, 1e-300)};
        int evals = 0;
        double grad_tol = 1e-3 * mu_rel * scale * std::sqrt(static_cast<double>(d));
        int stage_budget = std::max(50, opt.max_iter / static_cast<int>(mus.size()));
        detail::lbfgs_minimize(obj, z, grad_tol, opt.tol * mu_rel, stage_budget, &evals, &best_raw,
                               &best_z);
        evals_total += evals;
        if (evals_total >= opt.max_iter) break;
    }

    if (!std::isfinite(best_raw)) *converged = false;
    // identity-multiple diagnostic at the best iterate
    {
        Eigen::LLT<Matrix> llt(best_z);
        if (llt.info() == Eigen::Success) {
            Matrix m = hermitian_part(llt.solve(Matrix::Identity(d, d))) + eps * a0 +
                       s.apply(best_z);
            RealVector lam = eigenvalues_sa(hermitian_part(m));
            *identity_defect = std::max(*identity_defect, lam(d - 1) - lam(0));
        }
    }
    *witness = best_z;
    *total_evals += evals_total;
    return best_raw;
}

}  // namespace detail

/// Pisier's sandwich: max(||A_0||, sigma) <= ||X_free|| <=
/// ||A_0|| + ||sum A_i^* A_i||^{1/2} + ||sum A_i A_i^*||^{1/2}.
inline std::pair<double, double> pisier_bounds(const CoefficientEnsemble& e) {
    validate(e);
    const double na0 = e.a0.size() > 0 ? op_norm(e.a0) : 0.0;
    if (has_symmetric_profile(e)) {
        const double sig = sigma(e);
        return {std::max(na0, sig), na0 + 2.0 * sig};
    }
    const Index d = e.dim();
    Matrix sl = Matrix::Zero(d, d), sr = Matrix::Zero(d, d);
    for (const Matrix& a : e.coeffs) {
        sl.noalias() += a.adjoint() * a;
        sr.noalias() += a * a.adjoint();
    }
    const double left = std::sqrt(lambda_max(sl));
    const double right = std::sqrt(lambda_max(sr));
    return {std::max(na0, std::max(left, right)), na0 + left + right};
}

/// ||X_free|| by Lehner's variational formula. Non-self-adjoint models are
/// dilated first, so the result is the largest singular value of X_free.
inline LehnerResult lehner_norm(const CoefficientEnsemble& ensemble, double tol = 1e-9,
                                int max_iter = 4000) {
    const CoefficientEnsemble e = as_selfadjoint(ensemble);
    validate(e);
    LehnerResult res;
    const Index d = e.dim();
    if (e.count() == 0 && !has_symmetric_profile(e)) {
        RealVector lam = eigenvalues_sa(e.a0);
        res.lambda_max_plus = lam(d - 1);
        res.lambda_max_minus = -lam(0);
        res.norm = std::max(res.lambda_max_plus, res.lambda_max_minus);
        res.witness_plus = res.witness_minus = Matrix::Identity(d, d);
        res.certificate_gap = 0.0;
        return res;
    }

    LehnerOptions opt;
    opt.tol = tol;
    opt.max_iter = max_iter;
    const double sig = sigma(e);
    const double scale = std::max(sig, 1e-12);
    SOperator s = has_symmetric_profile(e) ? SOperator::from_profile(*e.meta->profile)
                                           : SOperator::from_ensemble(e);
    if (!has_symmetric_profile(e) && e.count() >= 2 * d && d <= 40) s.precompute_kron();

    const bool centered = e.a0.cwiseAbs().maxCoeff() == 0.0;
    bool converged = true;
    res.lambda_max_plus = detail::lehner_minimize_sign(e.a0, s, +1.0, scale, opt,
                                                       &res.witness_plus, &res.iterations,
                                                       &converged, &res.identity_defect);
    if (centered) {
        res.lambda_max_minus = res.lambda_max_plus;
        res.witness_minus = res.witness_plus;
    } else {
        res.lambda_max_minus = detail::lehner_minimize_sign(e.a0, s, -1.0, scale, opt,
                                                            &res.witness_minus, &res.iterations,
                                                            &converged, &res.identity_defect);
    }
    res.converged = converged;
    res.norm = std::max(res.lambda_max_plus, res.lambda_max_minus);
    const double na0 = op_norm(e.a0);
    res.certificate_gap = res.norm - std::max(na0, sig);
    return res;
}

/// Primal/dual value of ||X_free|| for the self-adjoint independent-entry
/// model with variance profile b2 = (b_{ij}^2).
struct IndepEntryNorm {
    double primal = 0.0;
    double dual = 0.0;
    RealVector x_witness;
    RealVector w_witness;
    double gap() const { return primal - dual; }
};

/// Primal: inf over positive x of max_i { 1/x_i + (B x)_i }, located by
/// bisection on the level. For a feasible level the monotone iteration
/// x <- 1/(level - B x) started at x = 1/level increases to the least fixed
/// point, and at any fixed point all coordinates equal the level exactly;
/// for an infeasible level the same iteration must blow up. Dual:
/// 2 sup over the simplex of sum_i sqrt(w_i (B w)_i), by entropic mirror
/// ascent with backtracking.
inline IndepEntryNorm indep_entry_norm(const RealMatrix& b2) {
    const Index d = b2.rows();
    if (b2.cols() != d) throw NotSymmetric("variance profile must be square");
    if ((b2 - b2.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, b2.cwiseAbs().maxCoeff()))
        throw NotSymmetric("variance profile must be symmetric");
    if (b2.minCoeff() < 0) throw NegativeVariance("variance profile has negative entries");

    IndepEntryNorm out;
    const double sig2 = b2.rowwise().sum().maxCoeff();
    const double sig = std::sqrt(sig2);
    if (sig == 0.0) {
        out.x_witness = RealVector::Ones(d);
        out.w_witness = RealVector::Ones(d) / static_cast<double>(d);
        return out;
    }

    auto classify = [&](double level, RealVector* fixed_point) {
        RealVector x = RealVector::Constant(d, 1.0 / level);
        double prev_delta = std::numeric_limits<double>::infinity();
        for (int it = 0; it < 200000; ++it) {
            RealVector denom = RealVector::Constant(d, level) - b2 * x;
            if (denom.minCoeff() <= 0) return false;
            RealVector x_new = denom.cwiseInverse();
            double delta = (x_new - x).cwiseAbs().maxCoeff();
            double xmax = x_new.maxCoeff();
            x = std::move(x_new);
            if (xmax > 1e9 / level) return false;
            if (delta <= 1e-15 * std::max(1.0, xmax)) {
                if (fixed_point) *fixed_point = x;
                return true;
            }
            if (it % 1000 == 999) {
                if (delta >= prev_delta) return false;  // stalled: treat as infeasible
                prev_delta = delta;
            }
        }
        if (fixed_point) *fixed_point = x;
        return true;  // extremely slow convergence only happens at the edge
    };

    double lo = sig, hi = 2.0 * sig * (1.0 + 1e-12);
    RealVector x_best = RealVector::Constant(d, 1.0 / hi);
    classify(hi, &x_best);
    while (hi - lo > 1e-12 * sig) {
        double mid = 0.5 * (lo + hi);
        RealVector x_mid;
        if (classify(mid, &x_mid)) {
            hi = mid;
            x_best = x_mid;
        } else {
            lo = mid;
        }
    }
    out.primal = hi;
    out.x_witness = x_best;

    // dual ascent
    RealVector w = RealVector::Ones(d) / static_cast<double>(d);
    auto dual_value = [&](const RealVector& ww) {
        RealVector s = b2 * ww;
        double total = 0;
        for (Index i = 0; i < d; ++i) total += std::sqrt(std::max(0.0, ww(i) * s(i)));
        return 2.0 * total;
    };
    double hval = dual_value(w);
    double step = 1.0 / std::max(sig, 1e-300);
    for (int it = 0; it < 200000; ++it) {
        RealVector s = b2 * w;
        RealVector g(d);
        for (Index i = 0; i < d; ++i) {
            double wi = std::max(w(i), 1e-300);
            double si = std::max(s(i), 1e-300);
            g(i) = std::sqrt(si / wi);
        }
        RealVector ratio(d);
        for (Index i = 0; i < d; ++i)
            ratio(i) = std::sqrt(std::max(w(i), 1e-300) / std::max(s(i), 1e-300));
        g += b2 * ratio;

        bool improved = false;
        for (int ls = 0; ls < 60; ++ls) {
            RealVector w_try = (w.array() * ((step * (g.array() - g.maxCoeff()))).exp()).matrix();
            w_try /= w_try.sum();
            double h_try = dual_value(w_try);
            if (h_try > hval) {
                double gain = h_try - hval;
                w = std::move(w_try);
                hval = h_try;
                improved = true;
                step *= 1.3;
                if (gain <= 1e-15 * std::max(1.0, hval) && it > 100) it = 200000;  // converged
                break;
            }
            step *= 0.5;
        }
        if (!improved) break;
    }
    out.dual = hval;
    out.w_witness = w;
    return out;
}

}  // namespace freematrix
