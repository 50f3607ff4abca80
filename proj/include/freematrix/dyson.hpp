#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <numbers>
#include <optional>
#include <vector>

#include "freematrix/ensemble.hpp"
#include "freematrix/lehner.hpp"
#include "freematrix/linalg.hpp"

namespace freematrix {

/// Matrix Stieltjes transform samples of X_free on a spectral grid, the
/// smoothed density they induce and the extracted support intervals.
///
/// Conventions: the solver core computes the paper-style transform
/// G(Z) = (id (x) tau)[(Z (x) 1 - X_free)^{-1}], which has negative-definite
/// imaginary part for Im Z > 0. Density evaluation uses M(z) := -G(z 1),
/// so that Im M > 0 and rho(lambda) = Im tr M(lambda + i eta) / pi >= 0,
/// matching the scalar semicircle transform m(z) = (-z + sqrt(z^2 - 4))/2.
struct DysonSolution {
    std::vector<Complex> grid;
    std::vector<Matrix> transforms;  // M(z) with Im M > 0 per grid point
    std::vector<double> density;
    std::vector<std::pair<double, double>> support;
    double eta = 0.0;
    double mass = 0.0;
};

struct DysonOptions {
    double tol = 1e-11;
    int max_iter = 20000;
};

namespace detail {

/// Fixed-point solve of G = (Z - A_0 - S[G])^{-1}. The plain damped
/// iteration contracts like 1 - c * Im z near the spectral edge, which is
/// far too slow for small-eta sweeps, so the update is Anderson-mixed over
/// a short history with the plain step as fallback. Every accepted iterate
/// must keep Im G negative definite; the plain map preserves that cone, and
/// Anderson candidates leaving it are rejected, which pins the iteration to
/// the physical solution branch.
inline Matrix dyson_core(const Matrix& a0, const SOperator& s, const Matrix& z_cap,
                         const DysonOptions& opt, const Matrix* warm, double* residual_out) {
    const Index d = a0.rows();
    auto apply_map = [&](const Matrix& g) -> Matrix {
        Matrix rhs = z_cap - a0 - s.apply(g);
        return Eigen::PartialPivLU<Matrix>(rhs).solve(Matrix::Identity(d, d));
    };
    auto in_cone = [&](const Matrix& g) {
        Matrix neg_im = -imag_part(g);
        Eigen::LLT<Matrix> llt(neg_im);
        return llt.info() == Eigen::Success;
    };
    Matrix g = warm ? *warm
                    : Matrix(Eigen::PartialPivLU<Matrix>(z_cap).solve(Matrix::Identity(d, d)));
    if (!in_cone(g)) g = Eigen::PartialPivLU<Matrix>(z_cap).solve(Matrix::Identity(d, d));
    constexpr int kMemory = 6;
    std::deque<Vector> g_hist, f_hist;
    double res = std::numeric_limits<double>::infinity();
    double best_res = res;
    int stall = 0;
    for (int it = 0; it < opt.max_iter; ++it) {
        Matrix fg = apply_map(g);
        Matrix fmat = fg - g;
        res = fmat.norm();
        const double scale = std::max(1.0, fg.cwiseAbs().maxCoeff());
        if (res <= opt.tol * scale) {
            if (residual_out) *residual_out = res;
            return fg;
        }
        if (res < 0.9 * best_res) {
            best_res = res;
            stall = 0;
        } else if (++stall > 40) {
            g_hist.clear();
            f_hist.clear();
            stall = 0;
        }
        g_hist.push_back(Eigen::Map<const Vector>(g.data(), d * d));
        f_hist.push_back(Eigen::Map<const Vector>(fmat.data(), d * d));
        if (static_cast<int>(g_hist.size()) > kMemory) {
            g_hist.pop_front();
            f_hist.pop_front();
        }
        const int k = static_cast<int>(g_hist.size());
        bool stepped = false;
        if (k >= 2) {
            Eigen::MatrixXcd diffs(d * d, k - 1);
            for (int j = 0; j < k - 1; ++j) diffs.col(j) = f_hist[j] - f_hist[k - 1];
            Eigen::MatrixXcd gram = diffs.adjoint() * diffs;
            gram += 1e-13 * (1.0 + gram.cwiseAbs().maxCoeff()) *
                    Eigen::MatrixXcd::Identity(k - 1, k - 1);
            Vector gamma = gram.ldlt().solve(-diffs.adjoint() * f_hist[k - 1]);
            Vector g_new = g_hist[k - 1] + f_hist[k - 1];
            for (int j = 0; j < k - 1; ++j)
                g_new += gamma(j) * ((g_hist[j] + f_hist[j]) - (g_hist[k - 1] + f_hist[k - 1]));
            if (g_new.allFinite()) {
                Matrix candidate = Eigen::Map<const Matrix>(g_new.data(), d, d);
                if (in_cone(candidate)) {
                    g = std::move(candidate);
                    stepped = true;
                }
            }
        }
        if (!stepped) g = fg;  // the plain step stays in the cone
    }
    if (residual_out) *residual_out = res;
    throw NonConvergence("dyson solve: residual " + std::to_string(res) + " after " +
                         std::to_string(opt.max_iter) + " iterations");
}

}  // namespace detail

/// G_free(Z) = (id (x) tau)[(Z (x) 1 - X_free)^{-1}] for matrix spectral
/// parameter Z with Im Z positive definite. Self-adjoint models only.
inline Matrix g_free(const CoefficientEnsemble& ensemble, const Matrix& z,
                     DysonOptions opt = DysonOptions{}) {
    const CoefficientEnsemble& e = ensemble;
    require_selfadjoint(e, "g_free");
    validate(e);
    if (lambda_min(imag_part(z)) <= 0) throw ImPartNotPd("g_free: Im Z must be positive definite");
    SOperator s = has_symmetric_profile(e) ? SOperator::from_profile(*e.meta->profile)
                                           : SOperator::from_ensemble(e);
    return detail::dyson_core(e.a0, s, z, opt, nullptr, nullptr);
}

/// M(z) = -G_free(z 1): the scalar-parameter transform with Im M > 0.
inline Matrix dyson_solve(const CoefficientEnsemble& ensemble, Complex z, double tol = 1e-11,
                          int max_iter = 20000) {
    if (z.imag() <= 0) throw ImPartNotPd("dyson_solve: Im z must be positive");
    DysonOptions opt{tol, max_iter};
    const Index d = ensemble.dim();
    return -g_free(ensemble, z * Matrix::Identity(d, d), opt);
}

namespace detail {

struct DensityEvaluator {
    const Matrix* a0;
    const SOperator* s;
    DysonOptions opt;
    mutable std::optional<Matrix> warm;

    /// rho_eta(lambda) = Im tr M(lambda + i eta) / pi, warm-started.
    double operator()(double lambda, double eta, Matrix* transform = nullptr) const {
        const Index d = a0->rows();
        Matrix z_cap = Complex(lambda, eta) * Matrix::Identity(d, d);
        Matrix g = dyson_core(*a0, *s, z_cap, opt, warm ? &*warm : nullptr, nullptr);
        warm = g;
        Matrix m = -g;
        if (transform) *transform = m;
        double rho = imag_part(m).trace().real() / (static_cast<double>(d) * std::numbers::pi);
        return std::max(rho, 0.0);
    }
};

}  // namespace detail

/// Density sweep at fixed eta over an evenly spaced window, with warm starts
/// along the grid. The reported mass is the trapezoid integral over the
/// window.
inline DysonSolution spectral_density(const CoefficientEnsemble& ensemble, double window_lo,
                                      double window_hi, int points, double eta,
                                      DysonOptions opt = DysonOptions{}) {
    const CoefficientEnsemble e = as_selfadjoint(ensemble);
    validate(e);
    if (points < 2) throw SizeLimitExceeded("spectral_density needs at least two grid points");
    if (eta <= 0) throw ImPartNotPd("spectral_density: eta must be positive");
    SOperator s = has_symmetric_profile(e) ? SOperator::from_profile(*e.meta->profile)
                                           : SOperator::from_ensemble(e);
    detail::DensityEvaluator eval{&e.a0, &s, opt, std::nullopt};

    DysonSolution sol;
    sol.eta = eta;
    const double step = (window_hi - window_lo) / (points - 1);
    sol.grid.reserve(points);
    sol.transforms.reserve(points);
    sol.density.reserve(points);
    for (int k = 0; k < points; ++k) {
        double lam = window_lo + k * step;
        Matrix m;
        double rho = eval(lam, eta, &m);
        sol.grid.emplace_back(lam, eta);
        sol.transforms.push_back(std::move(m));
        sol.density.push_back(rho);
    }
    for (int k = 0; k + 1 < points; ++k)
        sol.mass += 0.5 * (sol.density[k] + sol.density[k + 1]) * step;
    return sol;
}

struct SupportOptions {
    std::vector<double> eta_schedule{1e-1, 3e-2, 1e-2, 3e-3};
    /// Edge threshold coefficient: an edge is the crossing of
    /// rho_eta = threshold_coeff * sqrt(eta) * max rho_eta. The sqrt(eta)
    /// scaling keeps the crossing offset linear in eta, which the final
    /// linear extrapolation over the schedule then removes.
    double threshold_coeff = 0.5;
    int points = 400;
    double window_pad = 0.5;
    DysonOptions dyson;
};

namespace detail {

struct EtaEdges {
    double eta;
    std::vector<std::pair<double, double>> intervals;
};

/// Threshold crossings of the density at one eta, refined by bisection.
inline EtaEdges support_at_eta(const Matrix& a0, const SOperator& s, double eta,
                               double window_lo, double window_hi, int points,
                               double threshold_coeff, const DysonOptions& opt) {
    DensityEvaluator eval{&a0, &s, opt, std::nullopt};
    const double step = (window_hi - window_lo) / (points - 1);
    std::vector<double> rho(points);
    double rho_max = 0;
    for (int k = 0; k < points; ++k) {
        rho[k] = eval(window_lo + k * step, eta);
        rho_max = std::max(rho_max, rho[k]);
    }
    const double thresh = threshold_coeff * std::sqrt(eta) * rho_max;

    auto refine = [&](double lo, double hi) {
        double f_lo = eval(lo, eta) - thresh;
        for (int it = 0; it < 50 && hi - lo > 1e-10; ++it) {
            double mid = 0.5 * (lo + hi);
            double f_mid = eval(mid, eta) - thresh;
            if ((f_lo <= 0) == (f_mid <= 0)) {
                lo = mid;
                f_lo = f_mid;
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    };

    EtaEdges out;
    out.eta = eta;
    bool inside = rho[0] > thresh;
    double open_edge = window_lo;
    for (int k = 1; k < points; ++k) {
        bool next_inside = rho[k] > thresh;
        if (next_inside == inside) continue;
        double x = refine(window_lo + (k - 1) * step, window_lo + k * step);
        if (next_inside) {
            open_edge = x;
        } else {
            out.intervals.emplace_back(open_edge, x);
        }
        inside = next_inside;
    }
    if (inside) out.intervals.emplace_back(open_edge, window_hi);
    return out;
}

}  // namespace detail

struct SupportResult {
    std::vector<std::pair<double, double>> intervals;        // extrapolated to eta -> 0
    std::vector<std::pair<double, std::vector<std::pair<double, double>>>> per_eta;
    SupportOptions options;
};

/// Estimates sp(X_free) as threshold super-level sets of the smoothed
/// density over a decreasing eta schedule, with each edge extrapolated
/// linearly in eta. The interval structure at the smallest eta decides the
/// number of bands; edges are matched across the schedule by proximity.
inline SupportResult support(const CoefficientEnsemble& ensemble,
                             SupportOptions opt = SupportOptions{}) {
    const CoefficientEnsemble e = as_selfadjoint(ensemble);
    validate(e);
    SOperator s = has_symmetric_profile(e) ? SOperator::from_profile(*e.meta->profile)
                                           : SOperator::from_ensemble(e);
    auto [pis_lo, pis_hi] = pisier_bounds(e);
    const double window_lo = -pis_hi - opt.window_pad;
    const double window_hi = pis_hi + opt.window_pad;

    std::vector<detail::EtaEdges> sweeps;
    for (double eta : opt.eta_schedule)
        sweeps.push_back(detail::support_at_eta(e.a0, s, eta, window_lo, window_hi, opt.points,
                                                opt.threshold_coeff, opt.dyson));

    SupportResult result;
    result.options = opt;
    for (const auto& sweep : sweeps) result.per_eta.emplace_back(sweep.eta, sweep.intervals);

    const detail::EtaEdges& finest = sweeps.back();
    const double match_radius = 0.25 * (window_hi - window_lo);
    for (const auto& [lo_f, hi_f] : finest.intervals) {
        // collect matching edges across the schedule and fit edge = a + b eta
        auto extrapolate = [&](double edge_ref, bool is_left) {
            std::vector<std::pair<double, double>> pts;  // (eta, edge)
            for (const auto& sweep : sweeps) {
                double best = std::numeric_limits<double>::quiet_NaN();
                double best_dist = match_radius;
                for (const auto& iv : sweep.intervals) {
                    double cand = is_left ? iv.first : iv.second;
                    double dist = std::abs(cand - edge_ref);
                    if (dist < best_dist) {
                        best_dist = dist;
                        best = cand;
                    }
                }
                if (std::isfinite(best)) pts.emplace_back(sweep.eta, best);
            }
            // the crossing offset is linear in eta only to leading order;
            // restrict the fit to the smallest levels
            std::sort(pts.begin(), pts.end());
            if (pts.size() > 3) pts.resize(3);
            if (pts.size() < 2) return edge_ref;
            double se = 0, see = 0, s1 = static_cast<double>(pts.size()), sx = 0, sy = 0;
            for (auto [x, y] : pts) {
                sx += x;
                sy += y;
                se += x * y;
                see += x * x;
            }
            double denom = s1 * see - sx * sx;
            if (std::abs(denom) < 1e-30) return edge_ref;
            return (sy * see - sx * se) / denom;  // intercept of the LS line
        };
        result.intervals.emplace_back(extrapolate(lo_f, true), extrapolate(hi_f, false));
    }
    return result;
}

}  // namespace freematrix
