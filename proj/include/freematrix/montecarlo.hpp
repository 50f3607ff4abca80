#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "freematrix/ensemble.hpp"
#include "freematrix/ensembles.hpp"
#include "freematrix/linalg.hpp"
#include "freematrix/moments.hpp"
#include "freematrix/pairings.hpp"
#include "freematrix/params.hpp"
#include "freematrix/rng.hpp"

namespace freematrix {

/// Summary of a Monte Carlo run. Bit-reproducible: identical
/// (ensemble, seed, trials) produce identical per_trial lists.
struct SampleStats {
    int trials = 0;
    double mean = 0.0;
    double std_error = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> per_trial;

    static SampleStats from_values(std::vector<double> values, std::uint64_t seed) {
        SampleStats s;
        s.seed = seed;
        s.trials = static_cast<int>(values.size());
        s.per_trial = std::move(values);
        if (s.trials == 0) return s;
        double sum = std::accumulate(s.per_trial.begin(), s.per_trial.end(), 0.0);
        s.mean = sum / s.trials;
        double ss = 0;
        for (double x : s.per_trial) ss += (x - s.mean) * (x - s.mean);
        double sd = s.trials > 1 ? std::sqrt(ss / (s.trials - 1)) : 0.0;
        s.std_error = sd / std::sqrt(static_cast<double>(s.trials));
        s.min = *std::min_element(s.per_trial.begin(), s.per_trial.end());
        s.max = *std::max_element(s.per_trial.begin(), s.per_trial.end());
        return s;
    }
};

namespace detail {

inline bool is_real(const CoefficientEnsemble& e) {
    auto real_mat = [](const Matrix& m) { return m.imag().cwiseAbs().maxCoeff() == 0.0; };
    if (e.a0.size() > 0 && !real_mat(e.a0)) return false;
    for (const Matrix& a : e.coeffs)
        if (!real_mat(a)) return false;
    return true;
}

/// Gaussian weights g_i for one trial, one per coefficient, keyed by
/// (seed, trial, coefficient ordinal).
inline double coeff_gaussian(const CounterRng& trial_rng, std::uint64_t ordinal) {
    CounterRng r = trial_rng.substream(ordinal);
    return r.next_normal();
}

}  // namespace detail

/// One draw of X = A_0 + sum g_i A_i. Profile-backed models are sampled
/// entrywise without materialized coefficients; the coefficient ordinal
/// stream matches the materialized order, so both paths give the same bits.
inline Matrix sample(const CoefficientEnsemble& e, std::uint64_t seed, std::uint64_t trial = 0) {
    const Index d = e.dim();
    CounterRng trial_rng = CounterRng(seed, /*stream=*/0x5a).substream(trial);
    Matrix x = e.a0;
    if (has_symmetric_profile(e)) {
        const RealMatrix& b2 = *e.meta->profile;
        std::uint64_t ord = 0;
        for (Index i = 0; i < d; ++i)
            for (Index j = 0; j <= i; ++j) {
                if (b2(i, j) <= 0) continue;
                double g = detail::coeff_gaussian(trial_rng, ord++) * std::sqrt(b2(i, j));
                x(i, j) += g;
                if (i != j) x(j, i) += g;
            }
        return x;
    }
    if (has_rect_profile(e)) {
        const RealMatrix& b2 = *e.meta->profile;
        const auto rect = *e.meta->rect;
        std::uint64_t ord = 0;
        for (Index i = 0; i < rect.rows; ++i)
            for (Index j = 0; j < rect.cols; ++j) {
                if (b2(i, j) <= 0) continue;
                x(i, j) += detail::coeff_gaussian(trial_rng, ord++) * std::sqrt(b2(i, j));
            }
        return x;
    }
    for (std::size_t i = 0; i < e.coeffs.size(); ++i)
        x += detail::coeff_gaussian(trial_rng, i) * e.coeffs[i];
    return x;
}

/// Eigenvalues of one sampled self-adjoint X.
inline RealVector sample_eigenvalues(const CoefficientEnsemble& e, std::uint64_t seed,
                                     std::uint64_t trial) {
    Matrix x = sample(e, seed, trial);
    if (detail::is_real(e)) {
        Eigen::SelfAdjointEigenSolver<RealMatrix> es(x.real(), Eigen::EigenvaluesOnly);
        return es.eigenvalues();
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(x, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

/// Empirical statistics of the spectral norm (largest singular value).
inline SampleStats norm_stats(const CoefficientEnsemble& e, int trials, std::uint64_t seed) {
    validate(e);
    std::vector<double> values(trials);
    const bool sa = e.selfadjoint;
    for (int t = 0; t < trials; ++t) {
        if (sa) {
            RealVector ev = sample_eigenvalues(e, seed, t);
            values[t] = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
        } else {
            Matrix x = sample(e, seed, t);
            values[t] = x.jacobiSvd().singularValues()(0);
        }
    }
    return SampleStats::from_values(std::move(values), seed);
}

/// Fraction of trials in which every eigenvalue of the sample lies within
/// `radius` of the given interval union.
inline SampleStats spectrum_inclusion_rate(const CoefficientEnsemble& e,
                                           const std::vector<std::pair<double, double>>& supp,
                                           double radius, int trials, std::uint64_t seed) {
    validate(e);
    require_selfadjoint(e, "spectrum_inclusion_rate");
    if (supp.empty()) throw Error("spectrum_inclusion_rate: support must be precomputed");
    auto dist_to_support = [&](double x) {
        double best = std::numeric_limits<double>::infinity();
        for (auto [a, b] : supp) {
            double dist = x < a ? a - x : (x > b ? x - b : 0.0);
            best = std::min(best, dist);
        }
        return best;
    };
    std::vector<double> values(trials);
    for (int t = 0; t < trials; ++t) {
        RealVector ev = sample_eigenvalues(e, seed, t);
        bool inside = true;
        for (Index i = 0; i < ev.size(); ++i)
            if (dist_to_support(ev(i)) > radius) {
                inside = false;
                break;
            }
        values[t] = inside ? 1.0 : 0.0;
    }
    return SampleStats::from_values(std::move(values), seed);
}

namespace detail {

/// One draw of the tensor model X^N = A_0 (x) 1 + sum A_i (x) G_i^N with
/// independent standard Wigner blocks (variance 1/N on and above the
/// diagonal).
inline Matrix sample_tensor(const TensorWignerSpec& spec, std::uint64_t seed,
                            std::uint64_t trial) {
    const Index d = spec.base.dim();
    if (spec.base.coeffs.empty() && spec.base.meta && spec.base.meta->profile)
        throw SizeLimitExceeded("tensor sampling needs materialized coefficients");
    const Index n_tensor = spec.n_tensor;
    const Index dim = d * n_tensor;
    CounterRng trial_rng = CounterRng(seed, /*stream=*/0x7e).substream(trial);
    Matrix x = Matrix::Zero(dim, dim);
    for (Index bi = 0; bi < n_tensor; ++bi)
        x.block(bi * d, bi * d, d, d) = spec.base.a0;
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_tensor));
    for (std::size_t i = 0; i < spec.base.coeffs.size(); ++i) {
        CounterRng coeff_rng = trial_rng.substream(i);
        const Matrix& a = spec.base.coeffs[i];
        std::uint64_t ord = 0;
        for (Index r = 0; r < n_tensor; ++r)
            for (Index c = r; c < n_tensor; ++c) {
                double g = coeff_rng.substream(ord++).next_normal() * scale;
                x.block(r * d, c * d, d, d) += g * a;
                if (c != r) x.block(c * d, r * d, d, d) += g * a.adjoint();
            }
    }
    return x;
}

}  // namespace detail

/// Empirical normalized traces tr[(X^N)^p] for all p = 1..p_max with shared
/// samples. Small models use exact traces of matrix powers; larger ones use
/// randomized trace probes (Rademacher quadratic forms), which keep the
/// estimator unbiased with the standard error reported as observed.
inline std::vector<SampleStats> tensor_moment_stats_all(const TensorWignerSpec& spec, int p_max,
                                                        int trials, std::uint64_t seed,
                                                        int probes = 8) {
    validate(spec.base);
    require_selfadjoint(spec.base, "tensor_moment_stats");
    const Index dim = spec.dim();
    std::vector<std::vector<double>> values(p_max, std::vector<double>(trials));
    const bool exact = dim <= 384;
    for (int t = 0; t < trials; ++t) {
        Matrix x = detail::sample_tensor(spec, seed, t);
        if (exact) {
            Matrix power = Matrix::Identity(dim, dim);
            for (int p = 1; p <= p_max; ++p) {
                power = (power * x).eval();
                values[p - 1][t] = power.trace().real() / static_cast<double>(dim);
            }
        } else {
            CounterRng probe_rng = CounterRng(seed, /*stream=*/0x9c).substream(t);
            std::vector<double> acc(p_max, 0.0);
            for (int q = 0; q < probes; ++q) {
                CounterRng r = probe_rng.substream(q);
                RealVector z(dim);
                for (Index i = 0; i < dim; ++i) z(i) = (r.next_u64() & 1) ? 1.0 : -1.0;
                Vector w = z.cast<Complex>();
                for (int p = 1; p <= p_max; ++p) {
                    w = (x * w).eval();
                    acc[p - 1] += (z.cast<Complex>().adjoint() * w).value().real();
                }
            }
            for (int p = 1; p <= p_max; ++p)
                values[p - 1][t] = acc[p - 1] / (probes * static_cast<double>(dim));
        }
    }
    std::vector<SampleStats> out;
    out.reserve(p_max);
    for (int p = 1; p <= p_max; ++p) out.push_back(SampleStats::from_values(values[p - 1], seed));
    return out;
}

inline SampleStats tensor_moment_stats(const TensorWignerSpec& spec, int p, int trials,
                                       std::uint64_t seed) {
    return tensor_moment_stats_all(spec, p, trials, seed).back();
}

/// Empirical E tr X^p by direct sampling of the base model (N = 1).
inline SampleStats gaussian_moment_stats(const CoefficientEnsemble& e, int p, int trials,
                                         std::uint64_t seed) {
    validate(e);
    require_selfadjoint(e, "gaussian_moment_stats");
    const Index d = e.dim();
    std::vector<double> values(trials);
    for (int t = 0; t < trials; ++t) {
        Matrix x = sample(e, seed, t);
        Matrix power = Matrix::Identity(d, d);
        for (int k = 0; k < p; ++k) power = (power * x).eval();
        values[t] = power.trace().real() / static_cast<double>(d);
    }
    return SampleStats::from_values(std::move(values), seed);
}

/// Eigenvalue histogram pooled over trials.
struct Histogram {
    std::vector<double> edges;   // bins + 1
    std::vector<double> counts;  // normalized to unit mass
    int samples = 0;
};

inline Histogram esd(const CoefficientEnsemble& e, int trials, std::uint64_t seed, int bins,
                     double lo, double hi) {
    validate(e);
    require_selfadjoint(e, "esd");
    Histogram h;
    h.edges.resize(bins + 1);
    h.counts.assign(bins, 0.0);
    const double step = (hi - lo) / bins;
    for (int b = 0; b <= bins; ++b) h.edges[b] = lo + b * step;
    for (int t = 0; t < trials; ++t) {
        RealVector ev = sample_eigenvalues(e, seed, t);
        for (Index i = 0; i < ev.size(); ++i) {
            int b = static_cast<int>(std::floor((ev(i) - lo) / step));
            if (b >= 0 && b < bins) h.counts[b] += 1.0;
            ++h.samples;
        }
    }
    if (h.samples > 0)
        for (double& c : h.counts) c /= (h.samples * step);
    return h;
}

/// Kolmogorov distance between the pooled empirical spectral distribution
/// and a reference CDF.
inline double esd_kolmogorov(const CoefficientEnsemble& e, int trials, std::uint64_t seed,
                             const std::function<double(double)>& reference_cdf) {
    std::vector<double> eigs;
    for (int t = 0; t < trials; ++t) {
        RealVector ev = sample_eigenvalues(e, seed, t);
        for (Index i = 0; i < ev.size(); ++i) eigs.push_back(ev(i));
    }
    std::sort(eigs.begin(), eigs.end());
    const double n = static_cast<double>(eigs.size());
    double dist = 0;
    for (std::size_t k = 0; k < eigs.size(); ++k) {
        double f = reference_cdf(eigs[k]);
        dist = std::max(dist, std::abs((k + 1) / n - f));
        dist = std::max(dist, std::abs(k / n - f));
    }
    return dist;
}

/// The rectangular block of a sampled padded model.
inline Matrix sample_rect(const CoefficientEnsemble& e, std::uint64_t seed, std::uint64_t trial) {
    if (!e.meta || !e.meta->rect) throw Error("sample_rect: ensemble has no rectangular shape");
    Matrix x = sample(e, seed, trial);
    return x.topLeftCorner(e.meta->rect->rows, e.meta->rect->cols);
}

/// E[X X^*] of a rectangular model, exact from coefficients or profile.
inline Matrix expected_xxs(const CoefficientEnsemble& e) {
    if (!e.meta || !e.meta->rect) throw Error("expected_xxs: ensemble has no rectangular shape");
    const auto rect = *e.meta->rect;
    if (has_rect_profile(e)) {
        RealVector row = e.meta->profile->topLeftCorner(rect.rows, rect.cols).rowwise().sum();
        return row.cast<Complex>().asDiagonal();
    }
    Matrix out = Matrix::Zero(rect.rows, rect.rows);
    for (const Matrix& a : e.coeffs) {
        Matrix ar = a.topLeftCorner(rect.rows, rect.cols);
        out.noalias() += ar * ar.adjoint();
    }
    return out;
}

inline Matrix expected_xsx(const CoefficientEnsemble& e) {
    if (!e.meta || !e.meta->rect) throw Error("expected_xsx: ensemble has no rectangular shape");
    const auto rect = *e.meta->rect;
    if (has_rect_profile(e)) {
        RealVector col = e.meta->profile->topLeftCorner(rect.rows, rect.cols).colwise().sum();
        return col.cast<Complex>().asDiagonal();
    }
    Matrix out = Matrix::Zero(rect.cols, rect.cols);
    for (const Matrix& a : e.coeffs) {
        Matrix ar = a.topLeftCorner(rect.rows, rect.cols);
        out.noalias() += ar.adjoint() * ar;
    }
    return out;
}

/// Empirical ||X X^* - E[X X^*]|| over trials.
inline SampleStats scv_stats(const CoefficientEnsemble& e, int trials, std::uint64_t seed) {
    Matrix exx = expected_xxs(e);
    std::vector<double> values(trials);
    for (int t = 0; t < trials; ++t) {
        Matrix x = sample_rect(e, seed, t);
        values[t] = op_norm_sa(x * x.adjoint() - exx);
    }
    return SampleStats::from_values(std::move(values), seed);
}

/// Empirical smallest singular value over trials.
inline SampleStats smin_stats(const CoefficientEnsemble& e, int trials, std::uint64_t seed) {
    std::vector<double> values(trials);
    for (int t = 0; t < trials; ++t) {
        Matrix x = sample_rect(e, seed, t);
        Matrix gram = x.rows() >= x.cols() ? Matrix(x.adjoint() * x) : Matrix(x * x.adjoint());
        RealVector lam = eigenvalues_sa(gram);
        values[t] = std::sqrt(std::max(0.0, lam(0)));
    }
    return SampleStats::from_values(std::move(values), seed);
}

/// One row per (N, word) of the asymptotic-freeness experiment.
struct FreenessRow {
    Index n_param = 0;
    Index dim = 0;
    Word word;
    double empirical = 0.0;
    double std_error = 0.0;
    double target = 0.0;
    double v_diagnostic = 0.0;  // v(H) (log d)^{3/2}
};

using FreenessTable = std::vector<FreenessRow>;

/// For each N in the schedule, draws m independent samples of the family
/// model and averages tr of each word of colors in [m]; targets come from
/// tau_monomial. The diagnostic column reports v(H) (log d)^{3/2}.
inline FreenessTable freeness_experiment(
    const std::function<CoefficientEnsemble(Index)>& family, const std::vector<Word>& words,
    const std::vector<Index>& n_schedule, int trials, std::uint64_t seed) {
    FreenessTable table;
    int m = 0;
    for (const Word& w : words)
        for (int c : w) m = std::max(m, c);
    if (m < 1) throw Error("freeness_experiment: words must use colors >= 1");

    for (Index n_param : n_schedule) {
        CoefficientEnsemble model = family(n_param);
        validate(model);
        require_selfadjoint(model, "freeness_experiment");
        const Index d = model.dim();
        const double v_diag = v(model) * std::pow(std::log(static_cast<double>(d)), 1.5);
        std::vector<std::vector<double>> word_values(words.size(), std::vector<double>(trials));
        for (int t = 0; t < trials; ++t) {
            std::vector<Matrix> h;
            h.reserve(m);
            for (int k = 0; k < m; ++k)
                h.push_back(sample(model,
                                   seed + 7919ull * (k + 1) +
                                       104729ull * static_cast<std::uint64_t>(n_param),
                                   static_cast<std::uint64_t>(t)));
            for (std::size_t wi = 0; wi < words.size(); ++wi) {
                Matrix prod = Matrix::Identity(d, d);
                for (int c : words[wi]) prod = (prod * h[c - 1]).eval();
                word_values[wi][t] = prod.trace().real() / static_cast<double>(d);
            }
        }
        for (std::size_t wi = 0; wi < words.size(); ++wi) {
            SampleStats stats = SampleStats::from_values(word_values[wi], seed);
            FreenessRow row;
            row.n_param = n_param;
            row.dim = d;
            row.word = words[wi];
            row.empirical = stats.mean;
            row.std_error = stats.std_error;
            row.target = static_cast<double>(tau_monomial(words[wi]));
            row.v_diagnostic = v_diag;
            table.push_back(std::move(row));
        }
    }
    return table;
}

}  // namespace freematrix
