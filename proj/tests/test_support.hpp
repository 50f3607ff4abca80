#pragma once

// Shared generators for randomized tests. All deterministic via CounterRng.

#include <complex>
#include <vector>

#include "freematrix/ensemble.hpp"
#include "freematrix/rng.hpp"

namespace freematrix::testing {

inline Matrix random_matrix(Index d, CounterRng& rng, bool real_only = false) {
    Matrix m(d, d);
    for (Index j = 0; j < d; ++j)
        for (Index i = 0; i < d; ++i)
            m(i, j) = Complex(rng.next_normal(), real_only ? 0.0 : rng.next_normal());
    return m;
}

inline Matrix random_hermitian(Index d, CounterRng& rng, bool real_only = false) {
    Matrix m = random_matrix(d, rng, real_only);
    return ((m + m.adjoint()) / 2.0).eval();
}

inline Matrix random_pd(Index d, CounterRng& rng) {
    Matrix m = random_matrix(d, rng);
    return (m * m.adjoint() + 0.1 * Matrix::Identity(d, d)).eval();
}

inline CoefficientEnsemble random_selfadjoint_ensemble(Index d, int n, CounterRng& rng,
                                                       bool with_mean = false,
                                                       bool real_only = false) {
    CoefficientEnsemble e;
    e.a0 = with_mean ? random_hermitian(d, rng, real_only) : Matrix::Zero(d, d);
    for (int i = 0; i < n; ++i) e.coeffs.push_back(random_hermitian(d, rng, real_only));
    e.selfadjoint = true;
    return e;
}

inline CoefficientEnsemble random_general_ensemble(Index d, int n, CounterRng& rng,
                                                   bool with_mean = false) {
    CoefficientEnsemble e;
    e.a0 = with_mean ? random_matrix(d, rng) : Matrix::Zero(d, d);
    for (int i = 0; i < n; ++i) e.coeffs.push_back(random_matrix(d, rng));
    e.selfadjoint = false;
    return e;
}

}  // namespace freematrix::testing
