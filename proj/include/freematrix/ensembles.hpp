#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "freematrix/ensemble.hpp"
#include "freematrix/linalg.hpp"
#include "freematrix/params.hpp"

namespace freematrix {

/// Entrywise variance profile of a self-adjoint independent-entry model
/// X_{ij} = b_{ij} g_{ij} with g_{ji} = g_{ij}.
struct VarianceProfile {
    Index d = 0;
    RealMatrix b2;  // symmetric, entrywise >= 0

    void check() const {
        if (b2.rows() != d || b2.cols() != d) throw DimensionMismatch("profile shape mismatch");
        if ((b2 - b2.transpose()).cwiseAbs().maxCoeff() >
            1e-12 * std::max(1.0, b2.cwiseAbs().maxCoeff()))
            throw NotSymmetric("variance profile must be symmetric");
        if (b2.minCoeff() < 0) throw NegativeVariance("variance profile has negative entries");
    }
};

inline VarianceProfile flat_profile(Index d) {
    return VarianceProfile{d, RealMatrix::Constant(d, d, 1.0 / static_cast<double>(d))};
}

/// Index-set partition of [d] x [m] defining a patterned model
/// X_{jk} = scale * g_i for (j,k) in S_i.
struct PatternPartition {
    Index d = 0;
    Index m = 0;  // equals d for square patterns
    std::vector<std::vector<std::pair<Index, Index>>> blocks;
    double scale = 0.0;  // 0 means the default 1/sqrt(d)
};

namespace detail {

inline bool materialization_allowed(Index d, std::size_t n) {
    // dense coefficient storage in bytes, capped at ~1 GiB
    return 16.0 * static_cast<double>(d) * static_cast<double>(d) * static_cast<double>(n) <=
           1.0e9;
}

}  // namespace detail

/// Coefficients b_{ij} E_{ij} with E_{ii} = e_i e_i^* and
/// E_{ij} = e_i e_j^* + e_j e_i^* for i > j; zero-variance entries omitted.
/// Large models keep only the profile metadata; samplers and the solvers
/// work from the profile directly.
inline CoefficientEnsemble independent_entries(const VarianceProfile& profile) {
    profile.check();
    const Index d = profile.d;
    CoefficientEnsemble e;
    e.a0 = Matrix::Zero(d, d);
    e.selfadjoint = true;
    e.meta = ModelMeta{kKindIndependentEntries, profile.b2, std::nullopt, {}};
    std::size_t nnz = 0;
    for (Index i = 0; i < d; ++i)
        for (Index j = 0; j <= i; ++j)
            if (profile.b2(i, j) > 0) ++nnz;
    if (!detail::materialization_allowed(d, nnz)) return e;
    for (Index i = 0; i < d; ++i)
        for (Index j = 0; j <= i; ++j) {
            double b = std::sqrt(profile.b2(i, j));
            if (b == 0.0) continue;
            Matrix a = Matrix::Zero(d, d);
            a(i, j) = b;
            a(j, i) = b;
            e.coeffs.push_back(std::move(a));
        }
    return e;
}

/// Rectangular model with all entries independent: X_{jk} = b_{jk} g_{jk},
/// zero-padded to a square ensemble with (rows, cols) metadata.
inline CoefficientEnsemble independent_rectangular(const RealMatrix& b2) {
    if (b2.minCoeff() < 0) throw NegativeVariance("variance profile has negative entries");
    const Index rows = b2.rows(), cols = b2.cols();
    const Index d = std::max(rows, cols);
    RealMatrix padded = RealMatrix::Zero(d, d);
    padded.topLeftCorner(rows, cols) = b2;
    CoefficientEnsemble e;
    e.a0 = Matrix::Zero(d, d);
    e.selfadjoint = false;
    e.meta = ModelMeta{kKindIndependentRect, padded, RectShape{rows, cols}, {}};
    std::size_t nnz = 0;
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j)
            if (b2(i, j) > 0) ++nnz;
    if (!detail::materialization_allowed(d, nnz)) return e;
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) {
            if (b2(i, j) == 0.0) continue;
            Matrix a = Matrix::Zero(d, d);
            a(i, j) = std::sqrt(b2(i, j));
            e.coeffs.push_back(std::move(a));
        }
    return e;
}

/// Undirected graph given by its edge set; self-loops allowed.
struct Adjacency {
    Index d = 0;
    std::set<std::pair<Index, Index>> edges;  // normalized with first <= second

    void add_edge(Index i, Index j) {
        if (i > j) std::swap(i, j);
        edges.insert({i, j});
    }
};

inline Adjacency complete_graph_with_loops(Index d) {
    Adjacency g{d, {}};
    for (Index i = 0; i < d; ++i)
        for (Index j = i; j < d; ++j) g.edges.insert({i, j});
    return g;
}

inline Adjacency cycle_graph(Index d) {
    Adjacency g{d, {}};
    for (Index i = 0; i < d; ++i) g.add_edge(i, (i + 1) % d);
    return g;
}

/// Circulant graph with the given offsets (offset 0 adds self-loops).
inline Adjacency circulant_graph(Index d, const std::vector<Index>& offsets) {
    Adjacency g{d, {}};
    for (Index i = 0; i < d; ++i)
        for (Index off : offsets) g.add_edge(i, (i + off) % d);
    return g;
}

/// G-sparse Wigner matrix: X_{ij} = k^{-1/2} g_{ij} 1_{{i,j} in E}. The graph
/// must be k-regular; a self-loop counts once toward the degree. E[X^2] = 1
/// holds exactly.
inline CoefficientEnsemble sparse_wigner(const Adjacency& graph) {
    const Index d = graph.d;
    std::vector<Index> degree(d, 0);
    for (auto [i, j] : graph.edges) {
        if (i < 0 || j >= d) throw NotAPartition("edge endpoint out of range");
        ++degree[i];
        if (j != i) ++degree[j];
    }
    const Index k = d > 0 ? degree[0] : 0;
    for (Index i = 0; i < d; ++i)
        if (degree[i] != k)
            throw NotRegular("graph is not regular: vertex " + std::to_string(i) + " has degree " +
                             std::to_string(degree[i]) + ", expected " + std::to_string(k));
    if (k == 0) throw NotRegular("graph has no edges");
    RealMatrix b2 = RealMatrix::Zero(d, d);
    for (auto [i, j] : graph.edges) {
        b2(i, j) = 1.0 / static_cast<double>(k);
        b2(j, i) = 1.0 / static_cast<double>(k);
    }
    CoefficientEnsemble e = independent_entries(VarianceProfile{d, std::move(b2)});
    e.meta->kind = kKindIndependentEntries;  // sparse Wigner is a profile model
    e.meta->values["k"] = static_cast<double>(k);
    return e;
}

/// Patterned model from a partition of [d] x [m]: (A_i)_{jk} = scale for
/// (j,k) in S_i. Square symmetric patterns yield a self-adjoint ensemble.
inline CoefficientEnsemble pattern(const PatternPartition& part) {
    const Index d = part.d;
    const Index m = part.m > 0 ? part.m : d;
    const double scale = part.scale > 0 ? part.scale : 1.0 / std::sqrt(static_cast<double>(d));
    std::vector<bool> covered(static_cast<std::size_t>(d) * m, false);
    std::size_t total = 0;
    for (const auto& block : part.blocks) {
        for (auto [j, k] : block) {
            if (j < 0 || j >= d || k < 0 || k >= m) throw NotAPartition("pattern index out of range");
            std::size_t idx = static_cast<std::size_t>(j) * m + k;
            if (covered[idx]) throw NotAPartition("pattern blocks overlap");
            covered[idx] = true;
            ++total;
        }
    }
    if (total != static_cast<std::size_t>(d) * m)
        throw NotAPartition("pattern blocks do not cover the index set");

    const Index dim = std::max(d, m);
    bool symmetric = (d == m);
    CoefficientEnsemble e;
    e.a0 = Matrix::Zero(dim, dim);
    std::size_t max_block = 0;
    for (const auto& block : part.blocks) {
        Matrix a = Matrix::Zero(dim, dim);
        for (auto [j, k] : block) a(j, k) = scale;
        if (symmetric && selfadjoint_defect(a) > 0) symmetric = false;
        max_block = std::max(max_block, block.size());
        e.coeffs.push_back(std::move(a));
    }
    e.selfadjoint = symmetric;
    e.meta = ModelMeta{"pattern", std::nullopt,
                       d == m ? std::optional<RectShape>{} : std::optional<RectShape>{RectShape{d, m}},
                       {{"max_block", static_cast<double>(max_block)}, {"scale", scale}}};
    return e;
}

/// Toeplitz pattern: blocks are the constant diagonals j - k = c.
inline PatternPartition toeplitz_pattern(Index d) {
    PatternPartition part;
    part.d = d;
    part.m = d;
    for (Index c = -(d - 1); c <= d - 1; ++c) {
        std::vector<std::pair<Index, Index>> block;
        for (Index j = 0; j < d; ++j) {
            Index k = j - c;
            if (k >= 0 && k < d) block.emplace_back(j, k);
        }
        part.blocks.push_back(std::move(block));
    }
    return part;
}

/// Model with independent centered Gaussian columns of covariances Sigma_j.
/// Column j contributes one coefficient L_j[:, r] e_j^* per factor column of
/// Sigma_j = L_j L_j^*. Metadata records the closed-form parameters.
inline CoefficientEnsemble independent_columns(const std::vector<Matrix>& covariances) {
    if (covariances.empty()) throw DimensionMismatch("need at least one column covariance");
    const Index d = covariances.front().rows();
    const Index m = static_cast<Index>(covariances.size());
    const Index dim = std::max(d, m);
    CoefficientEnsemble e;
    e.a0 = Matrix::Zero(dim, dim);
    e.selfadjoint = false;

    Matrix sum_sigma = Matrix::Zero(d, d);
    double max_tr = 0, max_norm = 0;
    for (Index j = 0; j < m; ++j) {
        const Matrix& sig = covariances[j];
        if (sig.rows() != d || sig.cols() != d)
            throw DimensionMismatch("column covariance " + std::to_string(j) + " has wrong shape");
        if (selfadjoint_defect(sig) > 1e-10 * std::max(1.0, sig.cwiseAbs().maxCoeff()))
            throw NotPsd("column covariance " + std::to_string(j) + " is not Hermitian");
        Eigen::SelfAdjointEigenSolver<Matrix> es(sig);
        const RealVector& lam = es.eigenvalues();
        if (lam(0) < -1e-10 * std::max(1.0, lam(d - 1)))
            throw NotPsd("column covariance " + std::to_string(j) + " has eigenvalue " +
                         std::to_string(lam(0)));
        sum_sigma += sig;
        max_tr = std::max(max_tr, sig.trace().real());
        max_norm = std::max(max_norm, std::max(0.0, lam(d - 1)));
        for (Index r = 0; r < d; ++r) {
            if (lam(r) <= 1e-14 * std::max(1.0, lam(d - 1))) continue;
            Vector col = std::sqrt(lam(r)) * es.eigenvectors().col(r);
            Matrix a = Matrix::Zero(dim, dim);
            a.block(0, j, d, 1) = col;
            e.coeffs.push_back(std::move(a));
        }
    }
    e.meta = ModelMeta{"independent_columns", std::nullopt, RectShape{d, m}, {}};
    e.meta->values["norm_sum_sigma"] = lambda_max(sum_sigma);
    e.meta->values["max_tr_sigma"] = max_tr;
    e.meta->values["max_norm_sigma"] = max_norm;
    return e;
}

/// Self-adjoint m x m grid of independent copies of an r-dimensional block
/// model: independent copies above the diagonal mirrored by adjoints, and
/// independent self-adjoint copies on the diagonal. Requires a self-adjoint
/// block model.
inline CoefficientEnsemble block_iid(const CoefficientEnsemble& block, Index m) {
    validate(block);
    require_selfadjoint(block, "block_iid");
    const Index r = block.dim();
    const Index dim = r * m;
    CoefficientEnsemble e;
    e.a0 = Matrix::Zero(dim, dim);
    for (Index i = 0; i < m; ++i)
        e.a0.block(i * r, i * r, r, r) = block.a0;
    e.selfadjoint = true;
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j <= i; ++j)
            for (const Matrix& b : block.coeffs) {
                Matrix a = Matrix::Zero(dim, dim);
                if (i == j) {
                    a.block(i * r, i * r, r, r) = b;
                } else {
                    a.block(i * r, j * r, r, r) = b;
                    a.block(j * r, i * r, r, r) = b.adjoint();
                }
                e.coeffs.push_back(std::move(a));
            }
    double sig_block = sigma(block);
    double v_block = v(block);
    e.meta = ModelMeta{"block_iid", std::nullopt, std::nullopt,
                       {{"m", static_cast<double>(m)},
                        {"sqrt_m_sigma_block", std::sqrt(static_cast<double>(m)) * sig_block},
                        {"v_block", v_block}}};
    return e;
}

/// Isotropic Gaussian on the span of an orthonormal family of matrices:
/// the coefficients are the basis itself. v(X) = 1 since Cov(X) is then a
/// projection.
inline CoefficientEnsemble subspace_isotropic(const std::vector<Matrix>& basis) {
    if (basis.empty()) throw DimensionMismatch("empty basis");
    const Index d = basis.front().rows();
    for (std::size_t i = 0; i < basis.size(); ++i) {
        for (std::size_t j = i; j < basis.size(); ++j) {
            Complex ip = (basis[i].adjoint() * basis[j]).trace();
            double target = (i == j) ? 1.0 : 0.0;
            if (std::abs(ip - target) > 1e-9)
                throw NotOrthonormal("basis matrices " + std::to_string(i) + "," +
                                     std::to_string(j) + " have Tr[A_i^* A_j] = " +
                                     std::to_string(std::abs(ip)));
        }
    }
    CoefficientEnsemble e;
    e.a0 = Matrix::Zero(d, d);
    e.coeffs = basis;
    bool sa = true;
    for (const Matrix& b : basis)
        if (selfadjoint_defect(b) > kSelfAdjointTol) sa = false;
    e.selfadjoint = sa;
    e.meta = ModelMeta{"subspace", std::nullopt, std::nullopt,
                       {{"k", static_cast<double>(basis.size())}}};
    return e;
}

inline constexpr Index kTensorDimCap = 4096;

/// Descriptor of the tensorized model X^N = A_0 (x) 1 + sum A_i (x) G_i^N
/// with independent standard Wigner blocks of dimension N. Consumed by the
/// Monte Carlo samplers.
struct TensorWignerSpec {
    CoefficientEnsemble base;
    Index n_tensor = 1;

    Index dim() const { return base.dim() * n_tensor; }
};

inline TensorWignerSpec tensor_wigner(const CoefficientEnsemble& e, Index n_tensor,
                                      Index dim_cap = kTensorDimCap) {
    validate(e);
    if (n_tensor < 1) throw SizeLimitExceeded("tensor dimension must be >= 1");
    if (e.dim() * n_tensor > dim_cap)
        throw SizeLimitExceeded("tensor model dimension " + std::to_string(e.dim() * n_tensor) +
                                " exceeds cap " + std::to_string(dim_cap));
    return TensorWignerSpec{e, n_tensor};
}

}  // namespace freematrix
