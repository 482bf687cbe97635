#pragma once

// The spectral-regularized GOF statistic and the machinery that makes its
// permutation distribution cheap.
//
// With (l_i, a_i) the eigenpairs of K_NN/N and G = sum_i l_i^-1 g(l_i) a_i a_i^T,
// every RKHS inner product <g(L_{K,D}) K_s, K_t> equals (1/N) k_sN^T G k_tN.
// Stacking x and y into the pooled sample u gives the pooled product
// H = (1/N) K_uN G K_uN^T, and the statistic is a fixed linear functional of
// H restricted to the (x, y) labelling. Writing H = F diag(w) F^T with
// F = K_uN V also lets one eigendecomposition serve many filters at once.

#include "srgof/core.hpp"
#include "srgof/filters.hpp"
#include "srgof/kernels.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace srgof {

// ============================================================================
// EIGENSYSTEM
// ============================================================================

inline constexpr double kSymmetryTolerance = 1e-10;

struct EigenSystem {
    Vector eigenvalues;   // descending, negatives clamped to zero
    Matrix eigenvectors;  // orthonormal columns
    std::size_t source_size = 0;
};

inline double max_asymmetry(const Matrix& a) {
    return (a - a.transpose()).cwiseAbs().maxCoeff();
}

// Eigenpairs of a symmetric PSD matrix, sorted descending. The input is
// symmetrized as (A + A^T)/2 before the solver sees it.
inline EigenSystem eigendecompose_symmetric(const Matrix& a, std::size_t source_size) {
    require_input(a.rows() == a.cols(), "eigendecompose: matrix must be square");
    require_input(a.rows() >= 1, "eigendecompose: empty matrix");
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    require_input(max_asymmetry(a) <= kSymmetryTolerance * scale, "eigendecompose: matrix is not symmetric");
    const Matrix sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    ensure(solver.info() == Eigen::Success, "eigendecompose: symmetric eigensolver failed");
    const Eigen::Index n = a.rows();
    EigenSystem out;
    out.source_size = source_size;
    out.eigenvalues.resize(n);
    out.eigenvectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.eigenvalues(i) = std::max(solver.eigenvalues()(n - 1 - i), 0.0);
        out.eigenvectors.col(i) = solver.eigenvectors().col(n - 1 - i);
    }
    return out;
}

// Eigensystem of K_NN / N.
inline EigenSystem eigendecompose_reference(const Matrix& k_nn) {
    require_input(k_nn.rows() >= 2, "eigendecompose_reference: need N >= 2");
    const auto n = static_cast<std::size_t>(k_nn.rows());
    return eigendecompose_symmetric(k_nn / static_cast<double>(n), n);
}

// G = V diag(g(l)/l) V^T.
inline Matrix g_matrix(const EigenSystem& eig, const FilterSpec& filter) {
    const auto diag = g_matrix_diagonal(filter, {eig.eigenvalues.data(), static_cast<std::size_t>(eig.eigenvalues.size())});
    const Eigen::Map<const Vector> d(diag.data(), static_cast<Eigen::Index>(diag.size()));
    return eig.eigenvectors * d.asDiagonal() * eig.eigenvectors.transpose();
}

// ============================================================================
// THREE-TERM U-STATISTIC OVER A POOLED MATRIX
// ============================================================================

inline void check_sizes(std::size_t n, std::size_t m) {
    if (n < 2 || m < 2) {
        throw InputError("statistic needs n >= 2 and m >= 2 (got n=" + std::to_string(n) +
                         ", m=" + std::to_string(m) + ")");
    }
}

// Block sums of a symmetric pooled matrix S for one labelling: `xx` is the
// sum of S over X x X, `trace_x` its diagonal part, `row_x` the sum of the
// row sums of S over X.
struct BlockSums {
    double xx = 0.0;
    double trace_x = 0.0;
    double row_x = 0.0;
};

// Totals of S that do not depend on the labelling.
struct PooledTotals {
    std::vector<double> row_sums;
    double total = 0.0;
    double trace = 0.0;

    static PooledTotals of(const Matrix& s) {
        PooledTotals t;
        t.row_sums.resize(static_cast<std::size_t>(s.rows()));
        for (Eigen::Index i = 0; i < s.rows(); ++i) {
            t.row_sums[static_cast<std::size_t>(i)] = s.col(i).sum();
            t.total += t.row_sums[static_cast<std::size_t>(i)];
            t.trace += s(i, i);
        }
        return t;
    }
};

// S is symmetric, so column access equals row access and stays contiguous.
inline BlockSums block_sums(const Matrix& s, const PooledTotals& totals, std::span<const std::uint32_t> x_idx) {
    BlockSums b;
    const double* base = s.data();
    const auto stride = static_cast<std::size_t>(s.rows());
    double off = 0.0;
    for (std::size_t i = 0; i < x_idx.size(); ++i) {
        const double* col = base + x_idx[i] * stride;
        b.trace_x += col[x_idx[i]];
        b.row_x += totals.row_sums[x_idx[i]];
        double acc = 0.0;
        for (std::size_t j = i + 1; j < x_idx.size(); ++j) acc += col[x_idx[j]];
        off += acc;
    }
    b.xx = b.trace_x + 2.0 * off;
    return b;
}

// Unbiased within/within/cross combination:
//   sum_{i!=i'} S_xx / n(n-1) + sum_{j!=j'} S_yy / m(m-1) - 2 sum S_xy / nm.
inline double u_statistic(std::size_t n, std::size_t m, const BlockSums& b, double total, double trace) {
    const double dn = static_cast<double>(n);
    const double dm = static_cast<double>(m);
    const double within_x = b.xx - b.trace_x;
    const double cross = b.row_x - b.xx;
    const double within_y = (total - 2.0 * b.row_x + b.xx) - (trace - b.trace_x);
    return within_x / (dn * (dn - 1.0)) + within_y / (dm * (dm - 1.0)) - 2.0 * cross / (dn * dm);
}

// ============================================================================
// DIRECT STATISTIC
// ============================================================================

inline void check_triplet(const Sample& x, const Sample& y, const Sample& d) {
    check_sizes(static_cast<std::size_t>(x.rows()), static_cast<std::size_t>(y.rows()));
    require_input(d.rows() >= 2, "reference sample needs N >= 2");
    require_input(x.cols() == y.cols() && x.cols() == d.cols(), "samples must share the dimension");
}

// Statistic from the matrix formula, evaluated term by term.
inline double statistic_direct(const Sample& x, const Sample& y, const Sample& d, const KernelSpec& kernel,
                               const FilterSpec& filter) {
    check_triplet(x, y, d);
    const Matrix k_nn = gram_matrix(kernel, d);
    const EigenSystem eig = eigendecompose_reference(k_nn);
    const Matrix g = g_matrix(eig, filter);
    const Matrix k_xn = gram_matrix(kernel, x, d);
    const Matrix k_yn = gram_matrix(kernel, y, d);

    const double dn = static_cast<double>(x.rows());
    const double dm = static_cast<double>(y.rows());
    const double big_n = static_cast<double>(d.rows());

    const Vector a = k_xn.transpose() * Vector::Ones(x.rows());
    const Vector b = k_yn.transpose() * Vector::Ones(y.rows());
    const double quad_x = a.dot(g * a);
    const double quad_y = b.dot(g * b);
    const double cross = a.dot(g * b);
    const double trace_x = (k_xn * g).cwiseProduct(k_xn).sum();
    const double trace_y = (k_yn * g).cwiseProduct(k_yn).sum();

    return (quad_x - trace_x) / (dn * (dn - 1.0) * big_n) + (quad_y - trace_y) / (dm * (dm - 1.0) * big_n) -
           2.0 * cross / (dn * dm * big_n);
}

// ============================================================================
// POOLED PRODUCT (dense permutation path)
// ============================================================================

inline Sample stack_rows(const Sample& x, const Sample& y) {
    require_input(x.cols() == y.cols(), "samples must share the dimension");
    Sample u(x.rows() + y.rows(), x.cols());
    u.topRows(x.rows()) = x;
    u.bottomRows(y.rows()) = y;
    return u;
}

struct PooledKernelProduct {
    Matrix h;  // (n+m) x (n+m), symmetric
    std::size_t n = 0;
    std::size_t m = 0;
    double lambda = 0.0;
    FilterFamily filter = FilterFamily::tikhonov;
    PooledTotals totals;
};

inline PooledKernelProduct build_pooled_product(const Sample& x, const Sample& y, const Sample& d,
                                                const KernelSpec& kernel, const FilterSpec& filter) {
    check_triplet(x, y, d);
    const EigenSystem eig = eigendecompose_reference(gram_matrix(kernel, d));
    const Matrix g = g_matrix(eig, filter);
    const Matrix k_un = gram_matrix(kernel, stack_rows(x, y), d);
    PooledKernelProduct out;
    Matrix h = k_un * g * k_un.transpose() / static_cast<double>(d.rows());
    out.h = 0.5 * (h + h.transpose());
    out.n = static_cast<std::size_t>(x.rows());
    out.m = static_cast<std::size_t>(y.rows());
    out.lambda = filter.lambda;
    out.filter = filter.family;
    out.totals = PooledTotals::of(out.h);
    return out;
}

inline void check_permutation(std::span<const std::uint32_t> perm, std::size_t size) {
    require_input(perm.size() == size, "permutation has length " + std::to_string(perm.size()) + ", expected " +
                                           std::to_string(size));
    std::vector<char> seen(size, 0);
    for (auto v : perm) {
        require_input(v < size && !seen[v], "permutation is not a bijection");
        seen[v] = 1;
    }
}

// First n permuted indices form the x-block. Cost O(n^2).
inline double statistic_from_product_unchecked(const PooledKernelProduct& p, std::span<const std::uint32_t> perm) {
    const BlockSums b = block_sums(p.h, p.totals, perm.first(p.n));
    return u_statistic(p.n, p.m, b, p.totals.total, p.totals.trace);
}

inline double statistic_from_product(const PooledKernelProduct& p, std::span<const std::uint32_t> perm) {
    check_permutation(perm, p.n + p.m);
    return statistic_from_product_unchecked(p, perm);
}

inline std::vector<std::uint32_t> identity_permutation(std::size_t size) {
    std::vector<std::uint32_t> p(size);
    for (std::size_t i = 0; i < size; ++i) p[i] = static_cast<std::uint32_t>(i);
    return p;
}

// ============================================================================
// SPECTRAL PROJECTION (factored permutation path)
// ============================================================================

// H = F diag(w) F^T where column i of F is K_uN times the i-th coefficient
// vector and w_i = g(l_i) / (l_i N). Both the reference statistic and the
// covariance-operator comparator fit this form.
struct SpectralProjection {
    Vector eigenvalues;
    Sample features;  // (n+m) x r, row-major so one pooled point is contiguous
    std::size_t reference_size = 0;
    std::size_t n = 0;
    std::size_t m = 0;
    Vector feature_totals;   // F^T 1
    Vector feature_squares;  // column sums of F.^2

    Vector weights(const FilterSpec& filter) const {
        const auto diag = g_matrix_diagonal(filter, {eigenvalues.data(), static_cast<std::size_t>(eigenvalues.size())});
        Vector w(static_cast<Eigen::Index>(diag.size()));
        for (std::size_t i = 0; i < diag.size(); ++i) {
            w(static_cast<Eigen::Index>(i)) = diag[i] / static_cast<double>(reference_size);
        }
        return w;
    }

    void finish() {
        feature_totals = features.colwise().sum().transpose();
        feature_squares = features.cwiseAbs2().colwise().sum().transpose();
    }
};

// Projection for the reference-operator statistic.
inline SpectralProjection project_reference(const Sample& x, const Sample& y, const Sample& d,
                                            const KernelSpec& kernel) {
    check_triplet(x, y, d);
    const EigenSystem eig = eigendecompose_reference(gram_matrix(kernel, d));
    SpectralProjection p;
    p.eigenvalues = eig.eigenvalues;
    p.features = gram_matrix(kernel, stack_rows(x, y), d) * eig.eigenvectors;
    p.reference_size = static_cast<std::size_t>(d.rows());
    p.n = static_cast<std::size_t>(x.rows());
    p.m = static_cast<std::size_t>(y.rows());
    p.finish();
    return p;
}

// Projection for the centered covariance-operator comparator: eigenpairs of
// C K C / N' with C = I - 11^T/N', and features K_uN C B.
inline SpectralProjection project_centered(const Sample& x, const Sample& y, const Sample& d_op,
                                           const KernelSpec& kernel) {
    check_triplet(x, y, d_op);
    const Eigen::Index big_n = d_op.rows();
    const Matrix k = gram_matrix(kernel, d_op);
    const Matrix centering = Matrix::Identity(big_n, big_n) - Matrix::Constant(big_n, big_n, 1.0 / static_cast<double>(big_n));
    const Matrix centered = centering * k * centering;
    const EigenSystem eig = eigendecompose_symmetric(centered / static_cast<double>(big_n), static_cast<std::size_t>(big_n));
    SpectralProjection p;
    p.eigenvalues = eig.eigenvalues;
    p.features = gram_matrix(kernel, stack_rows(x, y), d_op) * (centering * eig.eigenvectors);
    p.reference_size = static_cast<std::size_t>(big_n);
    p.n = static_cast<std::size_t>(x.rows());
    p.m = static_cast<std::size_t>(y.rows());
    p.finish();
    return p;
}

// Per-labelling sufficient statistics of the factored form: rows of `sums`
// hold sum_{a in X} F_a and rows of `squares` hold sum_{a in X} F_a.^2.
struct ProjectedLabellings {
    Matrix sums;     // labellings x r
    Matrix squares;  // labellings x r
};

inline ProjectedLabellings project_labellings(const SpectralProjection& p,
                                              const std::vector<std::vector<std::uint32_t>>& perms) {
    const auto r = p.features.cols();
    ProjectedLabellings out{Matrix::Zero(static_cast<Eigen::Index>(perms.size()), r),
                            Matrix::Zero(static_cast<Eigen::Index>(perms.size()), r)};
    Vector s(r), q(r);
    for (std::size_t b = 0; b < perms.size(); ++b) {
        s.setZero();
        q.setZero();
        for (std::size_t i = 0; i < p.n; ++i) {
            const auto row = p.features.row(perms[b][i]);
            s += row.transpose();
            q += row.cwiseAbs2().transpose();
        }
        out.sums.row(static_cast<Eigen::Index>(b)) = s.transpose();
        out.squares.row(static_cast<Eigen::Index>(b)) = q.transpose();
    }
    return out;
}

// Statistic for every labelling at one weight vector.
inline std::vector<double> labelling_statistics(const SpectralProjection& p, const ProjectedLabellings& l,
                                                const Vector& w) {
    const double total = w.dot(p.feature_totals.cwiseAbs2());
    const double trace = w.dot(p.feature_squares);
    const Vector xx = l.sums.cwiseAbs2() * w;
    const Vector row_x = l.sums * w.cwiseProduct(p.feature_totals);
    const Vector trace_x = l.squares * w;
    std::vector<double> out(static_cast<std::size_t>(l.sums.rows()));
    for (Eigen::Index b = 0; b < l.sums.rows(); ++b) {
        out[static_cast<std::size_t>(b)] = u_statistic(p.n, p.m, {xx(b), trace_x(b), row_x(b)}, total, trace);
    }
    return out;
}

// Dense H from a projection; mainly for cross-checking the two paths.
inline Matrix pooled_matrix(const SpectralProjection& p, const Vector& w) {
    const Matrix f = p.features;
    return f * w.asDiagonal() * f.transpose();
}

// ============================================================================
// COMPARATOR AND BASELINE STATISTICS
// ============================================================================

// Comparator built on the centered covariance operator of an independent
// operator-estimation sample, with the same eigenvalue floor policy.
inline double hagrass_statistic(const Sample& x, const Sample& y, const Sample& d_op, const KernelSpec& kernel,
                                const FilterSpec& filter) {
    const SpectralProjection p = project_centered(x, y, d_op, kernel);
    const Vector w = p.weights(filter);
    const auto ident = identity_permutation(p.n + p.m);
    const ProjectedLabellings l = project_labellings(p, {ident});
    return labelling_statistics(p, l, w).front();
}

// Unbiased MMD^2 between the empirical sample and a known null embedding.
inline double mmd_gof_unbiased(const Sample& x, const std::function<double(Point)>& mu0_at, double mu0_norm_sq,
                               const std::function<double(Point, Point)>& kernel) {
    const Eigen::Index n = x.rows();
    require_input(n >= 2, "mmd_gof_unbiased: need n >= 2");
    double within = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) within += kernel(row_of(x, i), row_of(x, j));
    }
    double embed = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) embed += mu0_at(row_of(x, i));
    const double dn = static_cast<double>(n);
    return 2.0 * within / (dn * (dn - 1.0)) - 2.0 * embed / dn + mu0_norm_sq;
}

inline double mmd_gof_unbiased(const Sample& x, const KernelSpec& kernel, const GaussianNullEmbedding& null) {
    require_config(kernel.family == KernelFamily::gaussian, "closed-form null embedding needs the gaussian kernel");
    return mmd_gof_unbiased(
        x, [&](Point p) { return null.at(p); }, null.norm_sq(),
        [&](Point a, Point b) { return eval_gaussian(a, b, kernel.bandwidth); });
}

// Pairwise Euclidean distances of one sample.
inline Matrix distance_matrix(const Sample& s) {
    Matrix out = squared_distance_matrix(s);
    return out.cwiseSqrt();
}

// V-statistic energy distance from a pooled distance matrix and a labelling.
inline double energy_from_blocks(std::size_t n, std::size_t m, const BlockSums& b, double total) {
    const double dn = static_cast<double>(n);
    const double dm = static_cast<double>(m);
    const double cross = b.row_x - b.xx;
    const double yy = total - 2.0 * b.row_x + b.xx;
    return 2.0 * cross / (dn * dm) - b.xx / (dn * dn) - yy / (dm * dm);
}

inline double energy_statistic(const Sample& x, const Sample& y) {
    require_input(x.rows() >= 1 && y.rows() >= 1, "energy statistic: empty sample");
    require_input(x.cols() == y.cols(), "energy statistic: dimension mismatch");
    const Matrix dist = distance_matrix(stack_rows(x, y));
    const PooledTotals totals = PooledTotals::of(dist);
    const auto ident = identity_permutation(static_cast<std::size_t>(x.rows() + y.rows()));
    const BlockSums b = block_sums(dist, totals, std::span<const std::uint32_t>(ident).first(static_cast<std::size_t>(x.rows())));
    return energy_from_blocks(static_cast<std::size_t>(x.rows()), static_cast<std::size_t>(y.rows()), b, totals.total);
}

}  // namespace srgof
