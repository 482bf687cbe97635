#pragma once

// Positive-definite kernels, Gram assembly and bandwidth selection.

#include "srgof/core.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace srgof {

enum class KernelFamily { gaussian, sobolev };

inline std::string to_string(KernelFamily family) {
    return family == KernelFamily::gaussian ? "gaussian" : "sobolev";
}

inline KernelFamily parse_kernel_family(const std::string& name) {
    if (name == "gaussian") return KernelFamily::gaussian;
    if (name == "sobolev") return KernelFamily::sobolev;
    throw ConfigError("unknown kernel '" + name + "' (expected gaussian|sobolev)");
}

// Tolerance for coordinates that drift just outside the unit cube.
inline constexpr double kCubeTolerance = 1e-12;

struct KernelSpec {
    KernelFamily family = KernelFamily::gaussian;
    double bandwidth = 1.0;  // gaussian only: K(x,y) = exp(-|x-y|^2 / (2h))
    std::size_t dimension = 1;

    // sup_x sqrt(K(x,x)); both supported kernels are bounded by one.
    double kappa() const { return 1.0; }

    static KernelSpec gaussian(double h, std::size_t d) {
        require_config(h > 0.0 && std::isfinite(h), "gaussian bandwidth must be positive");
        return {KernelFamily::gaussian, h, d};
    }
    static KernelSpec sobolev(std::size_t d) { return {KernelFamily::sobolev, 1.0, d}; }
};

using Point = std::span<const double>;

inline Point row_of(const Sample& s, Eigen::Index i) {
    return {s.data() + i * s.cols(), static_cast<std::size_t>(s.cols())};
}

inline double squared_distance(Point x, Point y) {
    double acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double diff = x[k] - y[k];
        acc += diff * diff;
    }
    return acc;
}

inline double gaussian_from_sqdist(double sqdist, double h) { return std::exp(-sqdist / (2.0 * h)); }

inline double eval_gaussian(Point x, Point y, double h) {
    require_input(x.size() == y.size(), "gaussian kernel: dimension mismatch");
    require_config(h > 0.0, "gaussian kernel: bandwidth must be positive");
    return gaussian_from_sqdist(squared_distance(x, y), h);
}

inline void check_unit_cube(Point x) {
    for (double v : x) {
        if (!(v >= -kCubeTolerance && v <= 1.0 + kCubeTolerance)) {
            throw InputError("sobolev kernel: coordinate " + std::to_string(v) + " outside [0,1]");
        }
    }
}

// K(x,y) = prod_j min(x_j, y_j) on [0,1]^d.
inline double eval_sobolev(Point x, Point y) {
    require_input(x.size() == y.size(), "sobolev kernel: dimension mismatch");
    check_unit_cube(x);
    check_unit_cube(y);
    double acc = 1.0;
    for (std::size_t k = 0; k < x.size(); ++k) acc *= std::min(x[k], y[k]);
    return acc;
}

inline double eval_kernel(const KernelSpec& kernel, Point x, Point y) {
    return kernel.family == KernelFamily::gaussian ? eval_gaussian(x, y, kernel.bandwidth)
                                                   : eval_sobolev(x, y);
}

// ============================================================================
// GRAM MATRICES
// ============================================================================

inline void check_sample_for(const KernelSpec& kernel, const Sample& s, const char* what) {
    require_input(s.rows() > 0, std::string(what) + ": empty sample");
    if (kernel.family == KernelFamily::sobolev) {
        for (Eigen::Index i = 0; i < s.rows(); ++i) check_unit_cube(row_of(s, i));
    }
}

// Dense block [K(rows_i, cols_j)]. Every entry goes through the scalar formula,
// so gram(A, B) is the exact transpose of gram(B, A).
inline Matrix gram_matrix(const KernelSpec& kernel, const Sample& rows, const Sample& cols) {
    require_input(rows.rows() > 0 && cols.rows() > 0, "gram: empty sample");
    require_input(rows.cols() == cols.cols(), "gram: dimension mismatch");
    check_sample_for(kernel, rows, "gram rows");
    check_sample_for(kernel, cols, "gram cols");
    Matrix out(rows.rows(), cols.rows());
    const double h = kernel.bandwidth;
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        const Point x = row_of(rows, i);
        for (Eigen::Index j = 0; j < cols.rows(); ++j) {
            const Point y = row_of(cols, j);
            if (kernel.family == KernelFamily::gaussian) {
                out(i, j) = gaussian_from_sqdist(squared_distance(x, y), h);
            } else {
                double acc = 1.0;
                for (std::size_t k = 0; k < x.size(); ++k) acc *= std::min(x[k], y[k]);
                out(i, j) = acc;
            }
        }
    }
    return out;
}

// Symmetric Gram of one sample; the lower triangle mirrors the upper one.
inline Matrix gram_matrix(const KernelSpec& kernel, const Sample& s) {
    require_input(s.rows() > 0, "gram: empty sample");
    check_sample_for(kernel, s, "gram");
    Matrix out(s.rows(), s.rows());
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        const Point x = row_of(s, i);
        for (Eigen::Index j = i; j < s.rows(); ++j) {
            const Point y = row_of(s, j);
            double v;
            if (kernel.family == KernelFamily::gaussian) {
                v = gaussian_from_sqdist(squared_distance(x, y), kernel.bandwidth);
            } else {
                v = 1.0;
                for (std::size_t k = 0; k < x.size(); ++k) v *= std::min(x[k], y[k]);
            }
            out(i, j) = v;
            out(j, i) = v;
        }
    }
    return out;
}

struct GramBlock {
    std::string rows_from;
    std::string cols_from;
    Matrix values;
};

inline GramBlock gram(const KernelSpec& kernel, const Sample& rows, const Sample& cols,
                      std::string rows_label = "rows", std::string cols_label = "cols") {
    if (&rows == &cols) {
        return {std::move(rows_label), std::move(cols_label), gram_matrix(kernel, rows)};
    }
    return {std::move(rows_label), std::move(cols_label), gram_matrix(kernel, rows, cols)};
}

// Pairwise squared distances of one sample.
inline Matrix squared_distance_matrix(const Sample& s) {
    Matrix out(s.rows(), s.rows());
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        out(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < s.rows(); ++j) {
            const double v = squared_distance(row_of(s, i), row_of(s, j));
            out(i, j) = v;
            out(j, i) = v;
        }
    }
    return out;
}

// ============================================================================
// BANDWIDTH
// ============================================================================

// Median of squared distances over unordered pairs of distinct rows. An even
// number of pairs averages the two central order statistics.
inline double median_heuristic(const Sample& pool) {
    require_input(pool.rows() >= 2, "median heuristic: need at least two rows");
    std::vector<double> d2;
    d2.reserve(static_cast<std::size_t>(pool.rows() * (pool.rows() - 1) / 2));
    for (Eigen::Index i = 0; i < pool.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < pool.rows(); ++j) {
            const double v = squared_distance(row_of(pool, i), row_of(pool, j));
            if (v > 0.0) d2.push_back(v);
        }
    }
    if (d2.empty()) throw DegenerateError("median heuristic: all rows are identical");
    const std::size_t mid = d2.size() / 2;
    std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(mid), d2.end());
    const double upper = d2[mid];
    if (d2.size() % 2 == 1) return upper;
    const double lower = *std::max_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

// ============================================================================
// NULL EMBEDDINGS
// ============================================================================

// Mean embedding of N(0, I_d) under the Gaussian kernel with bandwidth h.
struct GaussianNullEmbedding {
    double h;
    std::size_t d;

    double at(Point x) const {
        double sq = 0.0;
        for (double v : x) sq += v * v;
        return std::pow(h / (h + 1.0), 0.5 * static_cast<double>(d)) * std::exp(-sq / (2.0 * (h + 1.0)));
    }
    double norm_sq() const { return std::pow(h / (h + 2.0), 0.5 * static_cast<double>(d)); }
};

inline std::pair<double, double> gaussian_null_embedding(double h, std::size_t d, Point x) {
    require_config(h > 0.0, "gaussian_null_embedding: bandwidth must be positive");
    require_input(x.size() == d, "gaussian_null_embedding: dimension mismatch");
    const GaussianNullEmbedding e{h, d};
    return {e.at(x), e.norm_sq()};
}

}  // namespace srgof
