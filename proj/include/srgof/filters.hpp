#pragma once

// Spectral filters g_lambda: regularized surrogates of x -> 1/x applied to
// the eigenvalues of the scaled reference Gram matrix.

#include "srgof/core.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace srgof {

enum class FilterFamily { tikhonov, cutoff, landweber };

inline std::string to_string(FilterFamily family) {
    switch (family) {
        case FilterFamily::tikhonov: return "tikhonov";
        case FilterFamily::cutoff: return "cutoff";
        case FilterFamily::landweber: return "landweber";
    }
    return "?";
}

inline FilterFamily parse_filter_family(const std::string& name) {
    if (name == "tikhonov") return FilterFamily::tikhonov;
    if (name == "cutoff") return FilterFamily::cutoff;
    if (name == "landweber") return FilterFamily::landweber;
    throw ConfigError("unknown filter '" + name + "' (expected tikhonov|cutoff|landweber)");
}

inline constexpr double kDefaultEigFloor = 1e-10;
inline constexpr double kLandweberSpectrumSlack = 1e-12;

struct FilterSpec {
    FilterFamily family = FilterFamily::tikhonov;
    double lambda = 1e-2;
    double eig_floor = kDefaultEigFloor;  // relative to the largest eigenvalue

    // Uniform constant with sup|g(x)| <= b/lambda and sup|g(x) x| <= b on [0,1].
    double b() const { return 1.0; }

    // Landweber iteration count, floor(1/lambda) but at least one step.
    long long landweber_steps() const {
        return std::max<long long>(1, static_cast<long long>(std::floor(1.0 / lambda)));
    }

    void validate() const {
        require_config(lambda > 0.0 && std::isfinite(lambda), "lambda must be positive, got " + std::to_string(lambda));
        // Beyond one step the Landweber filter breaks sup|g| <= b/lambda.
        require_config(family != FilterFamily::landweber || lambda <= 1.0,
                       "landweber lambda must lie in (0,1], got " + std::to_string(lambda));
        require_config(eig_floor >= 0.0, "eig_floor must be nonnegative");
    }
};

// g_lambda(x) for x >= 0.
inline double filter_value(const FilterSpec& spec, double x) {
    require_input(x >= 0.0, "filter_value: eigenvalue must be nonnegative");
    switch (spec.family) {
        case FilterFamily::tikhonov:
            return 1.0 / (x + spec.lambda);
        case FilterFamily::cutoff:
            return x >= spec.lambda ? 1.0 / x : 0.0;
        case FilterFamily::landweber: {
            if (x > 1.0 + kLandweberSpectrumSlack) {
                throw InputError("landweber filter: eigenvalue " + std::to_string(x) +
                                 " outside [0,1]");
            }
            const auto t = static_cast<double>(spec.landweber_steps());
            if (x == 0.0) return t;
            // (1 - (1-x)^t) / x with expm1/log1p so small x keeps full precision.
            const double x_eff = std::min(x, 1.0);
            if (x_eff == 1.0) return 1.0;
            return -std::expm1(t * std::log1p(-x_eff)) / x_eff;
        }
    }
    return 0.0;
}

// Diagonal of G in the eigenbasis: entry i is g(l_i)/l_i for eigenvalues above
// the relative floor and zero otherwise. Tiny negative eigenvalues are clamped.
inline std::vector<double> g_matrix_diagonal(const FilterSpec& spec, std::span<const double> eigenvalues) {
    spec.validate();
    double largest = 0.0;
    for (double v : eigenvalues) largest = std::max(largest, v);
    if (!(largest > 0.0)) throw DegenerateError("degenerate spectrum: no positive eigenvalue");
    const double floor = spec.eig_floor * largest;
    std::vector<double> out(eigenvalues.size(), 0.0);
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
        const double l = std::max(eigenvalues[i], 0.0);
        if (l > floor && l > 0.0) out[i] = filter_value(spec, l) / l;
    }
    return out;
}

}  // namespace srgof
