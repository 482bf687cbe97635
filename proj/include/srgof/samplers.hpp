#pragma once

// Seedable samplers for the experiment distribution families.

#include "srgof/core.hpp"
#include "srgof/rng.hpp"

#include <cmath>
#include <cstdint>
#include <string>

namespace srgof {

enum class DistributionFamily { gaussian_mean, gaussian_var, uniform_scale, vmf, sobolev_density };

inline std::string to_string(DistributionFamily f) {
    switch (f) {
        case DistributionFamily::gaussian_mean: return "gaussian_mean";
        case DistributionFamily::gaussian_var: return "gaussian_var";
        case DistributionFamily::uniform_scale: return "uniform_scale";
        case DistributionFamily::vmf: return "vmf";
        case DistributionFamily::sobolev_density: return "sobolev_density";
    }
    return "?";
}

inline DistributionFamily parse_distribution_family(const std::string& name) {
    if (name == "gaussian_mean") return DistributionFamily::gaussian_mean;
    if (name == "gaussian_var") return DistributionFamily::gaussian_var;
    if (name == "uniform_scale") return DistributionFamily::uniform_scale;
    if (name == "vmf") return DistributionFamily::vmf;
    if (name == "sobolev_density") return DistributionFamily::sobolev_density;
    throw ConfigError("unknown distribution family '" + name + "'");
}

// Parameter value under the null hypothesis.
inline double null_parameter(DistributionFamily f) {
    switch (f) {
        case DistributionFamily::gaussian_mean: return 0.0;
        case DistributionFamily::gaussian_var: return 1.0;
        case DistributionFamily::uniform_scale: return 1.0;
        case DistributionFamily::vmf: return 0.0;
        case DistributionFamily::sobolev_density: return 0.0;
    }
    return 0.0;
}

struct DistributionSpec {
    DistributionFamily family = DistributionFamily::gaussian_mean;
    std::size_t dimension = 1;
    double theta = 0.0;  // shift magnitude, sigma, support theta, vMF kappa, or c

    double null_value() const { return null_parameter(family); }
    DistributionSpec null() const { return {family, dimension, null_value()}; }

    void validate() const {
        require_config(dimension >= 1, "dimension must be positive");
        require_config(std::isfinite(theta), "theta must be finite");
        switch (family) {
            case DistributionFamily::gaussian_mean: break;
            case DistributionFamily::gaussian_var: require_config(theta > 0.0, "gaussian_var: sigma must be positive"); break;
            case DistributionFamily::uniform_scale: require_config(theta > 0.0, "uniform_scale: theta must be positive"); break;
            case DistributionFamily::vmf:
                require_config(theta >= 0.0, "vmf: concentration must be nonnegative");
                require_config(dimension >= 2, "vmf: dimension must be at least 2");
                break;
            case DistributionFamily::sobolev_density:
                require_config(std::abs(theta) <= 1.0, "sobolev_density: |c| must be at most 1");
                break;
        }
    }
};

// ============================================================================
// SOBOLEV DENSITY FAMILY
// ============================================================================

// Per-coordinate density 1 + m(x), m(x) = 2cx on [0, 0.5) and 2c(x-1) on [0.5, 1].
inline double sobolev_perturbation(double c, double x) { return x < 0.5 ? 2.0 * c * x : 2.0 * c * (x - 1.0); }

inline double sobolev_density_pdf(double c, const double* x, std::size_t d) {
    require_config(std::abs(c) <= 1.0, "sobolev density: |c| must be at most 1");
    double p = 1.0;
    for (std::size_t j = 0; j < d; ++j) {
        require_input(x[j] >= 0.0 && x[j] <= 1.0, "sobolev density: point outside the unit cube");
        p *= 1.0 + sobolev_perturbation(c, x[j]);
    }
    return p;
}

// F(x) = x + c x^2 on [0, 0.5) and x + c (x-1)^2 on [0.5, 1].
inline double sobolev_cdf(double c, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return x < 0.5 ? x + c * x * x : x + c * (x - 1.0) * (x - 1.0);
}

// Root of F(x) = u in the branch that contains it, via the cancellation-free
// form of the quadratic formula.
inline double inverse_cdf_sobolev(double c, double u) {
    require_config(std::abs(c) <= 1.0, "sobolev inverse cdf: |c| must be at most 1");
    require_input(u >= 0.0 && u <= 1.0, "sobolev inverse cdf: u must lie in [0,1]");
    if (c == 0.0) return u;
    const double split = 0.5 + 0.25 * c;
    if (u < split) {
        const double disc = 1.0 + 4.0 * c * u;
        ensure(disc >= 0.0, "sobolev inverse cdf: negative discriminant");
        return 2.0 * u / (1.0 + std::sqrt(disc));
    }
    // y = 1 - x solves c y^2 - y + (1 - u) = 0 on [0, 0.5].
    const double tail = 1.0 - u;
    const double disc = 1.0 - 4.0 * c * tail;
    ensure(disc >= -1e-15, "sobolev inverse cdf: negative discriminant");
    return 1.0 - 2.0 * tail / (1.0 + std::sqrt(std::max(disc, 0.0)));
}

// ============================================================================
// SAMPLING
// ============================================================================

namespace detail {

// Wood (1994) rejection sampler on S^{d-1} around mu = 1_d / sqrt(d).
inline void sample_vmf_row(Rng& rng, double kappa, std::size_t d, double* out) {
    const double dm1 = static_cast<double>(d - 1);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    if (kappa == 0.0) {
        double norm = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            out[j] = rng.normal();
            norm += out[j] * out[j];
        }
        norm = std::sqrt(norm);
        for (std::size_t j = 0; j < d; ++j) out[j] /= norm;
        return;
    }
    const double b = dm1 / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + dm1 * dm1));
    const double x0 = (1.0 - b) / (1.0 + b);
    const double c = kappa * x0 + dm1 * std::log(1.0 - x0 * x0);
    double w;
    for (;;) {
        const double z = rng.beta(0.5 * dm1, 0.5 * dm1);
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        const double u = rng.uniform_open();
        if (kappa * w + dm1 * std::log(1.0 - x0 * w) - c >= std::log(u)) break;
    }
    // Tangent direction: a Gaussian vector with its mu-component removed.
    double along = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        out[j] = rng.normal();
        along += out[j] * inv_sqrt_d;
    }
    double norm = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        out[j] -= along * inv_sqrt_d;
        norm += out[j] * out[j];
    }
    norm = std::sqrt(norm);
    const double radial = std::sqrt(std::max(0.0, 1.0 - w * w));
    for (std::size_t j = 0; j < d; ++j) out[j] = w * inv_sqrt_d + radial * out[j] / norm;
}

}  // namespace detail

inline Sample sample(const DistributionSpec& spec, std::size_t count, Rng& rng) {
    spec.validate();
    require_config(count >= 1, "sample count must be positive");
    const std::size_t d = spec.dimension;
    Sample out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(d));
    double* data = out.data();
    switch (spec.family) {
        case DistributionFamily::gaussian_mean: {
            // Shift theta * 1_d / sqrt(d) has Euclidean length theta in every dimension.
            const double shift = spec.theta / std::sqrt(static_cast<double>(d));
            for (std::size_t i = 0; i < count * d; ++i) data[i] = rng.normal() + shift;
            break;
        }
        case DistributionFamily::gaussian_var:
            for (std::size_t i = 0; i < count * d; ++i) data[i] = spec.theta * rng.normal();
            break;
        case DistributionFamily::uniform_scale:
            for (std::size_t i = 0; i < count * d; ++i) data[i] = spec.theta * rng.uniform();
            break;
        case DistributionFamily::vmf:
            for (std::size_t i = 0; i < count; ++i) detail::sample_vmf_row(rng, spec.theta, d, data + i * d);
            break;
        case DistributionFamily::sobolev_density:
            for (std::size_t i = 0; i < count * d; ++i) data[i] = inverse_cdf_sobolev(spec.theta, rng.uniform());
            break;
    }
    return out;
}

inline Sample sample(const DistributionSpec& spec, std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    return sample(spec, count, rng);
}

}  // namespace srgof
