#pragma once

// Critical values and complete tests: the effective-dimension bound, the
// permutation quantile, the (lambda, h)-grid union test, and the aggregated
// MMD and energy baselines.

#include "srgof/core.hpp"
#include "srgof/filters.hpp"
#include "srgof/kernels.hpp"
#include "srgof/rng.hpp"
#include "srgof/statistic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace srgof {

enum class Calibration { effective_dimension, permutation, aggregated };

inline std::string to_string(Calibration c) {
    switch (c) {
        case Calibration::effective_dimension: return "effective_dimension";
        case Calibration::permutation: return "permutation";
        case Calibration::aggregated: return "aggregated";
    }
    return "?";
}

struct Nuisance {
    double lambda = std::numeric_limits<double>::quiet_NaN();
    double bandwidth = std::numeric_limits<double>::quiet_NaN();
    std::size_t permutations = 0;
    std::size_t n = 0;
    std::size_t m = 0;
    std::size_t reference_size = 0;
    std::uint64_t seed = 0;
};

struct GofOutcome {
    double statistic = 0.0;
    double threshold = 0.0;
    bool reject = false;
    std::optional<double> p_value;
    Calibration calibration = Calibration::permutation;
    Nuisance nuisance;
};

inline void check_alpha(double alpha) {
    require_config(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1)");
}

// ============================================================================
// EFFECTIVE DIMENSION
// ============================================================================

// N_D(lambda) = Tr[(K_NN + lambda N I)^-1 K_NN] = sum_i l_i / (l_i + lambda).
inline double empirical_effective_dimension(const EigenSystem& eig, double lambda) {
    require_config(lambda > 0.0, "effective dimension: lambda must be positive");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i) {
        const double l = std::max(eig.eigenvalues(i), 0.0);
        acc += l / (l + lambda);
    }
    return acc;
}

struct EffDimCritical {
    double alpha, b, kappa;
    std::size_t n, m, reference_size;
    double lambda, effective_dimension, c_hat;
};

// 30 b / alpha * (1/(n-1) + 1/(m-1)) * (1 + 8 kappa / sqrt(N lambda) * log(24/alpha)) * sqrt(N_D)
inline double effdim_critical_value(double alpha, double b, double kappa, std::size_t n, std::size_t m,
                                    std::size_t reference_size, double lambda, double effective_dimension) {
    check_alpha(alpha);
    require_config(n >= 2 && m >= 2, "critical value needs n, m >= 2");
    require_config(reference_size > 0 && lambda > 0.0, "critical value needs N > 0 and lambda > 0");
    require_config(effective_dimension >= 0.0, "effective dimension must be nonnegative");
    const double size_term = 1.0 / static_cast<double>(n - 1) + 1.0 / static_cast<double>(m - 1);
    const double conc =
        1.0 + 8.0 * kappa / std::sqrt(static_cast<double>(reference_size) * lambda) * std::log(24.0 / alpha);
    return 30.0 * b / alpha * size_term * conc * std::sqrt(effective_dimension);
}

inline GofOutcome test_effdim(const Sample& x, const Sample& y, const Sample& d, const KernelSpec& kernel,
                              const FilterSpec& filter, double alpha) {
    check_alpha(alpha);
    check_triplet(x, y, d);
    const EigenSystem eig = eigendecompose_reference(gram_matrix(kernel, d));
    GofOutcome out;
    out.calibration = Calibration::effective_dimension;
    out.statistic = statistic_direct(x, y, d, kernel, filter);
    const double nd = empirical_effective_dimension(eig, filter.lambda);
    out.threshold = effdim_critical_value(alpha, filter.b(), kernel.kappa(), static_cast<std::size_t>(x.rows()),
                                          static_cast<std::size_t>(y.rows()), static_cast<std::size_t>(d.rows()),
                                          filter.lambda, nd);
    out.reject = out.statistic >= out.threshold;
    out.nuisance = {filter.lambda, kernel.bandwidth, 0, static_cast<std::size_t>(x.rows()),
                    static_cast<std::size_t>(y.rows()), static_cast<std::size_t>(d.rows()), 0};
    return out;
}

// Effective-dimension test on a precomputed projection; the statistic is the
// identity labelling's value, identical to statistic_direct.
inline GofOutcome effdim_from_projection(const SpectralProjection& projection, const FilterSpec& filter, double alpha,
                                         double kappa, double bandwidth) {
    check_alpha(alpha);
    const std::vector<std::vector<std::uint32_t>> identity{identity_permutation(projection.n + projection.m)};
    GofOutcome out;
    out.calibration = Calibration::effective_dimension;
    out.statistic =
        labelling_statistics(projection, project_labellings(projection, identity), projection.weights(filter)).front();
    double nd = 0.0;
    for (Eigen::Index i = 0; i < projection.eigenvalues.size(); ++i) {
        const double l = std::max(projection.eigenvalues(i), 0.0);
        nd += l / (l + filter.lambda);
    }
    out.threshold = effdim_critical_value(alpha, filter.b(), kappa, projection.n, projection.m,
                                          projection.reference_size, filter.lambda, nd);
    out.reject = out.statistic >= out.threshold;
    out.nuisance = {filter.lambda, bandwidth, 0, projection.n, projection.m, projection.reference_size, 0};
    return out;
}

// ============================================================================
// PERMUTATION CALIBRATION
// ============================================================================

// Rank ceil((1 - alpha)(B+1)) among the B+1 values, 1-based and clamped.
inline std::size_t quantile_rank(double alpha, std::size_t count) {
    const double target = (1.0 - alpha) * static_cast<double>(count);
    auto k = static_cast<std::size_t>(std::ceil(target - 1e-9 * static_cast<double>(count)));
    return std::clamp<std::size_t>(k, 1, count);
}

// inf{t : (1/(B+1)) #{b : s_b <= t} >= 1 - alpha} over all B+1 statistics.
inline double permutation_quantile(std::vector<double> statistics, double alpha) {
    require_input(!statistics.empty(), "permutation quantile: no statistics");
    const std::size_t k = quantile_rank(alpha, statistics.size());
    std::nth_element(statistics.begin(), statistics.begin() + static_cast<std::ptrdiff_t>(k - 1), statistics.end());
    return statistics[k - 1];
}

// (1 + #{b >= 1 : s_b >= s_0}) / (B + 1); statistics[0] is the observed value.
inline double permutation_p_value(const std::vector<double>& statistics) {
    std::size_t count = 1;
    for (std::size_t b = 1; b < statistics.size(); ++b) count += statistics[b] >= statistics[0] ? 1 : 0;
    return static_cast<double>(count) / static_cast<double>(statistics.size());
}

struct PermutationCalibration {
    std::size_t permutations = 0;
    double alpha = 0.05;
    std::vector<double> statistics;  // index 0 is the unpermuted statistic
    double q_hat = 0.0;

    static PermutationCalibration from(std::vector<double> stats, double alpha) {
        PermutationCalibration c;
        c.permutations = stats.size() - 1;
        c.alpha = alpha;
        c.q_hat = permutation_quantile(stats, alpha);
        c.statistics = std::move(stats);
        return c;
    }
    bool reject() const { return statistics.front() >= q_hat; }
    double p_value() const { return permutation_p_value(statistics); }
};

// Identity first, then B uniform permutations drawn sequentially from one stream.
inline std::vector<std::vector<std::uint32_t>> draw_labellings(std::size_t size, std::size_t permutations,
                                                               std::uint64_t seed) {
    std::vector<std::vector<std::uint32_t>> out;
    out.reserve(permutations + 1);
    out.push_back(identity_permutation(size));
    Rng rng(seed);
    for (std::size_t b = 0; b < permutations; ++b) out.push_back(rng.permutation(size));
    return out;
}

inline GofOutcome outcome_from(const PermutationCalibration& cal, Nuisance nuisance) {
    GofOutcome out;
    out.calibration = Calibration::permutation;
    out.statistic = cal.statistics.front();
    out.threshold = cal.q_hat;
    out.reject = cal.reject();
    out.p_value = cal.p_value();
    out.nuisance = nuisance;
    return out;
}

inline GofOutcome test_permutation(const Sample& x, const Sample& y, const Sample& d, const KernelSpec& kernel,
                                   const FilterSpec& filter, double alpha, std::size_t permutations,
                                   std::uint64_t seed) {
    check_alpha(alpha);
    require_config(permutations >= 1, "B must be at least 1");
    const PooledKernelProduct product = build_pooled_product(x, y, d, kernel, filter);
    const auto labellings = draw_labellings(product.n + product.m, permutations, seed);
    std::vector<double> stats;
    stats.reserve(labellings.size());
    for (const auto& perm : labellings) stats.push_back(statistic_from_product_unchecked(product, perm));
    return outcome_from(PermutationCalibration::from(std::move(stats), alpha),
                        {filter.lambda, kernel.bandwidth, permutations, product.n, product.m,
                         static_cast<std::size_t>(d.rows()), seed});
}

// Permutation tests for several filters sharing one projection and one set
// of labellings.
inline std::vector<GofOutcome> test_permutation_filters(const SpectralProjection& projection,
                                                        const ProjectedLabellings& labellings,
                                                        const std::vector<FilterSpec>& filters, double alpha,
                                                        Nuisance nuisance) {
    std::vector<GofOutcome> out;
    out.reserve(filters.size());
    for (const auto& f : filters) {
        nuisance.lambda = f.lambda;
        out.push_back(outcome_from(
            PermutationCalibration::from(labelling_statistics(projection, labellings, projection.weights(f)), alpha),
            nuisance));
    }
    return out;
}

// ============================================================================
// ADAPTIVE (lambda, h) UNION TEST
// ============================================================================

// {lo, r lo, r^2 lo, ...} up to the last point <= hi.
inline std::vector<double> geometric_grid(double lo, double hi, double ratio) {
    require_config(lo > 0.0 && hi >= lo, "grid needs 0 < lo <= hi");
    require_config(ratio > 1.0, "grid ratio must exceed 1");
    std::vector<double> out;
    for (double v = lo; v <= hi * (1.0 + 1e-12); v *= ratio) out.push_back(v);
    return out;
}

inline std::vector<double> doubling_grid(double lo, double hi) { return geometric_grid(lo, hi, 2.0); }

// Smallest B whose corrected quantile can fall below the maximum.
inline std::size_t minimal_permutations(std::size_t pairs, double alpha) {
    return static_cast<std::size_t>(std::ceil(static_cast<double>(pairs) / alpha - 1e-9)) - 1;
}

enum class OperatorKind { reference, centered };

struct AdaptiveConfig {
    KernelFamily kernel = KernelFamily::gaussian;
    FilterFamily filter = FilterFamily::tikhonov;
    OperatorKind op = OperatorKind::reference;
    double alpha = 0.05;
    std::size_t permutations = 400;
    std::vector<double> lambdas;
    std::vector<double> bandwidths;  // absolute h values; ignored by the sobolev kernel
    double eig_floor = kDefaultEigFloor;
    std::uint64_t seed = 0;
};

struct PairResult {
    double lambda;
    double bandwidth;
    PermutationCalibration calibration;
};

struct AdaptiveResult {
    GofOutcome outcome;
    double corrected_alpha = 0.0;
    std::vector<PairResult> pairs;
};

inline void validate_adaptive(const AdaptiveConfig& c) {
    check_alpha(c.alpha);
    require_config(!c.lambdas.empty(), "adaptive test: empty lambda grid");
    require_config(c.kernel == KernelFamily::sobolev || !c.bandwidths.empty(), "adaptive test: empty bandwidth grid");
    const std::size_t pairs = c.lambdas.size() * (c.kernel == KernelFamily::sobolev ? 1 : c.bandwidths.size());
    const std::size_t needed = minimal_permutations(pairs, c.alpha);
    if (c.permutations < needed) {
        throw ConfigError("adaptive test: corrected level alpha/" + std::to_string(pairs) +
                          " is unattainable with B=" + std::to_string(c.permutations) +
                          "; need B >= " + std::to_string(needed));
    }
}

inline void summarize_adaptive(AdaptiveResult& result, const AdaptiveConfig& config, std::size_t n, std::size_t m,
                               std::size_t reference_size) {
    // Report the pair with the smallest permutation p-value; among equals the
    // largest relative exceedance.
    std::size_t best = 0;
    double best_p = 2.0, best_gap = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t i = 0; i < result.pairs.size(); ++i) {
        const auto& cal = result.pairs[i].calibration;
        any = any || cal.reject();
        const double p = cal.p_value();
        const double gap = (cal.statistics.front() - cal.q_hat) / std::max(std::abs(cal.q_hat), 1e-300);
        if (p < best_p || (p == best_p && gap > best_gap)) {
            best = i;
            best_p = p;
            best_gap = gap;
        }
    }
    const auto& chosen = result.pairs[best];
    auto& out = result.outcome;
    out.calibration = Calibration::aggregated;
    out.statistic = chosen.calibration.statistics.front();
    out.threshold = chosen.calibration.q_hat;
    out.reject = any;
    out.nuisance = {chosen.lambda, chosen.bandwidth, config.permutations, n, m, reference_size, config.seed};
}

// One adaptive test per filter family. Every family sees the same
// projections and the same labellings; config.filter is ignored.
inline std::vector<AdaptiveResult> adaptive_test_filters(const Sample& x, const Sample& y, const Sample& d,
                                                         const AdaptiveConfig& config,
                                                         const std::vector<FilterFamily>& filters) {
    validate_adaptive(config);
    check_triplet(x, y, d);
    require_config(!filters.empty(), "adaptive test: no filter family");
    const std::vector<double> bandwidths =
        config.kernel == KernelFamily::sobolev ? std::vector<double>{std::numeric_limits<double>::quiet_NaN()}
                                               : config.bandwidths;
    const double corrected = config.alpha / static_cast<double>(config.lambdas.size() * bandwidths.size());
    std::vector<AdaptiveResult> results(filters.size());
    for (auto& r : results) r.corrected_alpha = corrected;
    const auto labellings =
        draw_labellings(static_cast<std::size_t>(x.rows() + y.rows()), config.permutations, config.seed);

    for (double h : bandwidths) {
        const KernelSpec kernel = config.kernel == KernelFamily::sobolev
                                      ? KernelSpec::sobolev(static_cast<std::size_t>(x.cols()))
                                      : KernelSpec::gaussian(h, static_cast<std::size_t>(x.cols()));
        const SpectralProjection proj = config.op == OperatorKind::reference ? project_reference(x, y, d, kernel)
                                                                             : project_centered(x, y, d, kernel);
        const ProjectedLabellings lab = project_labellings(proj, labellings);
        for (std::size_t f = 0; f < filters.size(); ++f) {
            for (double lambda : config.lambdas) {
                const FilterSpec filter{filters[f], lambda, config.eig_floor};
                results[f].pairs.push_back(
                    {lambda, h,
                     PermutationCalibration::from(labelling_statistics(proj, lab, proj.weights(filter)), corrected)});
            }
        }
    }
    for (auto& r : results) {
        summarize_adaptive(r, config, static_cast<std::size_t>(x.rows()), static_cast<std::size_t>(y.rows()),
                           static_cast<std::size_t>(d.rows()));
    }
    return results;
}

// Rejects iff some pair's statistic reaches its permutation quantile at level
// alpha/(|lambdas||bandwidths|). One set of labellings serves every pair.
inline AdaptiveResult adaptive_test(const Sample& x, const Sample& y, const Sample& d, const AdaptiveConfig& config) {
    return adaptive_test_filters(x, y, d, config, {config.filter}).front();
}

// ============================================================================
// AGGREGATED MMD BASELINE (uniform weights)
// ============================================================================

enum class MmdAggCorrection { bisection, bonferroni };

struct MmdAggConfig {
    double alpha = 0.05;
    std::vector<double> bandwidths;  // absolute h values
    std::size_t b1 = 500;
    std::size_t b2 = 500;
    std::size_t b3 = 100;
    MmdAggCorrection correction = MmdAggCorrection::bisection;
    std::uint64_t seed = 0;
};

struct MmdAggResult {
    GofOutcome outcome;
    double u_hat = 0.0;  // corrected level multiplier; per-bandwidth level is u_hat / |bandwidths|
    std::vector<double> statistics;
    std::vector<double> thresholds;
};

// Aggregated two-sample MMD test with uniform weights. B1 labellings give
// per-bandwidth quantile curves, B2 fresh labellings estimate the family-wise
// rejection rate of a candidate level u, and B3 bisection steps find the
// largest u whose estimated rate stays at or below alpha.
inline MmdAggResult mmdagg_uniform(const Sample& x, const Sample& y, const MmdAggConfig& config) {
    check_alpha(config.alpha);
    require_config(!config.bandwidths.empty(), "mmdagg: empty bandwidth grid");
    require_config(config.b1 >= 1 && config.b2 >= 1, "mmdagg: B1 and B2 must be positive");
    check_sizes(static_cast<std::size_t>(x.rows()), static_cast<std::size_t>(y.rows()));
    const auto n = static_cast<std::size_t>(x.rows());
    const auto m = static_cast<std::size_t>(y.rows());
    const Matrix sq = squared_distance_matrix(stack_rows(x, y));
    const auto labellings = draw_labellings(n + m, config.b1 + config.b2, config.seed);
    const std::size_t nb = config.bandwidths.size();

    // quantile_stats[k]: observed + B1 permuted; fwer_stats[k]: B2 permuted.
    std::vector<std::vector<double>> quantile_stats(nb), fwer_stats(nb);
    std::vector<double> observed(nb);
    for (std::size_t k = 0; k < nb; ++k) {
        const double h = config.bandwidths[k];
        require_config(h > 0.0, "mmdagg: bandwidths must be positive");
        const Matrix kern = sq.unaryExpr([h](double v) { return gaussian_from_sqdist(v, h); });
        const PooledTotals totals = PooledTotals::of(kern);
        auto stat = [&](const std::vector<std::uint32_t>& p) {
            return u_statistic(n, m, block_sums(kern, totals, std::span<const std::uint32_t>(p).first(n)),
                               totals.total, totals.trace);
        };
        observed[k] = stat(labellings[0]);
        quantile_stats[k].push_back(observed[k]);
        for (std::size_t b = 1; b <= config.b1; ++b) quantile_stats[k].push_back(stat(labellings[b]));
        for (std::size_t b = config.b1 + 1; b < labellings.size(); ++b) fwer_stats[k].push_back(stat(labellings[b]));
        std::sort(quantile_stats[k].begin(), quantile_stats[k].end());
    }

    auto quantile_at = [&](std::size_t k, double level) {
        const auto& s = quantile_stats[k];
        if (level >= 1.0) return s.front();
        return s[quantile_rank(level, s.size()) - 1];
    };

    MmdAggResult result;
    const double weight = 1.0 / static_cast<double>(nb);
    if (config.correction == MmdAggCorrection::bonferroni) {
        result.u_hat = config.alpha;
    } else {
        auto fwer = [&](double u) {
            std::vector<double> q(nb);
            for (std::size_t k = 0; k < nb; ++k) q[k] = quantile_at(k, u * weight);
            std::size_t hits = 0;
            for (std::size_t b = 0; b < config.b2; ++b) {
                for (std::size_t k = 0; k < nb; ++k) {
                    if (fwer_stats[k][b] >= q[k]) {
                        ++hits;
                        break;
                    }
                }
            }
            return static_cast<double>(hits) / static_cast<double>(config.b2);
        };
        double lo = 0.0, hi = 1.0 / weight;
        for (std::size_t step = 0; step < config.b3; ++step) {
            const double mid = 0.5 * (lo + hi);
            if (fwer(mid) <= config.alpha) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        result.u_hat = lo;
    }

    // With u_hat = 0 the quantile is the maximum and the test cannot reject
    // unless the observed statistic ties it, so treat that as "no level left".
    bool any = false;
    std::size_t best = 0;
    double best_gap = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < nb; ++k) {
        const double q = result.u_hat > 0.0 ? quantile_at(k, result.u_hat * weight)
                                            : std::numeric_limits<double>::infinity();
        result.statistics.push_back(observed[k]);
        result.thresholds.push_back(q);
        any = any || observed[k] >= q;
        const double gap = observed[k] - q;
        if (gap > best_gap) {
            best_gap = gap;
            best = k;
        }
    }
    auto& out = result.outcome;
    out.calibration = Calibration::aggregated;
    out.statistic = result.statistics[best];
    out.threshold = result.thresholds[best];
    out.reject = any;
    out.nuisance = {std::numeric_limits<double>::quiet_NaN(), config.bandwidths[best], config.b1, n, m, 0, config.seed};
    return result;
}

// ============================================================================
// ENERGY BASELINE
// ============================================================================

inline GofOutcome test_energy_permutation(const Sample& x, const Sample& y, double alpha, std::size_t permutations,
                                          std::uint64_t seed) {
    check_alpha(alpha);
    require_config(permutations >= 1, "B must be at least 1");
    require_input(x.cols() == y.cols(), "energy test: dimension mismatch");
    require_input(x.rows() >= 1 && y.rows() >= 1, "energy test: empty sample");
    const auto n = static_cast<std::size_t>(x.rows());
    const auto m = static_cast<std::size_t>(y.rows());
    const Matrix dist = distance_matrix(stack_rows(x, y));
    const PooledTotals totals = PooledTotals::of(dist);
    const auto labellings = draw_labellings(n + m, permutations, seed);
    std::vector<double> stats;
    stats.reserve(labellings.size());
    for (const auto& p : labellings) {
        stats.push_back(
            energy_from_blocks(n, m, block_sums(dist, totals, std::span<const std::uint32_t>(p).first(n)), totals.total));
    }
    return outcome_from(PermutationCalibration::from(std::move(stats), alpha),
                        {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(),
                         permutations, n, m, 0, seed});
}

}  // namespace srgof
