#pragma once

// Monte Carlo power and variance studies. A plan expands into grid points
// (d, theta) and test arms (method, filter, lambda); every replicate draws one
// (x, y, D) triple that all arms share, and replicate r of dimension d uses
// the same seeds for every theta so power curves are coupled across the grid.

#include "srgof/calibration.hpp"
#include "srgof/samplers.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace srgof {

// ============================================================================
// PLAN
// ============================================================================

enum class Study { regularization_effect, method_comparison, filter_generality, variance_comparison };

inline std::string to_string(Study s) {
    switch (s) {
        case Study::regularization_effect: return "regularization_effect";
        case Study::method_comparison: return "method_comparison";
        case Study::filter_generality: return "filter_generality";
        case Study::variance_comparison: return "variance_comparison";
    }
    return "?";
}

inline Study parse_study(const std::string& name) {
    for (auto s : {Study::regularization_effect, Study::method_comparison, Study::filter_generality,
                   Study::variance_comparison}) {
        if (to_string(s) == name) return s;
    }
    throw ConfigError("unknown study '" + name +
                      "' (expected regularization_effect|method_comparison|filter_generality|variance_comparison)");
}

enum class Method { spectral_perm, spectral_effdim, spectral_adaptive, centered_adaptive, mmdagg_uniform, energy_perm };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::spectral_perm: return "spectral_perm";
        case Method::spectral_effdim: return "spectral_effdim";
        case Method::spectral_adaptive: return "spectral_adaptive";
        case Method::centered_adaptive: return "centered_adaptive";
        case Method::mmdagg_uniform: return "mmdagg_uniform";
        case Method::energy_perm: return "energy_perm";
    }
    return "?";
}

inline Method parse_method(const std::string& name) {
    for (auto m : {Method::spectral_perm, Method::spectral_effdim, Method::spectral_adaptive, Method::centered_adaptive,
                   Method::mmdagg_uniform, Method::energy_perm}) {
        if (to_string(m) == name) return m;
    }
    throw ConfigError("unknown method '" + name +
                      "' (expected spectral_perm|spectral_effdim|spectral_adaptive|centered_adaptive|"
                      "mmdagg_uniform|energy_perm)");
}

inline bool uses_filters(Method m) {
    return m == Method::spectral_perm || m == Method::spectral_effdim || m == Method::spectral_adaptive ||
           m == Method::centered_adaptive;
}

// Geometric grid {lo, ratio lo, ...} up to hi.
struct GridSpec {
    double lo = 1.0;
    double hi = 1.0;
    double ratio = 2.0;

    std::vector<double> values() const { return geometric_grid(lo, hi, ratio); }
    bool operator==(const GridSpec&) const = default;
};

struct ExperimentPlan {
    int schema = 1;
    Study study = Study::method_comparison;
    DistributionFamily family = DistributionFamily::gaussian_mean;
    std::vector<std::size_t> dimensions{10};
    std::vector<double> thetas;
    std::vector<Method> methods;
    std::vector<FilterFamily> filters{FilterFamily::tikhonov};
    KernelFamily kernel = KernelFamily::gaussian;
    std::vector<double> lambdas{1e-2};                // fixed-lambda spectral methods
    GridSpec lambda_grid{1e-6, 5.0, 64.0};            // adaptive methods
    GridSpec bandwidth_grid{0.01, 100.0, 10.0};       // multipliers of the median heuristic
    std::vector<double> mmdagg_multipliers{0.03125, 0.125, 0.5, 2.0, 8.0};
    std::size_t mmdagg_b1 = 500;
    std::size_t mmdagg_b2 = 500;
    std::size_t mmdagg_b3 = 100;
    std::size_t n = 200;
    std::size_t m = 400;
    std::size_t reference_size = 100;
    double alpha = 0.05;
    std::size_t permutations = 400;
    std::size_t reps = 200;
    std::uint64_t seed = 1;
    double eig_floor = kDefaultEigFloor;
    // Variance study: one sweep varies n, one d, one lambda; the others stay fixed.
    std::vector<std::size_t> variance_sizes{50, 100, 200, 400};
    std::vector<std::size_t> variance_dimensions{5, 10, 20};
    std::vector<double> variance_lambdas{1e-3, 1e-2, 1e-1, 1.0};
    std::size_t variance_n = 200;
    std::size_t variance_d = 10;
    double variance_lambda = 1e-2;
    std::string output = "out";

    bool operator==(const ExperimentPlan&) const = default;
};

// Alternative grids for each family; quick mode keeps every other point and the last.
inline std::vector<double> default_thetas(DistributionFamily family, bool quick) {
    std::vector<double> full;
    auto ramp = [&](double start, double step, int count) {
        for (int i = 0; i < count; ++i) full.push_back(std::round((start + step * i) * 1e9) / 1e9);
    };
    switch (family) {
        case DistributionFamily::gaussian_mean: ramp(0.0, 0.2, 7); break;
        case DistributionFamily::gaussian_var: ramp(1.0, 0.05, 7); break;
        case DistributionFamily::uniform_scale: ramp(1.0, 0.02, 7); break;
        case DistributionFamily::vmf: ramp(0.0, 1.0, 7); break;
        case DistributionFamily::sobolev_density: ramp(0.0, 0.2, 6); break;
    }
    if (!quick) return full;
    std::vector<double> out;
    for (std::size_t i = 0; i < full.size(); i += 2) out.push_back(full[i]);
    if (out.back() != full.back()) out.push_back(full.back());
    return out;
}

inline Study default_study(DistributionFamily family) {
    return family == DistributionFamily::sobolev_density ? Study::regularization_effect : Study::method_comparison;
}

// Fully materialized defaults for one (study, family) pair.
inline ExperimentPlan default_plan(Study study, DistributionFamily family, bool quick) {
    ExperimentPlan p;
    p.study = study;
    p.family = family;
    switch (study) {
        case Study::regularization_effect:
            p.kernel = KernelFamily::sobolev;
            p.dimensions = {20};
            p.methods = {Method::spectral_perm};
            p.lambdas = {1e-12, 1e-10, 1e-8, 1e-6, 1e-4};
            p.n = 500;
            p.m = 1000;
            p.reference_size = 100;
            break;
        case Study::method_comparison:
            p.methods = {Method::spectral_adaptive, Method::centered_adaptive, Method::mmdagg_uniform,
                         Method::energy_perm};
            break;
        case Study::filter_generality:
            p.methods = {Method::spectral_adaptive, Method::energy_perm};
            p.filters = {FilterFamily::tikhonov, FilterFamily::cutoff, FilterFamily::landweber};
            p.lambda_grid = {1e-6, 1e-3, 2.0};
            p.bandwidth_grid = {1.0, 2.0, 2.0};
            break;
        case Study::variance_comparison:
            p.methods = {};
            p.reference_size = 200;
            break;
    }
    if (family == DistributionFamily::sobolev_density) p.kernel = KernelFamily::sobolev;
    p.thetas = default_thetas(family, quick);
    if (quick) p.reps = 50;
    return p;
}

// One column of the power table.
struct Arm {
    Method method = Method::spectral_perm;
    FilterFamily filter = FilterFamily::tikhonov;
    double lambda = std::numeric_limits<double>::quiet_NaN();  // fixed-lambda arms only
};

inline std::vector<Arm> plan_arms(const ExperimentPlan& p) {
    std::vector<Arm> arms;
    for (Method m : p.methods) {
        if (m == Method::spectral_perm || m == Method::spectral_effdim) {
            for (FilterFamily f : p.filters)
                for (double l : p.lambdas) arms.push_back({m, f, l});
        } else if (uses_filters(m)) {
            for (FilterFamily f : p.filters) arms.push_back({m, f});
        } else {
            arms.push_back({m});
        }
    }
    return arms;
}

inline std::size_t adaptive_pairs(const ExperimentPlan& p) {
    return p.lambda_grid.values().size() * (p.kernel == KernelFamily::sobolev ? 1 : p.bandwidth_grid.values().size());
}

inline void validate_plan(const ExperimentPlan& p) {
    require_config(p.schema == 1, "unsupported plan schema " + std::to_string(p.schema) + " (expected 1)");
    check_alpha(p.alpha);
    require_config(p.reps >= 1, "reps must be at least 1");
    require_config(p.permutations >= 1, "B must be at least 1");
    require_config(p.n >= 2 && p.m >= 2, "n and m must be at least 2");
    require_config(p.reference_size >= 2, "N must be at least 2");
    require_config(!p.dimensions.empty(), "dimension list is empty");
    require_config(p.eig_floor >= 0.0, "eig_floor must be nonnegative");
    if (p.study == Study::variance_comparison) {
        require_config(p.kernel == KernelFamily::gaussian, "variance_comparison uses the gaussian kernel");
        require_config(p.reps >= 2, "variance_comparison needs reps >= 2");
        require_config(p.variance_n >= 2, "variance_n must be at least 2");
        for (auto v : p.variance_sizes) require_config(v >= 2, "variance_sizes entries must be at least 2");
        for (auto v : p.variance_dimensions) require_config(v >= 1, "variance_dimensions entries must be positive");
        for (double l : p.variance_lambdas) FilterSpec{FilterFamily::tikhonov, l}.validate();
        FilterSpec{FilterFamily::tikhonov, p.variance_lambda}.validate();
        return;
    }
    require_config(!p.thetas.empty(), "theta grid is empty");
    require_config(!p.methods.empty(), "method list is empty");
    for (std::size_t d : p.dimensions) {
        for (double t : p.thetas) DistributionSpec{p.family, d, t}.validate();
    }
    if (p.kernel == KernelFamily::sobolev) {
        require_config(p.family == DistributionFamily::sobolev_density || p.family == DistributionFamily::uniform_scale,
                       "the sobolev kernel needs data in the unit cube (family sobolev_density or uniform_scale)");
    }
    bool needs_filters = false, needs_lambdas = false, adaptive = false;
    for (Method m : p.methods) {
        needs_filters = needs_filters || uses_filters(m);
        needs_lambdas = needs_lambdas || m == Method::spectral_perm || m == Method::spectral_effdim;
        adaptive = adaptive || m == Method::spectral_adaptive || m == Method::centered_adaptive;
        require_config(p.kernel == KernelFamily::gaussian || uses_filters(m),
                       to_string(m) + " is defined for the gaussian kernel only");
    }
    if (needs_filters) require_config(!p.filters.empty(), "filter list is empty");
    if (needs_lambdas) {
        require_config(!p.lambdas.empty(), "lambda list is empty");
        for (FilterFamily f : p.filters)
            for (double l : p.lambdas) FilterSpec{f, l, p.eig_floor}.validate();
    }
    if (adaptive) {
        for (FilterFamily f : p.filters)
            for (double l : p.lambda_grid.values()) FilterSpec{f, l, p.eig_floor}.validate();
        for (double w : p.bandwidth_grid.values()) require_config(w > 0.0, "bandwidth multipliers must be positive");
        const std::size_t pairs = adaptive_pairs(p);
        const std::size_t needed = minimal_permutations(pairs, p.alpha);
        if (p.permutations < needed) {
            throw ConfigError("adaptive grid has " + std::to_string(pairs) + " (lambda, h) pairs; level alpha/" +
                              std::to_string(pairs) + " needs B >= " + std::to_string(needed) + ", got B = " +
                              std::to_string(p.permutations));
        }
    }
    if (std::find(p.methods.begin(), p.methods.end(), Method::mmdagg_uniform) != p.methods.end()) {
        require_config(!p.mmdagg_multipliers.empty(), "mmdagg bandwidth list is empty");
        for (double w : p.mmdagg_multipliers) require_config(w > 0.0, "mmdagg multipliers must be positive");
        require_config(p.mmdagg_b1 >= 1 && p.mmdagg_b2 >= 1, "mmdagg B1 and B2 must be positive");
    }
}

// reps x |grid| x |methods| x B x (n+m)^2, the nominal cost of a power study.
inline double work_estimate(const ExperimentPlan& p) {
    const double grid = static_cast<double>(p.dimensions.size() * p.thetas.size());
    const double pooled = static_cast<double>(p.n + p.m);
    return static_cast<double>(p.reps) * grid * static_cast<double>(p.methods.size()) *
           static_cast<double>(p.permutations) * pooled * pooled;
}

// ============================================================================
// RECORDS
// ============================================================================

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

// Wilson score interval at 95%.
inline Interval wilson_interval(std::size_t successes, std::size_t trials) {
    require_config(trials >= 1, "wilson interval needs at least one trial");
    constexpr double z = 1.959963984540054;
    const double t = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / t;
    const double denom = 1.0 + z * z / t;
    const double center = (p + z * z / (2.0 * t)) / denom;
    const double half = z / denom * std::sqrt(p * (1.0 - p) / t + z * z / (4.0 * t * t));
    // Rounding can leave the bound just inside the rate at k = 0 or k = trials.
    return {std::clamp(center - half, 0.0, p), std::clamp(center + half, p, 1.0)};
}

// Central `level` band of Binomial(reps, alpha) / reps from exact quantiles.
inline Interval binomial_band(std::size_t reps, double alpha, double level = 0.95) {
    check_alpha(alpha);
    const double tail = 0.5 * (1.0 - level);
    const auto n = static_cast<double>(reps);
    double cdf = 0.0;
    std::size_t lo = reps, hi = reps;
    bool have_lo = false;
    for (std::size_t k = 0; k <= reps; ++k) {
        const double kd = static_cast<double>(k);
        const double log_pmf = std::lgamma(n + 1) - std::lgamma(kd + 1) - std::lgamma(n - kd + 1) + kd * std::log(alpha) +
                               (n - kd) * std::log1p(-alpha);
        cdf += std::exp(log_pmf);
        if (!have_lo && cdf >= tail) {
            lo = k;
            have_lo = true;
        }
        if (cdf >= 1.0 - tail) {
            hi = k;
            break;
        }
    }
    return {static_cast<double>(lo) / n, static_cast<double>(hi) / n};
}

struct PowerRecord {
    std::string study, method, filter, family;
    std::size_t d = 0;
    double theta = 0.0;
    std::size_t n = 0, m = 0, reference_size = 0;
    std::string lambda;  // numeric value, or the grid description of an adaptive arm
    std::size_t rejections = 0;
    std::size_t reps = 0;
    double rate = 0.0, lo = 0.0, hi = 0.0;
    std::uint64_t seed = 0;
};

struct VarianceRecord {
    std::string setting;
    std::size_t n = 0, d = 0, reference_size = 0;
    double lambda = 0.0;
    double ours_variance = 0.0, comparator_variance = 0.0;
    std::size_t reps = 0;
    std::uint64_t seed = 0;
};

inline constexpr const char* kPowerHeader = "study,method,filter,family,d,theta,n,m,N,lambda,rate,lo,hi,reps,seed";
inline constexpr const char* kVarianceHeader = "setting,n,m,d,N,lambda,ours_variance,comparator_variance,reps,seed";

// Shortest decimal text, fixed across platforms for the same double.
inline std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::string arm_lambda_label(const Arm& arm, const ExperimentPlan& p) {
    switch (arm.method) {
        case Method::spectral_perm:
        case Method::spectral_effdim: return format_number(arm.lambda);
        case Method::spectral_adaptive:
        case Method::centered_adaptive:
            return "grid:" + format_number(p.lambda_grid.lo) + ":" + format_number(p.lambda_grid.hi) + ":" +
                   format_number(p.lambda_grid.ratio);
        default: return "na";
    }
}

inline std::string to_csv_row(const PowerRecord& r) {
    std::ostringstream o;
    o << r.study << ',' << r.method << ',' << r.filter << ',' << r.family << ',' << r.d << ',' << format_number(r.theta)
      << ',' << r.n << ',' << r.m << ',' << r.reference_size << ',' << r.lambda << ',' << format_number(r.rate) << ','
      << format_number(r.lo) << ',' << format_number(r.hi) << ',' << r.reps << ',' << r.seed;
    return o.str();
}

inline std::string to_csv_row(const VarianceRecord& r) {
    std::ostringstream o;
    o << r.setting << ',' << r.n << ',' << r.n << ',' << r.d << ',' << r.reference_size << ',' << format_number(r.lambda)
      << ',' << format_number(r.ours_variance) << ',' << format_number(r.comparator_variance) << ',' << r.reps << ','
      << r.seed;
    return o.str();
}

template <typename Record>
std::string to_csv(const std::vector<Record>& rows, const char* header) {
    std::string out = std::string(header) + "\n";
    for (const auto& r : rows) out += to_csv_row(r) + "\n";
    return out;
}

// ============================================================================
// EXECUTION
// ============================================================================

struct RunOptions {
    std::size_t threads = 1;
    std::ostream* log = nullptr;
};

inline std::size_t default_threads() { return std::max<std::size_t>(1, std::thread::hardware_concurrency()); }

// Runs body(i) for i in [0, count) on up to `threads` workers. Each index
// writes only its own output slot, so results do not depend on scheduling.
template <typename Body>
void parallel_for(std::size_t count, std::size_t threads, Body&& body) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count && !failed; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    const std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    failed = true;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

// Stream tags below the replicate seed.
enum SeedTag : std::uint64_t { kTagX = 1, kTagY = 2, kTagReference = 3, kTagPermutations = 4 };

struct Replicate {
    Sample x, y, d;
    std::uint64_t permutation_seed = 0;
};

// Seeds depend on (plan seed, d, replicate) only, so every theta reuses them.
inline std::uint64_t replicate_seed(std::uint64_t plan_seed, std::size_t d, std::size_t rep) {
    return derive_seed(derive_seed(plan_seed, d), rep);
}

inline Replicate draw_replicate(const DistributionSpec& alternative, std::size_t n, std::size_t m,
                                std::size_t reference_size, std::uint64_t rep_seed) {
    const DistributionSpec null = alternative.null();
    return {sample(alternative, n, derive_seed(rep_seed, kTagX)), sample(null, m, derive_seed(rep_seed, kTagY)),
            sample(null, reference_size, derive_seed(rep_seed, kTagReference)),
            derive_seed(rep_seed, kTagPermutations)};
}

// Median heuristic over the pooled null draws D and y.
inline double null_pool_bandwidth(const Replicate& r) { return median_heuristic(stack_rows(r.d, r.y)); }

// Decision of every arm on one replicate.
inline std::vector<char> evaluate_arms(const ExperimentPlan& p, const std::vector<Arm>& arms, const Replicate& r) {
    std::vector<char> out(arms.size(), 0);
    const auto dim = static_cast<std::size_t>(r.x.cols());
    const bool gaussian = p.kernel == KernelFamily::gaussian;
    const double h_m = gaussian ? null_pool_bandwidth(r) : std::numeric_limits<double>::quiet_NaN();
    const KernelSpec fixed_kernel = gaussian ? KernelSpec::gaussian(h_m, dim) : KernelSpec::sobolev(dim);
    const std::size_t pooled = p.n + p.m;

    bool any_fixed = false, any_perm = false;
    for (const Arm& a : arms) {
        any_fixed = any_fixed || a.method == Method::spectral_perm || a.method == Method::spectral_effdim;
        any_perm = any_perm || a.method == Method::spectral_perm;
    }
    if (any_fixed) {
        const SpectralProjection proj = project_reference(r.x, r.y, r.d, fixed_kernel);
        ProjectedLabellings lab;
        if (any_perm) lab = project_labellings(proj, draw_labellings(pooled, p.permutations, r.permutation_seed));
        for (std::size_t i = 0; i < arms.size(); ++i) {
            const Arm& a = arms[i];
            const FilterSpec f{a.filter, a.lambda, p.eig_floor};
            if (a.method == Method::spectral_perm) {
                out[i] = PermutationCalibration::from(labelling_statistics(proj, lab, proj.weights(f)), p.alpha).reject();
            } else if (a.method == Method::spectral_effdim) {
                out[i] = effdim_from_projection(proj, f, p.alpha, fixed_kernel.kappa(), fixed_kernel.bandwidth).reject;
            }
        }
    }

    for (Method adaptive : {Method::spectral_adaptive, Method::centered_adaptive}) {
        std::vector<FilterFamily> filters;
        std::vector<std::size_t> slots;
        for (std::size_t i = 0; i < arms.size(); ++i) {
            if (arms[i].method == adaptive) {
                filters.push_back(arms[i].filter);
                slots.push_back(i);
            }
        }
        if (filters.empty()) continue;
        AdaptiveConfig c;
        c.kernel = p.kernel;
        c.op = adaptive == Method::spectral_adaptive ? OperatorKind::reference : OperatorKind::centered;
        c.alpha = p.alpha;
        c.permutations = p.permutations;
        c.lambdas = p.lambda_grid.values();
        if (gaussian) {
            for (double w : p.bandwidth_grid.values()) c.bandwidths.push_back(w * h_m);
        }
        c.eig_floor = p.eig_floor;
        c.seed = r.permutation_seed;
        const auto results = adaptive_test_filters(r.x, r.y, r.d, c, filters);
        for (std::size_t k = 0; k < slots.size(); ++k) out[slots[k]] = results[k].outcome.reject;
    }

    for (std::size_t i = 0; i < arms.size(); ++i) {
        if (arms[i].method == Method::mmdagg_uniform) {
            MmdAggConfig c;
            c.alpha = p.alpha;
            for (double w : p.mmdagg_multipliers) c.bandwidths.push_back(w * h_m);
            c.b1 = p.mmdagg_b1;
            c.b2 = p.mmdagg_b2;
            c.b3 = p.mmdagg_b3;
            c.seed = r.permutation_seed;
            out[i] = mmdagg_uniform(r.x, r.y, c).outcome.reject;
        } else if (arms[i].method == Method::energy_perm) {
            out[i] = test_energy_permutation(r.x, r.y, p.alpha, p.permutations, r.permutation_seed).reject;
        }
    }
    return out;
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Power table: one record per (d, theta, arm), ordered by d, theta, then arm.
inline std::vector<PowerRecord> run_power_study(const ExperimentPlan& p, const RunOptions& opt = {}) {
    validate_plan(p);
    require_config(p.study != Study::variance_comparison, "variance_comparison produces a variance table");
    const Stopwatch clock;
    const std::vector<Arm> arms = plan_arms(p);
    if (opt.log) {
        *opt.log << "[srgof] study=" << to_string(p.study) << " family=" << to_string(p.family)
                 << " grid=" << p.dimensions.size() * p.thetas.size() << " arms=" << arms.size() << " reps=" << p.reps
                 << " work_estimate=" << format_number(work_estimate(p)) << "\n";
    }
    struct Cell {
        std::size_t d;
        double theta;
    };
    std::vector<Cell> cells;
    for (std::size_t d : p.dimensions)
        for (double t : p.thetas) cells.push_back({d, t});

    // decisions[cell * reps + rep][arm]
    std::vector<std::vector<char>> decisions(cells.size() * p.reps);
    parallel_for(decisions.size(), opt.threads, [&](std::size_t task) {
        const Cell& c = cells[task / p.reps];
        const std::size_t rep = task % p.reps;
        const Replicate r = draw_replicate({p.family, c.d, c.theta}, p.n, p.m, p.reference_size,
                                           replicate_seed(p.seed, c.d, rep));
        decisions[task] = evaluate_arms(p, arms, r);
    });

    std::vector<PowerRecord> rows;
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        for (std::size_t a = 0; a < arms.size(); ++a) {
            std::size_t hits = 0;
            for (std::size_t rep = 0; rep < p.reps; ++rep) hits += decisions[ci * p.reps + rep][a] ? 1 : 0;
            PowerRecord rec;
            rec.study = to_string(p.study);
            rec.method = to_string(arms[a].method);
            rec.filter = uses_filters(arms[a].method) ? to_string(arms[a].filter) : "none";
            rec.family = to_string(p.family);
            rec.d = cells[ci].d;
            rec.theta = cells[ci].theta;
            rec.n = p.n;
            rec.m = p.m;
            rec.reference_size = p.reference_size;
            rec.lambda = arm_lambda_label(arms[a], p);
            rec.rejections = hits;
            rec.reps = p.reps;
            rec.rate = static_cast<double>(hits) / static_cast<double>(p.reps);
            const Interval w = wilson_interval(hits, p.reps);
            rec.lo = w.lo;
            rec.hi = w.hi;
            rec.seed = p.seed;
            rows.push_back(rec);
        }
    }
    if (opt.log) *opt.log << "[srgof] wall_clock_seconds=" << format_number(clock.seconds()) << "\n";
    return rows;
}

inline std::vector<PowerRecord> run_regularization_effect(const ExperimentPlan& p, const RunOptions& opt = {}) {
    require_config(p.kernel == KernelFamily::sobolev && p.family == DistributionFamily::sobolev_density,
                   "regularization_effect needs the sobolev kernel and the sobolev_density family");
    return run_power_study(p, opt);
}

inline std::vector<PowerRecord> run_method_comparison(const ExperimentPlan& p, const RunOptions& opt = {}) {
    require_config(p.kernel == KernelFamily::gaussian, "method_comparison needs the gaussian kernel");
    return run_power_study(p, opt);
}

inline std::vector<PowerRecord> run_filter_generality(const ExperimentPlan& p, const RunOptions& opt = {}) {
    return run_power_study(p, opt);
}

// Sample variance of both statistics under H0 = N(0, I_d) for each sweep.
inline std::vector<VarianceRecord> run_variance_comparison(const ExperimentPlan& p, const RunOptions& opt = {}) {
    validate_plan(p);
    const Stopwatch clock;
    struct Setting {
        std::string name;
        std::size_t n, d;
        double lambda;
    };
    std::vector<Setting> settings;
    for (auto n : p.variance_sizes) settings.push_back({"vary_n", n, p.variance_d, p.variance_lambda});
    for (auto d : p.variance_dimensions) settings.push_back({"vary_d", p.variance_n, d, p.variance_lambda});
    for (double l : p.variance_lambdas) settings.push_back({"vary_lambda", p.variance_n, p.variance_d, l});
    if (opt.log) {
        *opt.log << "[srgof] study=variance_comparison settings=" << settings.size() << " reps=" << p.reps << "\n";
    }

    std::vector<std::pair<double, double>> values(settings.size() * p.reps);
    parallel_for(values.size(), opt.threads, [&](std::size_t task) {
        const Setting& s = settings[task / p.reps];
        const std::size_t rep = task % p.reps;
        const DistributionSpec null{DistributionFamily::gaussian_mean, s.d, 0.0};
        const Replicate r = draw_replicate(null, s.n, s.n, p.reference_size, replicate_seed(p.seed, s.d, rep));
        const KernelSpec k = KernelSpec::gaussian(null_pool_bandwidth(r), s.d);
        const FilterSpec f{FilterFamily::tikhonov, s.lambda, p.eig_floor};
        values[task] = {statistic_direct(r.x, r.y, r.d, k, f), hagrass_statistic(r.x, r.y, r.d, k, f)};
    });

    std::vector<VarianceRecord> rows;
    for (std::size_t si = 0; si < settings.size(); ++si) {
        double s1 = 0, s2 = 0;
        for (std::size_t rep = 0; rep < p.reps; ++rep) {
            s1 += values[si * p.reps + rep].first;
            s2 += values[si * p.reps + rep].second;
        }
        const double reps = static_cast<double>(p.reps);
        const double m1 = s1 / reps, m2 = s2 / reps;
        double v1 = 0, v2 = 0;
        for (std::size_t rep = 0; rep < p.reps; ++rep) {
            v1 += (values[si * p.reps + rep].first - m1) * (values[si * p.reps + rep].first - m1);
            v2 += (values[si * p.reps + rep].second - m2) * (values[si * p.reps + rep].second - m2);
        }
        rows.push_back({settings[si].name, settings[si].n, settings[si].d, p.reference_size, settings[si].lambda,
                        v1 / (reps - 1), v2 / (reps - 1), p.reps, p.seed});
    }
    if (opt.log) *opt.log << "[srgof] wall_clock_seconds=" << format_number(clock.seconds()) << "\n";
    return rows;
}

}  // namespace srgof
