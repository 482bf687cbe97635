// Acceptance checks A1-A12. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include "instances.hpp"
#include "oracles.hpp"
#include "srgof/srgof.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace srgof;

namespace {

// Two-sided 95% size band at 200 replicates, as pinned by the criteria.
constexpr double kSizeLo = 0.021;
constexpr double kSizeHi = 0.09;

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

const PowerRecord& find_row(const std::vector<PowerRecord>& rows, const std::string& method, double theta,
                            const std::string& lambda = "", const std::string& filter = "") {
    for (const auto& r : rows) {
        if (r.method == method && r.theta == theta && (lambda.empty() || r.lambda == lambda) &&
            (filter.empty() || r.filter == filter))
            return r;
    }
    throw InternalError("acceptance: missing row for " + method);
}

RunOptions options() { return {default_threads(), nullptr}; }

// ============================================================================
// Criteria
// ============================================================================

Verdict a1_oracle_equivalence() {
    Rng rng(20240601);
    double worst = 0.0;
    int sobolev = 0;
    for (int t = 0; t < 100; ++t) {
        const auto inst = instances::oracle_instance(rng, t);
        sobolev += inst.kernel.family == KernelFamily::sobolev ? 1 : 0;
        const double expected =
            oracle::reference_statistic(inst.x, inst.y, inst.z, inst.oracle_kernel, inst.filter, inst.lambda);
        const double got = statistic_direct(instances::to_sample(inst.x), instances::to_sample(inst.y),
                                            instances::to_sample(inst.z), inst.kernel,
                                            {parse_filter_family(inst.filter), inst.lambda});
        worst = std::max(worst, std::abs(got - expected));
    }
    return {worst <= 1e-10, "100 instances (" + std::to_string(sobolev) + " sobolev), worst |diff| = " +
                                fmt("%.3g", worst) + " (tol 1e-10)"};
}

Verdict a2_effective_dimension() {
    Rng rng(20240602);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const auto n = static_cast<Eigen::Index>(2 + rng.below(49));
        const auto d = static_cast<Eigen::Index>(1 + rng.below(5));
        Sample s(n, d);
        for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = rng.normal();
        const Matrix k = gram_matrix(KernelSpec::gaussian(0.5 + 2.0 * rng.uniform() * static_cast<double>(d),
                                                          static_cast<std::size_t>(d)),
                                     s);
        const double lambda = std::pow(10.0, -4.0 + 4.0 * rng.uniform());
        const Matrix shifted = k + lambda * static_cast<double>(n) * Matrix::Identity(n, n);
        const double direct = shifted.ldlt().solve(k).trace();
        worst = std::max(worst, std::abs(empirical_effective_dimension(eigendecompose_reference(k), lambda) - direct));
    }
    return {worst <= 1e-8, "50 Gram matrices, worst |diff| = " + fmt("%.3g", worst) + " (tol 1e-8)"};
}

// A3 and A4 share one run: both tests see the same replicates.
std::vector<PowerRecord> null_fixed_lambda_run() {
    ExperimentPlan p = default_plan(Study::method_comparison, DistributionFamily::gaussian_mean, false);
    p.dimensions = {10};
    p.thetas = {0.0};
    p.methods = {Method::spectral_perm, Method::spectral_effdim};
    p.lambdas = {0.01};
    p.reps = 200;
    p.permutations = 400;
    p.seed = 303;
    return run_power_study(p, options());
}

Verdict a3_permutation_level(const std::vector<PowerRecord>& rows) {
    const auto& r = find_row(rows, "spectral_perm", 0.0);
    const bool pass = r.rate >= kSizeLo && r.rate <= kSizeHi;
    return {pass, "size = " + fmt("%.3f", r.rate) + " over 200 reps (band [0.021, 0.09])"};
}

Verdict a4_effdim_conservative(const std::vector<PowerRecord>& rows) {
    const auto& r = find_row(rows, "spectral_effdim", 0.0);
    return {r.rate <= 0.05, "size = " + fmt("%.3f", r.rate) + " over 200 reps (limit 0.05)"};
}

// KS distance for a distribution supported on {1/K, ..., 1}; both CDFs jump
// on the same atoms, so the supremum is attained there.
double discrete_ks_p_value(std::vector<double> p_values, std::size_t atoms) {
    std::sort(p_values.begin(), p_values.end());
    const double n = static_cast<double>(p_values.size());
    double dmax = 0.0;
    std::size_t below = 0;
    for (std::size_t k = 1; k <= atoms; ++k) {
        const double atom = static_cast<double>(k) / static_cast<double>(atoms);
        while (below < p_values.size() && p_values[below] <= atom + 1e-12) ++below;
        dmax = std::max(dmax, std::abs(static_cast<double>(below) / n - atom));
    }
    const double t = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * dmax;
    double p = 0.0;
    for (int j = 1; j <= 100; ++j) p += 2.0 * ((j % 2) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * t * t);
    return std::clamp(p, 0.0, 1.0);
}

Verdict a5_p_value_uniformity() {
    const std::size_t reps = 500, permutations = 199, d = 10;
    std::vector<double> p_values(reps);
    parallel_for(reps, default_threads(), [&](std::size_t rep) {
        const Replicate r = draw_replicate({DistributionFamily::gaussian_mean, d, 0.0}, 50, 50, 30,
                                           replicate_seed(505, d, rep));
        const KernelSpec k = KernelSpec::gaussian(null_pool_bandwidth(r), d);
        const GofOutcome o = test_permutation(r.x, r.y, r.d, k, {FilterFamily::tikhonov, 0.01}, 0.05, permutations,
                                              r.permutation_seed);
        p_values[rep] = *o.p_value;
    });
    const double ks = discrete_ks_p_value(p_values, permutations + 1);
    return {ks > 0.01, "KS p = " + fmt("%.3f", ks) + " over 500 reps, B = 199 (limit > 0.01)"};
}

Verdict a6_filter_bounds() {
    std::vector<double> grid;
    for (int i = 0; i < 5000; ++i) grid.push_back(static_cast<double>(i) / 4999.0);
    for (int i = 0; i < 5000; ++i) grid.push_back(std::pow(10.0, -12.0 + 12.0 * i / 4999.0));
    std::size_t violations = 0, checks = 0;
    for (auto family : {FilterFamily::tikhonov, FilterFamily::cutoff, FilterFamily::landweber}) {
        for (double lambda : {1e-6, 1e-4, 1e-2, 1.0}) {
            const FilterSpec f{family, lambda};
            const double b = f.b();
            for (double x : grid) {
                const double g = filter_value(f, x);
                // Four ulps of slack for the final multiply or divide.
                violations += std::abs(g) > b / lambda * (1 + 1e-15) ? 1 : 0;
                violations += std::abs(g * x) > b * (1 + 1e-15) ? 1 : 0;
                checks += 2;
            }
        }
    }
    return {violations == 0, std::to_string(grid.size()) + " points x 3 filters x 4 lambdas, " +
                                 std::to_string(violations) + " violations of " + std::to_string(checks) + " checks"};
}

Verdict a7_regularization_effect() {
    ExperimentPlan p = default_plan(Study::regularization_effect, DistributionFamily::sobolev_density, false);
    p.thetas = {0.0, 0.4, 1.0};
    p.reps = 100;
    p.permutations = 400;
    p.seed = 707;
    const auto rows = run_regularization_effect(p, options());
    const Interval band = binomial_band(p.reps, p.alpha);
    bool sizes_ok = true;
    std::string best;
    double best_power = -1.0, best_mean = -1.0, best_gap = 0.0;
    std::string per_lambda;
    for (double lambda : p.lambdas) {
        const std::string label = format_number(lambda);
        const double size = find_row(rows, "spectral_perm", 0.0, label).rate;
        const double mid = find_row(rows, "spectral_perm", 0.4, label).rate;
        const double top = find_row(rows, "spectral_perm", 1.0, label).rate;
        sizes_ok = sizes_ok && size >= band.lo && size <= band.hi;
        per_lambda += " " + label + ":" + fmt("%.2f", size) + "/" + fmt("%.2f", mid) + "/" + fmt("%.2f", top);
        // Best lambda: highest power at c = 1.0, ties broken by mean power.
        const double mean = 0.5 * (mid + top);
        if (top > best_power || (top == best_power && mean > best_mean)) {
            best_power = top;
            best_mean = mean;
            best = label;
            best_gap = top - mid;
        }
    }
    const bool pass = sizes_ok && best_gap >= 0.2;
    return {pass, std::string("sizes ") + (sizes_ok ? "in" : "outside") + " band [" + fmt("%.2f", band.lo) + ", " +
                      fmt("%.2f", band.hi) + "]; best lambda " + best + ": power(1.0) - power(0.4) = " +
                      fmt("%.2f", best_gap) + " (need >= 0.2); lambda:size/c0.4/c1.0" + per_lambda};
}

Verdict a8_variance_comparison() {
    ExperimentPlan p = default_plan(Study::variance_comparison, DistributionFamily::gaussian_mean, false);
    p.variance_sizes = {};
    p.variance_lambdas = {};
    p.variance_dimensions = {5, 10, 20};
    p.variance_n = 200;
    p.variance_lambda = 0.01;
    p.reference_size = 200;
    p.reps = 200;
    p.seed = 808;
    const auto rows = run_variance_comparison(p, options());
    bool pass = rows.size() == 3;
    std::string detail;
    for (const auto& r : rows) {
        const double ratio = r.ours_variance / r.comparator_variance;
        pass = pass && r.ours_variance <= 1.2 * r.comparator_variance;
        detail += " d=" + std::to_string(r.d) + ":" + fmt("%.3f", ratio);
    }
    return {pass, "ours/comparator variance ratio (limit 1.2):" + detail};
}

Verdict a9_filter_generality() {
    ExperimentPlan p = default_plan(Study::filter_generality, DistributionFamily::uniform_scale, false);
    p.methods = {Method::spectral_adaptive};
    p.dimensions = {10};
    p.reps = 100;
    p.permutations = 400;
    p.seed = 909;
    const auto rows = run_filter_generality(p, options());
    const std::vector<std::string> filters{"tikhonov", "cutoff", "landweber"};
    double worst_separation = 0.0, worst_raw = 0.0;
    for (double theta : p.thetas) {
        for (std::size_t a = 0; a < filters.size(); ++a) {
            for (std::size_t b = a + 1; b < filters.size(); ++b) {
                const auto& ra = find_row(rows, "spectral_adaptive", theta, "", filters[a]);
                const auto& rb = find_row(rows, "spectral_adaptive", theta, "", filters[b]);
                // Distance between the two Wilson intervals; zero when they overlap.
                const double separation = std::max(0.0, std::max(ra.lo, rb.lo) - std::min(ra.hi, rb.hi));
                worst_separation = std::max(worst_separation, separation);
                worst_raw = std::max(worst_raw, std::abs(ra.rate - rb.rate));
            }
        }
    }
    return {worst_separation <= 0.15, "max gap beyond Wilson bands = " + fmt("%.3f", worst_separation) +
                                          " (limit 0.15); max raw gap = " + fmt("%.3f", worst_raw)};
}

Verdict a10_baselines() {
    ExperimentPlan p = default_plan(Study::method_comparison, DistributionFamily::gaussian_mean, false);
    p.methods = {Method::mmdagg_uniform, Method::energy_perm};
    p.dimensions = {10};
    p.thetas = {0.0, 1.2};
    p.reps = 200;
    p.seed = 1010;
    const auto rows = run_method_comparison(p, options());
    bool pass = true;
    std::string detail;
    for (const std::string m : {"energy_perm", "mmdagg_uniform"}) {
        const double size = find_row(rows, m, 0.0).rate, power = find_row(rows, m, 1.2).rate;
        pass = pass && size >= kSizeLo && size <= kSizeHi && power >= 0.9;
        detail += " " + m + ": size " + fmt("%.3f", size) + ", power(1.2) " + fmt("%.3f", power) + ";";
    }
    return {pass, detail.substr(1) + " (band [0.021, 0.09], power >= 0.9)"};
}

Verdict a11_determinism() {
    ExperimentPlan p = default_plan(Study::method_comparison, DistributionFamily::gaussian_var, true);
    p.methods = {Method::spectral_perm,    Method::spectral_effdim, Method::spectral_adaptive,
                 Method::centered_adaptive, Method::mmdagg_uniform,  Method::energy_perm};
    p.dimensions = {3, 5};
    p.thetas = {1.0, 1.5};
    p.n = 40;
    p.m = 60;
    p.reference_size = 30;
    p.reps = 12;
    p.permutations = 199;
    p.lambda_grid = {1e-3, 1.0, 32.0};
    p.bandwidth_grid = {0.5, 2.0, 2.0};
    p.mmdagg_b1 = 100;
    p.mmdagg_b2 = 100;
    p.mmdagg_b3 = 30;
    p.seed = 1111;
    auto outputs = [&](std::size_t threads) {
        const std::string csv = to_csv(run_power_study(p, {threads, nullptr}), kPowerHeader);
        std::string svg;
        for (const auto& panel : render_power_panels(parse_power_csv(csv))) svg += panel.file_name + panel.svg;
        ExperimentPlan v = default_plan(Study::variance_comparison, DistributionFamily::gaussian_mean, true);
        v.reps = 6;
        v.reference_size = 20;
        v.variance_sizes = {10, 20};
        v.variance_dimensions = {2, 3};
        v.variance_lambdas = {0.1};
        v.variance_n = 15;
        v.variance_d = 2;
        v.seed = 1111;
        return csv + svg + to_csv(run_variance_comparison(v, {threads, nullptr}), kVarianceHeader);
    };
    const std::string one = outputs(1), again = outputs(1), four = outputs(4), seven = outputs(7);
    const bool pass = one == again && one == four && one == seven;
    return {pass, "power CSV + SVG + variance CSV (" + std::to_string(one.size()) +
                      " bytes) identical across reruns and 1/4/7 threads: " + (pass ? "yes" : "no")};
}

Verdict a12_sampler_oracles() {
    // Chi-square goodness of fit of the perturbed density against its own pdf.
    const int bins = 50, draws = 100000;
    double worst_chi_p = 1.0;
    for (double c : {0.8, -0.6}) {
        const Sample s = sample({DistributionFamily::sobolev_density, 1, c}, draws, 1212);
        std::vector<int> counts(bins, 0);
        for (Eigen::Index i = 0; i < s.rows(); ++i) ++counts[std::min(bins - 1, static_cast<int>(s(i, 0) * bins))];
        double chi = 0.0;
        for (int b = 0; b < bins; ++b) {
            const double expected =
                draws * (sobolev_cdf(c, (b + 1.0) / bins) - sobolev_cdf(c, static_cast<double>(b) / bins));
            chi += (counts[b] - expected) * (counts[b] - expected) / expected;
        }
        worst_chi_p = std::min(worst_chi_p, oracle::chi_square_sf(chi, bins - 1));
    }
    // Uniform vMF: unit norm and zero mean per coordinate.
    const Eigen::Index n = 100000;
    const Sample v = sample({DistributionFamily::vmf, 3, 0.0}, static_cast<std::size_t>(n), 1213);
    double worst_norm = 0.0, worst_z = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) worst_norm = std::max(worst_norm, std::abs(v.row(i).norm() - 1.0));
    for (Eigen::Index j = 0; j < 3; ++j) {
        const double mean = v.col(j).mean();
        const double var = (v.col(j).array() - mean).square().mean();
        worst_z = std::max(worst_z, std::abs(mean) / std::sqrt(var / static_cast<double>(n)));
    }
    // Inverse-CDF round trip.
    Rng rng(1214);
    double worst_round = 0.0;
    for (int t = 0; t < 100000; ++t) {
        const double c = 2 * rng.uniform() - 1, u = rng.uniform();
        worst_round = std::max(worst_round, std::abs(sobolev_cdf(c, inverse_cdf_sobolev(c, u)) - u));
    }
    const bool pass = worst_chi_p > 0.01 && worst_norm <= 1e-12 && worst_z <= 4.0 && worst_round <= 1e-12;
    return {pass, "chi-square p = " + fmt("%.3f", worst_chi_p) + " (> 0.01); vMF |norm-1| = " +
                      fmt("%.1e", worst_norm) + ", max |mean|/SE = " + fmt("%.2f", worst_z) +
                      " (<= 4); round trip = " + fmt("%.1e", worst_round) + " (<= 1e-12)"};
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](const char* id, const std::function<Verdict()>& check) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failures += v.pass ? 0 : 1;
        std::printf("%s %s  %s  [%.1f s]\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str(), seconds);
        std::fflush(stdout);
    };
    std::printf("acceptance: %zu worker thread(s)\n", default_threads());
    report("A1", a1_oracle_equivalence);
    report("A2", a2_effective_dimension);
    std::vector<PowerRecord> null_rows;
    report("A3", [&] {
        null_rows = null_fixed_lambda_run();
        return a3_permutation_level(null_rows);
    });
    report("A4", [&] { return a4_effdim_conservative(null_rows); });
    report("A5", a5_p_value_uniformity);
    report("A6", a6_filter_bounds);
    report("A7", a7_regularization_effect);
    report("A8", a8_variance_comparison);
    report("A9", a9_filter_generality);
    report("A10", a10_baselines);
    report("A11", a11_determinism);
    report("A12", a12_sampler_oracles);
    std::printf("acceptance: %d of 12 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
