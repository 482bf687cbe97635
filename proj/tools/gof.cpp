// Command-line front end: one-shot tests on sample files, power/size/variance
// studies driven by plan files, and plot rendering.

#include "srgof/srgof.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace srgof;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kInput = 3, kInternal = 4 };

// Plan-level overrides shared by the study subcommands.
struct StudyFlags {
    std::string plan;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<double> alpha;
    std::optional<std::size_t> permutations;
    std::optional<std::size_t> reps;
    std::optional<std::string> lambda_grid;
    std::optional<std::string> bandwidth_grid;
    bool quick = false;
    std::size_t threads = default_threads();
};

void add_study_flags(CLI::App* cmd, StudyFlags& f) {
    cmd->add_option("--plan", f.plan, "plan file or run manifest")->required();
    cmd->add_option("--out", f.out, "output directory (default: the plan's output)");
    cmd->add_option("--seed", f.seed, "override the plan seed");
    cmd->add_option("--alpha", f.alpha, "override the significance level");
    cmd->add_option("--B", f.permutations, "override the number of permutations");
    cmd->add_option("--reps", f.reps, "override the number of replicates");
    cmd->add_option("--lambda-grid", f.lambda_grid, "adaptive lambda grid lo:hi:ratio");
    cmd->add_option("--bandwidth-grid", f.bandwidth_grid, "adaptive bandwidth multipliers lo:hi:ratio");
    cmd->add_flag("--quick", f.quick, "reduced reps and grids");
    cmd->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
}

ExperimentPlan resolve_plan(const StudyFlags& f) {
    ExperimentPlan p = load_plan(f.plan, f.quick);
    if (f.seed) p.seed = *f.seed;
    if (f.alpha) p.alpha = *f.alpha;
    if (f.permutations) p.permutations = *f.permutations;
    if (f.reps) p.reps = *f.reps;
    if (f.lambda_grid) p.lambda_grid = detail::parse_grid("--lambda-grid", *f.lambda_grid);
    if (f.bandwidth_grid) p.bandwidth_grid = detail::parse_grid("--bandwidth-grid", *f.bandwidth_grid);
    if (!f.out.empty()) p.output = f.out;
    validate_plan(p);
    return p;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    require_input(static_cast<bool>(out), "cannot write '" + path.string() + "'");
    out << text;
}

int run_study(const StudyFlags& f, const std::string& kind) {
    ExperimentPlan p = resolve_plan(f);
    if (kind == "size") {
        require_config(p.study != Study::variance_comparison, "size runs need a power study plan");
        p.thetas = {DistributionSpec{p.family, p.dimensions.front(), 0.0}.null_value()};
    }
    if (kind == "variance") {
        require_config(p.study == Study::variance_comparison, "gof variance needs study = variance_comparison");
    } else {
        require_config(p.study != Study::variance_comparison, "gof " + kind + " needs a power study plan");
    }
    const fs::path dir = p.output;
    fs::create_directories(dir);
    write_file(dir / "manifest.json", manifest_to_json(make_manifest(p)));
    const RunOptions opt{f.threads, &std::cerr};
    if (kind == "variance") {
        write_file(dir / "variance.csv", to_csv(run_variance_comparison(p, opt), kVarianceHeader));
        std::cerr << "[srgof] wrote " << (dir / "variance.csv").string() << "\n";
        return kOk;
    }
    std::vector<PowerRecord> rows;
    switch (p.study) {
        case Study::regularization_effect: rows = run_regularization_effect(p, opt); break;
        case Study::method_comparison: rows = run_method_comparison(p, opt); break;
        default: rows = run_filter_generality(p, opt); break;
    }
    const fs::path csv = dir / (kind + ".csv");
    write_file(csv, to_csv(rows, kPowerHeader));
    for (const auto& svg : emit_plots(csv.string(), dir.string())) std::cerr << "[srgof] wrote " << svg << "\n";
    std::cerr << "[srgof] wrote " << csv.string() << "\n";
    return kOk;
}

struct TestFlags {
    std::string x, y, reference;
    std::size_t holdout = 0;
    std::string calibration = "permutation";
    std::string kernel = "gaussian";
    std::optional<double> bandwidth;
    std::string filter = "tikhonov";
    double lambda = 1e-2;
    double alpha = 0.05;
    std::size_t permutations = 400;
    std::string lambda_grid = "1e-6:5:64";
    std::string bandwidth_grid = "0.01:100:10";
    std::uint64_t seed = 1;
};

int run_test(const TestFlags& f) {
    const Sample x = read_sample_file(f.x);
    Sample y = read_sample_file(f.y);
    Sample d;
    if (!f.reference.empty()) {
        d = read_sample_file(f.reference);
    } else {
        // Hold out the last rows of the null sample as the reference sample.
        const auto total = static_cast<std::size_t>(y.rows());
        const std::size_t held = f.holdout ? f.holdout : total / 3;
        require_input(held >= 2 && total >= held + 2, "null sample too small to hold out a reference sample");
        d = y.bottomRows(static_cast<Eigen::Index>(held));
        y = Sample(y.topRows(static_cast<Eigen::Index>(total - held)));
    }
    const KernelFamily family = parse_kernel_family(f.kernel);
    const auto dim = static_cast<std::size_t>(x.cols());
    const double h_m = family == KernelFamily::gaussian ? (f.bandwidth ? *f.bandwidth : median_heuristic(stack_rows(d, y)))
                                                        : std::numeric_limits<double>::quiet_NaN();
    const KernelSpec kernel = family == KernelFamily::gaussian ? KernelSpec::gaussian(h_m, dim) : KernelSpec::sobolev(dim);
    const FilterSpec filter{parse_filter_family(f.filter), f.lambda};

    GofOutcome out;
    nlohmann::json extra = nlohmann::json::object();
    if (f.calibration == "permutation") {
        out = test_permutation(x, y, d, kernel, filter, f.alpha, f.permutations, f.seed);
    } else if (f.calibration == "effdim") {
        out = test_effdim(x, y, d, kernel, filter, f.alpha);
    } else if (f.calibration == "adaptive") {
        AdaptiveConfig c;
        c.kernel = family;
        c.filter = filter.family;
        c.alpha = f.alpha;
        c.permutations = f.permutations;
        c.lambdas = detail::parse_grid("--lambda-grid", f.lambda_grid).values();
        if (family == KernelFamily::gaussian) {
            for (double w : detail::parse_grid("--bandwidth-grid", f.bandwidth_grid).values()) c.bandwidths.push_back(w * h_m);
        }
        c.seed = f.seed;
        const AdaptiveResult r = adaptive_test(x, y, d, c);
        out = r.outcome;
        extra["corrected_alpha"] = r.corrected_alpha;
        extra["pairs"] = r.pairs.size();
    } else {
        throw ConfigError("unknown calibration '" + f.calibration + "' (expected permutation|effdim|adaptive)");
    }
    nlohmann::json j{{"calibration", to_string(out.calibration)},
                     {"statistic", out.statistic},
                     {"threshold", out.threshold},
                     {"reject", out.reject},
                     {"alpha", f.alpha},
                     {"n", x.rows()},
                     {"m", y.rows()},
                     {"N", d.rows()},
                     {"kernel", f.kernel},
                     {"filter", f.filter}};
    j["p_value"] = out.p_value ? nlohmann::json(*out.p_value) : nlohmann::json(nullptr);
    j["lambda"] = std::isnan(out.nuisance.lambda) ? nlohmann::json(nullptr) : nlohmann::json(out.nuisance.lambda);
    j["bandwidth"] = std::isnan(out.nuisance.bandwidth) ? nlohmann::json(nullptr) : nlohmann::json(out.nuisance.bandwidth);
    j.update(extra);
    std::cout << j.dump(2) << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral-regularized kernel goodness-of-fit tests"};
    app.set_version_flag("--version", std::string(kToolVersion) + " (" + SRGOF_COMMIT + ")");
    app.require_subcommand(1);

    TestFlags tf;
    auto* test = app.add_subcommand("test", "one-shot test of a sample against a null sample");
    test->add_option("--x", tf.x, "sample under test")->required();
    test->add_option("--y", tf.y, "sample from the null distribution")->required();
    test->add_option("--reference", tf.reference, "reference sample from the null (default: hold out from --y)");
    test->add_option("--N", tf.holdout, "rows of --y held out as the reference sample (default m/3)");
    test->add_option("--calibration", tf.calibration, "permutation | effdim | adaptive");
    test->add_option("--kernel", tf.kernel, "gaussian | sobolev");
    test->add_option("--bandwidth", tf.bandwidth, "gaussian bandwidth (default: median heuristic)");
    test->add_option("--filter", tf.filter, "tikhonov | cutoff | landweber");
    test->add_option("--lambda", tf.lambda, "regularization parameter");
    test->add_option("--alpha", tf.alpha, "significance level");
    test->add_option("--B", tf.permutations, "number of permutations");
    test->add_option("--lambda-grid", tf.lambda_grid, "adaptive lambda grid lo:hi:ratio");
    test->add_option("--bandwidth-grid", tf.bandwidth_grid, "adaptive bandwidth multipliers lo:hi:ratio");
    test->add_option("--seed", tf.seed, "permutation seed");

    StudyFlags power_flags, size_flags, variance_flags;
    auto* power = app.add_subcommand("power", "power study from a plan");
    add_study_flags(power, power_flags);
    auto* size = app.add_subcommand("size", "size study: the plan at the null parameter only");
    add_study_flags(size, size_flags);
    auto* variance = app.add_subcommand("variance", "variance comparison from a plan");
    add_study_flags(variance, variance_flags);

    std::string plot_csv, plot_out = ".";
    auto* plot = app.add_subcommand("plot", "render SVG power curves from a power CSV");
    plot->add_option("--csv", plot_csv, "power CSV")->required();
    plot->add_option("--out", plot_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*test) return run_test(tf);
        if (*power) return run_study(power_flags, "power");
        if (*size) return run_study(size_flags, "size");
        if (*variance) return run_study(variance_flags, "variance");
        if (*plot) {
            for (const auto& p : emit_plots(plot_csv, plot_out)) std::cerr << "[srgof] wrote " << p << "\n";
            return kOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kConfig;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kInput;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternal;
    }
    return kInternal;
}
