#pragma once

// Plan files and run manifests. A plan is `key = value` lines with `#`
// comments; lists are comma separated and grids are `lo:hi:ratio`. Parsing is
// strict: unknown or repeated keys and malformed values raise ConfigError.
// Every default is materialized before the plan reaches the harness.

#include "srgof/harness.hpp"

#include "json.hpp"

#include <charconv>
#include <ctime>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifndef SRGOF_COMMIT
#define SRGOF_COMMIT "unknown"
#endif

namespace srgof {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kPlanSchema = 1;

// ============================================================================
// VALUE PARSING
// ============================================================================

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

[[noreturn]] inline void type_error(const std::string& key, const std::string& value, const char* expected) {
    throw ConfigError("plan key '" + key + "': expected " + expected + ", got '" + value + "'");
}

inline double parse_double(const std::string& key, const std::string& text) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (text.empty() || ec != std::errc{} || ptr != last || !std::isfinite(v)) type_error(key, text, "a number");
    return v;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& text) {
    std::uint64_t v = 0;
    const char* first = text.data();
    const char* last = first + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (text.empty() || ec != std::errc{} || ptr != last) type_error(key, text, "an unsigned integer");
    return v;
}

inline std::size_t parse_size(const std::string& key, const std::string& text) {
    return static_cast<std::size_t>(parse_u64(key, text));
}

inline std::vector<std::string> parse_list(const std::string& key, const std::string& text) {
    auto items = split(text, ',');
    for (const auto& i : items) {
        if (i.empty()) type_error(key, text, "a comma-separated list");
    }
    return items;
}

inline std::vector<double> parse_doubles(const std::string& key, const std::string& text) {
    std::vector<double> out;
    for (const auto& i : parse_list(key, text)) out.push_back(parse_double(key, i));
    return out;
}

inline std::vector<std::size_t> parse_sizes(const std::string& key, const std::string& text) {
    std::vector<std::size_t> out;
    for (const auto& i : parse_list(key, text)) out.push_back(parse_size(key, i));
    return out;
}

inline GridSpec parse_grid(const std::string& key, const std::string& text) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) type_error(key, text, "a grid lo:hi:ratio");
    GridSpec g{parse_double(key, parts[0]), parse_double(key, parts[1]), parse_double(key, parts[2])};
    require_config(g.lo > 0.0 && g.hi >= g.lo && g.ratio > 1.0,
                   "plan key '" + key + "': grid needs 0 < lo <= hi and ratio > 1");
    return g;
}

template <typename T, typename F>
std::vector<T> parse_names(const std::string& key, const std::string& text, F parse_one) {
    std::vector<T> out;
    for (const auto& i : parse_list(key, text)) out.push_back(parse_one(i));
    return out;
}

inline std::string grid_text(const GridSpec& g) {
    return format_number(g.lo) + ":" + format_number(g.hi) + ":" + format_number(g.ratio);
}

}  // namespace detail

// ============================================================================
// PLAN FILES
// ============================================================================

inline const std::vector<std::string>& plan_keys() {
    static const std::vector<std::string> keys{
        "schema",  "study",  "family",       "d",          "theta",      "methods",    "filters",
        "kernel",  "lambdas", "lambda_grid", "bandwidth_grid", "mmdagg_multipliers", "mmdagg_b1", "mmdagg_b2",
        "mmdagg_b3", "n",    "m",            "N",          "alpha",      "B",          "reps",
        "seed",    "eig_floor", "variance_sizes", "variance_d_list", "variance_lambdas", "variance_n",
        "variance_d", "variance_lambda", "output"};
    return keys;
}

using PlanEntries = std::map<std::string, std::string>;

// Key/value pairs of a plan text; errors carry the line number.
inline PlanEntries read_plan_entries(const std::string& text) {
    PlanEntries entries;
    std::istringstream in(text);
    std::string line;
    std::size_t number = 0;
    const auto& keys = plan_keys();
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = "plan line " + std::to_string(number) + ": ";
        require_config(eq != std::string::npos, where + "expected 'key = value', got '" + line + "'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        require_config(std::find(keys.begin(), keys.end(), key) != keys.end(), where + "unknown key '" + key + "'");
        require_config(!entries.count(key), where + "duplicate key '" + key + "'");
        require_config(!value.empty(), where + "key '" + key + "' has no value");
        entries[key] = value;
    }
    return entries;
}

// Resolves entries into a plan. Study and family pick the default template;
// quick mode shrinks reps and theta grids unless the plan sets them.
inline ExperimentPlan plan_from_entries(const PlanEntries& e, bool quick = false) {
    using namespace detail;
    auto has = [&](const char* k) { return e.count(k) > 0; };
    auto get = [&](const char* k) { return e.at(k); };

    if (has("schema")) {
        const auto schema = parse_u64("schema", get("schema"));
        require_config(schema == static_cast<std::uint64_t>(kPlanSchema),
                       "unsupported plan schema " + std::to_string(schema) + " (expected 1)");
    }
    std::optional<DistributionFamily> family;
    if (has("family")) family = parse_distribution_family(get("family"));
    Study study = family ? default_study(*family) : Study::method_comparison;
    if (has("study")) study = parse_study(get("study"));
    if (!family) {
        family = study == Study::regularization_effect ? DistributionFamily::sobolev_density
                 : study == Study::filter_generality   ? DistributionFamily::uniform_scale
                                                       : DistributionFamily::gaussian_mean;
    }

    ExperimentPlan p = default_plan(study, *family, quick);
    if (has("d")) p.dimensions = parse_sizes("d", get("d"));
    if (has("theta")) p.thetas = parse_doubles("theta", get("theta"));
    if (has("methods")) p.methods = parse_names<Method>("methods", get("methods"), parse_method);
    if (has("filters")) p.filters = parse_names<FilterFamily>("filters", get("filters"), parse_filter_family);
    if (has("kernel")) p.kernel = parse_kernel_family(get("kernel"));
    if (has("lambdas")) p.lambdas = parse_doubles("lambdas", get("lambdas"));
    if (has("lambda_grid")) p.lambda_grid = parse_grid("lambda_grid", get("lambda_grid"));
    if (has("bandwidth_grid")) p.bandwidth_grid = parse_grid("bandwidth_grid", get("bandwidth_grid"));
    if (has("mmdagg_multipliers")) p.mmdagg_multipliers = parse_doubles("mmdagg_multipliers", get("mmdagg_multipliers"));
    if (has("mmdagg_b1")) p.mmdagg_b1 = parse_size("mmdagg_b1", get("mmdagg_b1"));
    if (has("mmdagg_b2")) p.mmdagg_b2 = parse_size("mmdagg_b2", get("mmdagg_b2"));
    if (has("mmdagg_b3")) p.mmdagg_b3 = parse_size("mmdagg_b3", get("mmdagg_b3"));
    if (has("n")) p.n = parse_size("n", get("n"));
    if (has("m")) p.m = parse_size("m", get("m"));
    if (has("N")) p.reference_size = parse_size("N", get("N"));
    if (has("alpha")) p.alpha = parse_double("alpha", get("alpha"));
    if (has("B")) p.permutations = parse_size("B", get("B"));
    if (has("reps")) p.reps = parse_size("reps", get("reps"));
    if (has("seed")) p.seed = parse_u64("seed", get("seed"));
    if (has("eig_floor")) p.eig_floor = parse_double("eig_floor", get("eig_floor"));
    if (has("variance_sizes")) p.variance_sizes = parse_sizes("variance_sizes", get("variance_sizes"));
    if (has("variance_d_list")) p.variance_dimensions = parse_sizes("variance_d_list", get("variance_d_list"));
    if (has("variance_lambdas")) p.variance_lambdas = parse_doubles("variance_lambdas", get("variance_lambdas"));
    if (has("variance_n")) p.variance_n = parse_size("variance_n", get("variance_n"));
    if (has("variance_d")) p.variance_d = parse_size("variance_d", get("variance_d"));
    if (has("variance_lambda")) p.variance_lambda = parse_double("variance_lambda", get("variance_lambda"));
    if (has("output")) p.output = get("output");
    validate_plan(p);
    return p;
}

inline ExperimentPlan parse_plan(const std::string& text, bool quick = false) {
    return plan_from_entries(read_plan_entries(text), quick);
}

// Canonical plan text; parsing it gives back the same plan.
inline std::string plan_to_text(const ExperimentPlan& p) {
    auto join = [](const auto& items, auto fmt) {
        std::string out;
        for (const auto& i : items) out += (out.empty() ? "" : ", ") + fmt(i);
        return out;
    };
    auto num = [](double v) { return format_number(v); };
    auto size = [](std::size_t v) { return std::to_string(v); };
    auto name = [](auto v) { return to_string(v); };
    char seed_buf[32];
    std::snprintf(seed_buf, sizeof seed_buf, "%llu", static_cast<unsigned long long>(p.seed));
    std::ostringstream o;
    o << "schema = " << p.schema << "\n"
      << "study = " << to_string(p.study) << "\n"
      << "family = " << to_string(p.family) << "\n"
      << "d = " << join(p.dimensions, size) << "\n";
    if (!p.thetas.empty()) o << "theta = " << join(p.thetas, num) << "\n";
    if (!p.methods.empty()) o << "methods = " << join(p.methods, name) << "\n";
    o << "filters = " << join(p.filters, name) << "\n"
      << "kernel = " << to_string(p.kernel) << "\n"
      << "lambdas = " << join(p.lambdas, num) << "\n"
      << "lambda_grid = " << detail::grid_text(p.lambda_grid) << "\n"
      << "bandwidth_grid = " << detail::grid_text(p.bandwidth_grid) << "\n"
      << "mmdagg_multipliers = " << join(p.mmdagg_multipliers, num) << "\n"
      << "mmdagg_b1 = " << p.mmdagg_b1 << "\nmmdagg_b2 = " << p.mmdagg_b2 << "\nmmdagg_b3 = " << p.mmdagg_b3 << "\n"
      << "n = " << p.n << "\nm = " << p.m << "\nN = " << p.reference_size << "\n"
      << "alpha = " << num(p.alpha) << "\nB = " << p.permutations << "\nreps = " << p.reps << "\n"
      << "seed = " << seed_buf << "\neig_floor = " << num(p.eig_floor) << "\n"
      << "variance_sizes = " << join(p.variance_sizes, size) << "\n"
      << "variance_d_list = " << join(p.variance_dimensions, size) << "\n"
      << "variance_lambdas = " << join(p.variance_lambdas, num) << "\n"
      << "variance_n = " << p.variance_n << "\nvariance_d = " << p.variance_d << "\n"
      << "variance_lambda = " << num(p.variance_lambda) << "\n"
      << "output = " << p.output << "\n";
    return o.str();
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require_config(static_cast<bool>(in), "cannot open '" + path + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// ============================================================================
// MANIFEST
// ============================================================================

struct RunManifest {
    int schema = kPlanSchema;
    ExperimentPlan plan;
    std::uint64_t seed = 0;
    std::string timestamp;
    std::string tool_version = kToolVersion;
    std::string commit = SRGOF_COMMIT;
    std::string rng_stream = kStreamName;
};

inline nlohmann::json plan_to_json(const ExperimentPlan& p) {
    auto names = [](const auto& items) {
        std::vector<std::string> out;
        for (const auto& i : items) out.push_back(to_string(i));
        return out;
    };
    auto grid = [](const GridSpec& g) { return nlohmann::json{{"lo", g.lo}, {"hi", g.hi}, {"ratio", g.ratio}}; };
    return {{"schema", p.schema},
            {"study", to_string(p.study)},
            {"family", to_string(p.family)},
            {"d", p.dimensions},
            {"theta", p.thetas},
            {"methods", names(p.methods)},
            {"filters", names(p.filters)},
            {"kernel", to_string(p.kernel)},
            {"lambdas", p.lambdas},
            {"lambda_grid", grid(p.lambda_grid)},
            {"bandwidth_grid", grid(p.bandwidth_grid)},
            {"mmdagg_multipliers", p.mmdagg_multipliers},
            {"mmdagg_b1", p.mmdagg_b1},
            {"mmdagg_b2", p.mmdagg_b2},
            {"mmdagg_b3", p.mmdagg_b3},
            {"n", p.n},
            {"m", p.m},
            {"N", p.reference_size},
            {"alpha", p.alpha},
            {"B", p.permutations},
            {"reps", p.reps},
            {"seed", p.seed},
            {"eig_floor", p.eig_floor},
            {"variance_sizes", p.variance_sizes},
            {"variance_d_list", p.variance_dimensions},
            {"variance_lambdas", p.variance_lambdas},
            {"variance_n", p.variance_n},
            {"variance_d", p.variance_d},
            {"variance_lambda", p.variance_lambda},
            {"output", p.output}};
}

inline ExperimentPlan plan_from_json(const nlohmann::json& j) {
    require_config(j.is_object(), "manifest plan must be a JSON object");
    const auto& keys = plan_keys();
    for (const auto& [k, v] : j.items()) {
        require_config(std::find(keys.begin(), keys.end(), k) != keys.end(), "manifest plan: unknown key '" + k + "'");
    }
    for (const auto& k : keys) require_config(j.contains(k), "manifest plan: missing key '" + k + "'");
    auto grid = [&](const char* k) {
        const auto& g = j.at(k);
        return GridSpec{g.at("lo").get<double>(), g.at("hi").get<double>(), g.at("ratio").get<double>()};
    };
    auto names = [&](const char* k, auto parse_one) {
        std::vector<decltype(parse_one(std::string{}))> out;
        for (const auto& s : j.at(k)) out.push_back(parse_one(s.get<std::string>()));
        return out;
    };
    ExperimentPlan p;
    try {
        p.schema = j.at("schema").get<int>();
        p.study = parse_study(j.at("study").get<std::string>());
        p.family = parse_distribution_family(j.at("family").get<std::string>());
        p.dimensions = j.at("d").get<std::vector<std::size_t>>();
        p.thetas = j.at("theta").get<std::vector<double>>();
        p.methods = names("methods", parse_method);
        p.filters = names("filters", parse_filter_family);
        p.kernel = parse_kernel_family(j.at("kernel").get<std::string>());
        p.lambdas = j.at("lambdas").get<std::vector<double>>();
        p.lambda_grid = grid("lambda_grid");
        p.bandwidth_grid = grid("bandwidth_grid");
        p.mmdagg_multipliers = j.at("mmdagg_multipliers").get<std::vector<double>>();
        p.mmdagg_b1 = j.at("mmdagg_b1").get<std::size_t>();
        p.mmdagg_b2 = j.at("mmdagg_b2").get<std::size_t>();
        p.mmdagg_b3 = j.at("mmdagg_b3").get<std::size_t>();
        p.n = j.at("n").get<std::size_t>();
        p.m = j.at("m").get<std::size_t>();
        p.reference_size = j.at("N").get<std::size_t>();
        p.alpha = j.at("alpha").get<double>();
        p.permutations = j.at("B").get<std::size_t>();
        p.reps = j.at("reps").get<std::size_t>();
        p.seed = j.at("seed").get<std::uint64_t>();
        p.eig_floor = j.at("eig_floor").get<double>();
        p.variance_sizes = j.at("variance_sizes").get<std::vector<std::size_t>>();
        p.variance_dimensions = j.at("variance_d_list").get<std::vector<std::size_t>>();
        p.variance_lambdas = j.at("variance_lambdas").get<std::vector<double>>();
        p.variance_n = j.at("variance_n").get<std::size_t>();
        p.variance_d = j.at("variance_d").get<std::size_t>();
        p.variance_lambda = j.at("variance_lambda").get<double>();
        p.output = j.at("output").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("manifest plan: ") + e.what());
    }
    validate_plan(p);
    return p;
}

inline std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline RunManifest make_manifest(const ExperimentPlan& plan) {
    RunManifest m;
    m.plan = plan;
    m.seed = plan.seed;
    m.timestamp = utc_timestamp();
    return m;
}

inline std::string manifest_to_json(const RunManifest& m) {
    const nlohmann::json j{{"schema", m.schema},         {"plan", plan_to_json(m.plan)}, {"seed", m.seed},
                           {"timestamp", m.timestamp},   {"tool_version", m.tool_version}, {"commit", m.commit},
                           {"rng_stream", m.rng_stream}};
    return j.dump(2) + "\n";
}

inline RunManifest manifest_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
    }
    RunManifest m;
    try {
        m.schema = j.at("schema").get<int>();
        require_config(m.schema == kPlanSchema, "unsupported manifest schema " + std::to_string(m.schema));
        m.plan = plan_from_json(j.at("plan"));
        m.seed = j.at("seed").get<std::uint64_t>();
        m.timestamp = j.at("timestamp").get<std::string>();
        m.tool_version = j.at("tool_version").get<std::string>();
        m.commit = j.value("commit", std::string("unknown"));
        m.rng_stream = j.value("rng_stream", std::string(kStreamName));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("manifest: ") + e.what());
    }
    require_config(m.seed == m.plan.seed, "manifest seed differs from the plan seed");
    return m;
}

// A plan file or a manifest; manifests are recognized by a leading '{'.
inline ExperimentPlan load_plan(const std::string& path, bool quick = false) {
    const std::string text = read_text_file(path);
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') return manifest_from_json(text).plan;
    return parse_plan(text, quick);
}

}  // namespace srgof
