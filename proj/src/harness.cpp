#include "ctube/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "ctube/falconer.hpp"
#include "ctube/families.hpp"
#include "ctube/incidence.hpp"
#include "ctube/solids.hpp"

namespace ctube {

namespace {

using json = nlohmann::ordered_json;

enum class Type { integer, real, text };

struct KeySpec {
    Type type;
    ConfigValue fallback;
    std::function<std::string(const ConfigValue&)> guard;
};

std::string one_of(const ConfigValue& v, std::initializer_list<const char*> allowed) {
    const std::string& s = std::get<std::string>(v);
    for (const char* a : allowed)
        if (s == a) return "";
    std::string msg = "must be one of";
    for (const char* a : allowed) msg += std::string(" ") + a;
    return msg;
}

auto real_in(double lo, double hi, bool open_lo = true) {
    return [=](const ConfigValue& v) -> std::string {
        double x = std::get<double>(v);
        bool ok = std::isfinite(x) && (open_lo ? x > lo : x >= lo) && x <= hi;
        return ok ? "" : "out of range";
    };
}

auto int_at_least(long lo) {
    return [=](const ConfigValue& v) -> std::string { return std::get<long>(v) >= lo ? "" : "out of range"; };
}

const std::map<std::string, KeySpec>& schema() {
    static const std::map<std::string, KeySpec> keys = {
        {"n", {Type::integer, 2L, [](const ConfigValue& v) -> std::string {
                   long n = std::get<long>(v);
                   return n == 2 || n == 3 ? "" : "must be 2 or 3";
               }}},
        {"delta", {Type::real, 1.0 / 32, real_in(0, 0.5)}},
        {"big_w", {Type::real, 4.0, real_in(1, 1e6, false)}},
        {"big_n", {Type::integer, 1L, int_at_least(0)}},
        {"h0", {Type::integer, 1L, int_at_least(1)}},
        {"generator", {Type::text, std::string("spaced"),
                       [](const ConfigValue& v) { return one_of(v, {"spaced", "h0", "h0_at_most"}); }}},
        {"family", {Type::text, std::string(""), [](const ConfigValue&) { return std::string(); }}},
        {"s", {Type::real, 1.5, [](const ConfigValue& v) -> std::string {
                   double x = std::get<double>(v);
                   return x > 1 && x < 2 ? "" : "must lie in (1, 2)";
               }}},
        {"epsilon", {Type::real, 0.1, real_in(0, 10, false)}},
        {"constant", {Type::real, 100.0, real_in(0, 1e300)}},
        {"theorem", {Type::text, std::string("auto"), [](const ConfigValue& v) { return one_of(v, {"auto", "t41", "t42"}); }}},
        {"r_threshold", {Type::text, std::string("theorem"), [](const ConfigValue& v) { return one_of(v, {"theorem", "all"}); }}},
        {"mode", {Type::text, std::string("indexed"), [](const ConfigValue& v) { return one_of(v, {"indexed", "exhaustive"}); }}},
        {"radius", {Type::real, 1.0, real_in(0, 1)}},
        {"theta", {Type::real, std::acos(-1.0) / 4, real_in(0, std::acos(-1.0) / 2)}},
        {"samples", {Type::integer, 100000L, int_at_least(1)}},
        {"seed", {Type::integer, 1L, int_at_least(0)}},
        {"shard_count", {Type::integer, 1L, int_at_least(1)}},
        {"sigma", {Type::real, 0.5, real_in(0, 1)}},
        {"probes", {Type::integer, 100L, int_at_least(1)}},
        {"big_d", {Type::real, 16.0, real_in(2, 1e6, false)}},
        {"kind", {Type::text, std::string("mixed"),
                  [](const ConfigValue& v) { return one_of(v, {"concentrated", "generic", "mixed"}); }}},
        {"tubes", {Type::integer, 40L, int_at_least(1)}},
        {"slack", {Type::real, 64.0, real_in(0, 1e300)}},
        {"sweep_command", {Type::text, std::string("bound-verify"), [](const ConfigValue& v) {
                               return one_of(v, {"volume-check", "slice-check", "angle-check", "dualslab-check",
                                                 "spacing-gen", "spacing-check", "rich-count", "dichotomy-check",
                                                 "bound-verify", "falconer"});
                           }}},
        {"sweep_budget", {Type::integer, 64L, int_at_least(1)}},
    };
    return keys;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r"), b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

bool parse_double(const std::string& s, double& out) {
    std::size_t slash = s.find('/');
    if (slash != std::string::npos) {
        double a, b;
        if (!parse_double(trim(s.substr(0, slash)), a) || !parse_double(trim(s.substr(slash + 1)), b) || b == 0)
            return false;
        out = a / b;
        return true;
    }
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && p == end;
}

ConfigValue parse_value(const std::string& key, const std::string& raw, int line) {
    auto it = schema().find(key);
    if (it == schema().end()) throw ConfigError(line, "unknown key '" + key + "'");
    const KeySpec& spec = it->second;
    ConfigValue v;
    switch (spec.type) {
    case Type::integer: {
        long x = 0;
        const char* end = raw.data() + raw.size();
        auto [p, ec] = std::from_chars(raw.data(), end, x);
        if (ec != std::errc() || p != end) {
            double d;
            if (!parse_double(raw, d) || d != std::floor(d) || std::abs(d) > 9e15)
                throw ConfigError(line, "key '" + key + "' expects an integer, got '" + raw + "'");
            x = static_cast<long>(d);
        }
        v = x;
        break;
    }
    case Type::real: {
        double d;
        if (!parse_double(raw, d)) throw ConfigError(line, "key '" + key + "' expects a real number, got '" + raw + "'");
        v = d;
        break;
    }
    case Type::text:
        v = raw;
        break;
    }
    std::string bad = spec.guard(v);
    if (!bad.empty()) throw ConfigError(line, "key '" + key + "' = '" + raw + "' " + bad);
    return v;
}

std::string format_value(const ConfigValue& v) {
    if (auto p = std::get_if<long>(&v)) return std::to_string(*p);
    if (auto p = std::get_if<double>(&v)) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", *p);
        return buf;
    }
    return std::get<std::string>(v);
}

json value_json(const ConfigValue& v) {
    if (auto p = std::get_if<long>(&v)) return *p;
    if (auto p = std::get_if<double>(&v)) return *p;
    return std::get<std::string>(v);
}

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct Outcome {
    json result;
    bool pass = true;
    std::string reason;
    std::string csv;
    double metric = 0;  // headline number used by sweeps
};

std::string histogram_csv(const SpacingReport& rep) {
    std::string csv = "count,cover_tubes\n";
    for (const auto& [c, k] : rep.histogram) csv += std::to_string(c) + "," + std::to_string(k) + "\n";
    return csv;
}

json spacing_json(const SpacingReport& rep) {
    return {{"min", rep.min},           {"max", rep.max},
            {"mean", rep.mean},         {"cover_tubes", rep.cover_tubes},
            {"uncovered", rep.uncovered}, {"memberships", rep.memberships},
            {"verdict", rep.verdict}};
}

std::string profile_csv(const RichnessProfile& p) {
    std::string csv = "r,count\n";
    for (const auto& [r, c] : p.entries) csv += std::to_string(r) + "," + std::to_string(c) + "\n";
    return csv;
}

json profile_json(const RichnessProfile& p) {
    json entries = json::object();
    for (const auto& [r, c] : p.entries) entries[std::to_string(r)] = c;
    return {{"n", p.n},       {"delta", p.delta},         {"family", p.family}, {"mode", p.mode},
            {"grid_size", p.grid_size}, {"tubes", p.tubes}, {"entries", entries}};
}

TubeFamily family_from(const ExperimentConfig& cfg) {
    const std::string& path = cfg.text("family");
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw PreconditionError("cannot open family file '" + path + "'");
        return read_family(in);
    }
    const int n = static_cast<int>(cfg.integer("n"));
    const std::string& g = cfg.text("generator");
    if (g == "spaced")
        return generate_spaced_family(n, cfg.real("delta"), cfg.real("big_w"), static_cast<int>(cfg.integer("big_n")),
                                      cfg.integer("seed"));
    return generate_h0_family(n, cfg.real("delta"), cfg.real("big_w"), static_cast<int>(cfg.integer("h0")),
                              cfg.integer("seed"), g == "h0_at_most");
}

Outcome volume_check(const ExperimentConfig& cfg) {
    const int n = static_cast<int>(cfg.integer("n"));
    const double theta = cfg.real("theta"), delta = cfg.real("delta");
    ComplexVector u1 = ComplexVector::Zero(n), u2 = ComplexVector::Zero(n), o = ComplexVector::Zero(n);
    u1(0) = 1;
    u2(0) = std::cos(theta);
    u2(1) = std::sin(theta);
    LineNeighborhood a{ComplexLine(o, u1), delta}, b{ComplexLine(o, u2), delta};
    MCOptions mc{static_cast<std::uint64_t>(cfg.integer("samples")), static_cast<std::uint64_t>(cfg.integer("seed")),
                 static_cast<int>(cfg.integer("shard_count"))};
    VolumeEstimate est = intersection_volume_mc(a, b, mc);
    const double exact = intersection_volume_exact(theta, delta, n);
    const double err = std::abs(est.value - exact);
    Outcome o2;
    o2.pass = err <= 3 * est.standard_error && err <= 0.02 * exact;
    if (!o2.pass) o2.reason = "Monte Carlo estimate outside 3 standard errors or 2% of the exact volume";
    o2.result = {{"exact", exact},
                 {"estimate", est.value},
                 {"standard_error", est.standard_error},
                 {"relative_error", err / exact},
                 {"samples", est.samples}};
    o2.csv = "theta,delta,exact,estimate,standard_error\n" + num(theta) + "," + num(delta) + "," + num(exact) + "," +
             num(est.value) + "," + num(est.standard_error) + "\n";
    o2.metric = err / exact;
    return o2;
}

Outcome slice_check(const ExperimentConfig& cfg) {
    Rng rng(derive_seed(cfg.integer("seed"), 0x51));
    const long samples = cfg.integer("samples");
    long band = 0, disagreements = 0;
    const double pi = std::acos(-1.0);
    for (long t = 0; t < samples; ++t) {
        Eigen::Vector2d x(rng.normal(), rng.normal()), y(rng.normal(), rng.normal());
        double r = std::exp(rng.uniform(-2, 2)), zeta = rng.uniform(-pi, pi), delta = rng.uniform(0.01, 2);
        double res = projection_residual(x, y, r, zeta);
        if (std::abs(res - delta) < 1e-9) {
            ++band;
            continue;
        }
        disagreements += slice_membership(x, y, r, zeta, delta) != (res < delta);
    }
    Outcome o;
    o.pass = disagreements == 0;
    if (!o.pass) o.reason = std::to_string(disagreements) + " disagreements outside the boundary band";
    o.result = {{"samples", samples}, {"band", band}, {"disagreements", disagreements}};
    o.csv = "samples,band,disagreements\n" + std::to_string(samples) + "," + std::to_string(band) + "," +
            std::to_string(disagreements) + "\n";
    o.metric = static_cast<double>(disagreements);
    return o;
}

Outcome angle_check(const ExperimentConfig& cfg) {
    Rng rng(derive_seed(cfg.integer("seed"), 0xa1));
    const int n = static_cast<int>(cfg.integer("n"));
    const long samples = cfg.integer("samples");
    const double pi = std::acos(-1.0);
    double worst_grid = 0, worst_principal = 0;
    std::string csv = "index,angle,definition1,principal_1,principal_2\n";
    for (long t = 0; t < samples; ++t) {
        ComplexVector u1 = random_unit(n, rng), u2 = random_unit(n, rng);
        double a = line_angle<double>(u1, u2), g = definition1_angle<double>(u1, u2, 720);
        auto [p1, p2] = principal_angle_oracle<double>(u1, u2, 720);
        worst_grid = std::max(worst_grid, std::abs(g - a));
        worst_principal = std::max({worst_principal, std::abs(p1 - p2), std::abs(p1 - a)});
        csv += std::to_string(t) + "," + num(a) + "," + num(g) + "," + num(p1) + "," + num(p2) + "\n";
    }
    Outcome o;
    o.pass = worst_grid <= 2 * pi / 720 && worst_principal <= 1e-9;
    if (!o.pass) o.reason = "angle definitions disagree beyond tolerance";
    o.result = {{"samples", samples}, {"max_grid_error", worst_grid}, {"max_principal_error", worst_principal}};
    o.csv = csv;
    o.metric = worst_grid;
    return o;
}

Outcome dualslab_check(const ExperimentConfig& cfg) {
    const int n = static_cast<int>(cfg.integer("n"));
    DualSlabResult r = dual_slab_count_check(n, cfg.real("delta"), cfg.real("sigma"),
                                             static_cast<int>(cfg.integer("probes")), cfg.integer("seed"));
    Outcome o;
    double ratio = r.observed_mean / r.predicted;
    o.pass = n == 2 ? ratio >= 1.0 / 8 && ratio <= 8 : r.observed_mean > 0;
    if (!o.pass) o.reason = "observed dual slab count outside the expected band";
    o.result = {{"observed_mean", r.observed_mean}, {"predicted", r.predicted}, {"ratio", ratio},
                {"directions", r.directions}};
    o.csv = "sigma,observed,predicted\n" + num(cfg.real("sigma")) + "," + num(r.observed_mean) + "," +
            num(r.predicted) + "\n";
    o.metric = r.observed_mean;
    return o;
}

Outcome spacing_gen(const ExperimentConfig& cfg, const std::string& out_dir) {
    TubeFamily f = family_from(cfg);
    if (!out_dir.empty()) {
        std::ofstream os(out_dir + "/family.txt", std::ios::binary);
        write_family(os, f);
    }
    SpacingReport rep = check_spacing(f, f.big_w);
    Outcome o;
    o.pass = rep.verdict;
    if (!o.pass) o.reason = "generated family fails its spacing condition";
    o.result = {{"family", family_identity(f)}, {"tubes", f.tubes.size()}, {"spacing", spacing_json(rep)}};
    if (!out_dir.empty()) o.result["family_file"] = "family.txt";
    o.csv = histogram_csv(rep);
    o.metric = rep.max;
    return o;
}

Outcome spacing_check(const ExperimentConfig& cfg) {
    if (cfg.text("family").empty()) throw ConfigError(0, "spacing-check needs a family file (family = path)");
    TubeFamily f = family_from(cfg);
    double w = cfg.defaulted.count("big_w") ? f.big_w : cfg.real("big_w");
    SpacingReport rep = check_spacing(f, w);
    Outcome o;
    o.pass = rep.verdict;
    if (!o.pass) o.reason = "family fails its spacing condition";
    o.result = {{"family", family_identity(f)}, {"big_w", w}, {"spacing", spacing_json(rep)}};
    o.csv = histogram_csv(rep);
    o.metric = rep.max;
    return o;
}

RichnessProfile profile_for(const ExperimentConfig& cfg, const TubeFamily& f) {
    BallGrid grid(f.n, f.delta, cfg.real("radius"));
    return cfg.text("mode") == "exhaustive" ? richness_profile_exhaustive(grid, f) : richness_profile(grid, f);
}

Outcome rich_count(const ExperimentConfig& cfg) {
    TubeFamily f = family_from(cfg);
    RichnessProfile p = profile_for(cfg, f);
    Outcome o;
    o.result = {{"profile", profile_json(p)}};
    o.csv = profile_csv(p);
    std::uint64_t top = 0;
    for (const auto& [r, c] : p.entries)
        if (c) top = r;
    o.metric = static_cast<double>(top);
    return o;
}

Outcome bound_verify(const ExperimentConfig& cfg) {
    TubeFamily f = family_from(cfg);
    RichnessProfile p = profile_for(cfg, f);
    Theorem th;
    if (cfg.text("theorem") == "auto")
        th = f.spacing_kind == SpacingKind::uniform_n ? Theorem::t41 : Theorem::t42;
    else
        th = theorem_from_string(cfg.text("theorem"));
    BoundReport rep = verify_bound(f, p, th, cfg.real("epsilon"), cfg.real("constant"), cfg.text("r_threshold") == "all");
    Outcome o;
    o.pass = rep.verdict;
    if (!o.pass) o.reason = rep.applicable ? "richness exceeds the bound" : rep.note;
    json rows = json::array();
    std::string csv = "r,count,bound,ratio\n";
    for (const BoundRow& r : rep.rows) {
        rows.push_back({{"r", r.r}, {"count", r.count}, {"bound", r.bound}, {"ratio", r.ratio}});
        csv += std::to_string(r.r) + "," + std::to_string(r.count) + "," + num(r.bound) + "," + num(r.ratio) + "\n";
    }
    o.result = {{"family", family_identity(f)}, {"theorem", to_string(rep.theorem)}, {"applicable", rep.applicable},
                {"note", rep.note}, {"threshold", rep.threshold}, {"rows", rows}, {"max_ratio", rep.max_ratio},
                {"verdict", rep.verdict}, {"profile", profile_json(p)}};
    o.csv = csv;
    o.metric = rep.max_ratio;
    return o;
}

Outcome dichotomy_check(const ExperimentConfig& cfg) {
    DichotomyConfig c = generate_dichotomy_config(static_cast<int>(cfg.integer("n")), cfg.real("big_d"), cfg.text("kind"),
                                                  static_cast<int>(cfg.integer("tubes")), cfg.integer("seed"));
    DichotomyReport r = heavy_ball_check(c.balls, c.tubes, c.big_e, cfg.real("epsilon"), c.big_d, cfg.real("slack"));
    Outcome o;
    o.pass = r.thin_holds || r.thick_holds;
    if (!o.pass) o.reason = "neither the thin nor the thick alternative holds";
    std::string csv = "ball,tubes\n";
    for (std::size_t i = 0; i < r.thick_cover.size(); ++i)
        csv += std::to_string(i) + "," + std::to_string(r.thick_cover[i].tubes) + "\n";
    o.result = {{"balls", r.balls},
                {"tubes", r.tubes},
                {"big_e", r.big_e},
                {"lambda", r.lambda},
                {"rho", r.rho},
                {"thin_bound", r.thin_bound},
                {"thin_ratio", r.thin_ratio},
                {"thin_holds", r.thin_holds},
                {"thick_balls", r.thick_cover.size()},
                {"thick_tube_threshold", r.thick_tube_threshold},
                {"captured_fraction", r.captured_fraction},
                {"capture_threshold", r.capture_threshold},
                {"thick_holds", r.thick_holds}};
    o.csv = csv;
    o.metric = r.thin_ratio;
    return o;
}

Outcome falconer(const ExperimentConfig& cfg, const std::string& out_dir) {
    const double s = cfg.real("s"), delta = cfg.real("delta");
    const int big_n = static_cast<int>(cfg.integer("big_n"));
    const std::uint64_t seed = cfg.integer("seed");
    FalconerReport r = run_falconer(s, delta, big_n, cfg.real("epsilon"), seed);
    if (!out_dir.empty()) {
        std::ofstream os(out_dir + "/pointset.txt", std::ios::binary);
        write_point_set(os, generate_point_set(s, delta, big_n, seed));
    }
    Outcome o;
    o.pass = r.pass;
    if (!o.pass) o.reason = r.points == 0 ? "empty point set" : "a pipeline inequality failed";
    o.result = {{"points", r.points},
                {"e1", r.e1},
                {"e2", r.e2},
                {"c_split", r.c_split},
                {"tubes", r.tubes},
                {"spacing", spacing_json(r.spacing)},
                {"incidence_sum", r.incidence_sum},
                {"q_count", r.q_count},
                {"q_le_incidences", r.q_le_incidences},
                {"covering_e12", r.covering_e12},
                {"covering_all", r.covering_all},
                {"cs_lower_bound", r.cs_lower_bound},
                {"covering_ge_cs", r.covering_ge_cs},
                {"target", r.target},
                {"profile", profile_json(r.profile)}};
    o.csv = profile_csv(r.profile);
    o.metric = static_cast<double>(r.covering_all);
    return o;
}

json config_json(const ExperimentConfig& cfg) {
    json c = json::object();
    for (const auto& [k, v] : cfg.values) c[k] = value_json(v);
    return c;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    os << text;
    if (!os) throw std::runtime_error("cannot write '" + path + "'");
}

Outcome run_single(const std::string& name, const ExperimentConfig& cfg, const std::string& out_dir);

Outcome sweep(const ExperimentConfig& cfg, const std::string& out_dir) {
    if (cfg.axes.empty()) throw ConfigError(0, "sweep needs at least one axis.<key> line");
    std::size_t cells = 1;
    for (const auto& [k, vals] : cfg.axes) cells *= vals.size();
    if (cells > static_cast<std::size_t>(cfg.integer("sweep_budget")))
        throw BudgetError("sweep: " + std::to_string(cells) + " cells exceed sweep_budget");
    const std::string command = cfg.text("sweep_command");
    Outcome o;
    json rows = json::array();
    std::string csv;
    for (const auto& [k, v] : cfg.axes) csv += k + ",";
    csv += "status,pass,metric\n";
    std::vector<std::pair<double, double>> fit;
    bool fit_ok = std::holds_alternative<double>(cfg.axes.front().second.front()) ||
                  std::holds_alternative<long>(cfg.axes.front().second.front());
    for (std::size_t c = 0; c < cells; ++c) {
        ExperimentConfig cell = cfg;
        cell.axes.clear();
        std::string key;
        std::size_t rest = c;
        json values = json::object();
        for (auto it = cfg.axes.rbegin(); it != cfg.axes.rend(); ++it) {
            const ConfigValue& v = it->second[rest % it->second.size()];
            rest /= it->second.size();
            cell.values[it->first] = v;
            cell.defaulted.erase(it->first);
        }
        for (const auto& [k, vals] : cfg.axes) {
            std::string text = format_value(cell.values[k]);
            values[k] = value_json(cell.values[k]);
            std::string safe = text;
            std::replace_if(safe.begin(), safe.end(), [](char ch) { return !std::isalnum(static_cast<unsigned char>(ch)) && ch != '.' && ch != '-'; }, '_');
            key += (key.empty() ? "" : "_") + k + "=" + safe;
            csv += text + ",";
        }
        std::string dir = out_dir.empty() ? "" : out_dir + "/" + key;
        RunResult r = run_command(command, cell, dir);
        json rep = json::parse(r.report);
        double metric = rep.contains("metric") ? rep["metric"].get<double>() : 0.0;
        rows.push_back({{"cell", key}, {"values", values}, {"status", r.status}, {"pass", r.status == 0},
                        {"reason", r.reason}, {"metric", metric}});
        csv += std::to_string(r.status) + "," + (r.status == 0 ? "true" : "false") + "," + num(metric) + "\n";
        o.pass = o.pass && r.status == 0;
        if (r.status != 0 && o.reason.empty()) o.reason = "cell " + key + ": " + r.reason;
        if (fit_ok) {
            double x = cell.real(cfg.axes.front().first);
            if (x > 0 && metric > 0)
                fit.emplace_back(x, metric);
            else
                fit_ok = false;
        }
    }
    o.result = {{"sweep_command", command}, {"cells", rows}};
    if (fit_ok && fit.size() >= 2) o.result["fitted_exponent"] = fit_exponent(fit);
    o.csv = csv;
    return o;
}

Outcome run_single(const std::string& name, const ExperimentConfig& cfg, const std::string& out_dir) {
    if (name == "volume-check") return volume_check(cfg);
    if (name == "slice-check") return slice_check(cfg);
    if (name == "angle-check") return angle_check(cfg);
    if (name == "dualslab-check") return dualslab_check(cfg);
    if (name == "spacing-gen") return spacing_gen(cfg, out_dir);
    if (name == "spacing-check") return spacing_check(cfg);
    if (name == "rich-count") return rich_count(cfg);
    if (name == "bound-verify") return bound_verify(cfg);
    if (name == "dichotomy-check") return dichotomy_check(cfg);
    if (name == "falconer") return falconer(cfg, out_dir);
    if (name == "sweep") return sweep(cfg, out_dir);
    throw ConfigError(0, "unknown command '" + name + "'");
}

}  // namespace

double ExperimentConfig::real(const std::string& key) const {
    const ConfigValue& v = values.at(key);
    if (auto p = std::get_if<double>(&v)) return *p;
    return static_cast<double>(std::get<long>(v));
}

long ExperimentConfig::integer(const std::string& key) const { return std::get<long>(values.at(key)); }

const std::string& ExperimentConfig::text(const std::string& key) const { return std::get<std::string>(values.at(key)); }

std::string version_string() { return "ctube 0.1.0"; }

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = {"volume-check",  "slice-check",   "angle-check",  "dualslab-check",
                                                   "spacing-gen",   "spacing-check", "rich-count",   "dichotomy-check",
                                                   "bound-verify",  "falconer",      "sweep"};
    return names;
}

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    for (const auto& [k, spec] : schema()) {
        cfg.values[k] = spec.fallback;
        cfg.defaulted.insert(k);
    }
    return cfg;
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg = default_config();
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    std::set<std::string> seen;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = trim(raw.substr(0, raw.find('#')));
        if (s.empty()) continue;
        std::size_t eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(line, "expected key = value");
        std::string key = trim(s.substr(0, eq)), value = trim(s.substr(eq + 1));
        if (key.empty()) throw ConfigError(line, "missing key");
        if (!seen.insert(key).second) throw ConfigError(line, "duplicate key '" + key + "'");
        if (key.rfind("axis.", 0) == 0) {
            std::string target = key.substr(5);
            std::vector<ConfigValue> vals;
            std::istringstream items(value);
            std::string item;
            while (std::getline(items, item, ',')) vals.push_back(parse_value(target, trim(item), line));
            if (vals.empty()) throw ConfigError(line, "axis '" + target + "' has no values");
            cfg.axes.emplace_back(target, std::move(vals));
            continue;
        }
        cfg.values[key] = parse_value(key, value, line);
        cfg.defaulted.erase(key);
    }
    return cfg;
}

std::string emit_config(const ExperimentConfig& cfg) {
    std::string out;
    for (const auto& [k, v] : cfg.values)
        if (!cfg.defaulted.count(k)) out += k + " = " + format_value(v) + "\n";
    for (const auto& [k, vals] : cfg.axes) {
        out += "axis." + k + " = ";
        for (std::size_t i = 0; i < vals.size(); ++i) out += (i ? ", " : "") + format_value(vals[i]);
        out += "\n";
    }
    return out;
}

void set_value(ExperimentConfig& cfg, const std::string& assignment) {
    std::size_t eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError(0, "--set expects key=value, got '" + assignment + "'");
    std::string key = trim(assignment.substr(0, eq)), value = trim(assignment.substr(eq + 1));
    cfg.values[key] = parse_value(key, value, 0);
    cfg.defaulted.erase(key);
}

RunResult run_command(const std::string& name, const ExperimentConfig& cfg, const std::string& out_dir) {
    RunResult rr;
    json report;
    report["command"] = name;
    report["version"] = version_string();
    report["config"] = config_json(cfg);
    report["defaults_applied"] = json(std::vector<std::string>(cfg.defaulted.begin(), cfg.defaulted.end()));
    if (!cfg.axes.empty()) {
        json axes = json::object();
        for (const auto& [k, vals] : cfg.axes) {
            json a = json::array();
            for (const auto& v : vals) a.push_back(value_json(v));
            axes[k] = a;
        }
        report["axes"] = axes;
    }
    try {
        if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
        Outcome o = run_single(name, cfg, out_dir);
        rr.status = o.pass ? 0 : 1;
        rr.reason = o.reason;
        rr.csv = o.csv;
        report["result"] = o.result;
        report["metric"] = o.metric;
    } catch (const std::exception& e) {
        rr.status = 2;
        rr.reason = e.what();
        rr.csv.clear();
    }
    report["pass"] = rr.status == 0;
    report["status"] = rr.status;
    if (!rr.reason.empty()) report["failure"] = rr.reason;
    rr.report = report.dump(2) + "\n";
    if (!out_dir.empty()) {
        write_file(out_dir + "/report.json", rr.report);
        if (!rr.csv.empty()) write_file(out_dir + "/data.csv", rr.csv);
    }
    return rr;
}

}  // namespace ctube
