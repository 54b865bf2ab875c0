// cpstein: command-line front end.
//
//   cpstein bounds      --rates 0.81,0.09,0.00333 | --model runs --n 100 --p 0.3
//   cpstein verify      --model reliability --n 4 --k 2 --q 0.3 --exact
//   cpstein sweep       --model runs --n 200 --range p=0.05:0.6:12 --csv
//   cpstein stein-solve --rates 1,0.5 --y 3
//   cpstein pmf         --model mixed --two-point 1,3,0.5 --law model
//
// Exit codes: 0 ok, 1 verification inequality violated, 2 usage error,
// 3 resource budget exceeded.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cpstein/cpstein.hpp"

using namespace cpstein;

namespace {

constexpr std::uint64_t kDefaultSeed = 20240917;
constexpr std::uint64_t kDefaultSamples = 100000;

enum Exit { kOk = 0, kViolation = 1, kUsage = 2, kBudget = 3 };

struct Options {
    std::vector<double> rates;
    std::string model;
    std::optional<int> n, k;
    std::optional<double> p, q;
    std::vector<double> two_point;
    std::vector<double> gamma;
    std::string components;
    bool exact = false;
    std::uint64_t samples = kDefaultSamples;
    std::uint64_t seed = kDefaultSeed;
    std::string format = "json";
    bool csv = false;
    std::string output;
    std::size_t y = 0;
    std::size_t x_max = 0;
    std::string law = "approx";
    std::vector<std::string> ranges;
    std::vector<std::string> methods;
};

// Either explicit rates or an application model.
struct Input {
    std::optional<AnyModel> model;
    CompoundPoissonParams params;
};

std::vector<double> parse_list(const std::string& text, char sep) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw InvalidInput("not a number: '" + item + "'");
        }
        if (used != item.size()) throw InvalidInput("not a number: '" + item + "'");
        out.push_back(v);
    }
    return out;
}

template <class T>
T need(const std::optional<T>& v, const char* flag) {
    if (!v) throw InvalidInput(std::string("missing ") + flag);
    return *v;
}

AnyModel model_from_options(const Options& o) {
    if (o.model == "runs") return RunsModel{need(o.n, "--n"), need(o.p, "--p")};
    if (o.model == "reliability") return ReliabilityModel{need(o.n, "--n"), need(o.k, "--k"), need(o.q, "--q")};
    if (o.model == "mixed") {
        if (o.two_point.size() == 3) return MixedPoissonModel{TwoPointMixing{o.two_point[0], o.two_point[1], o.two_point[2]}};
        if (o.gamma.size() == 2) return MixedPoissonModel{GammaMixing{o.gamma[0], o.gamma[1]}};
        throw InvalidInput("mixed model needs --two-point a,b,w or --gamma shape,scale");
    }
    if (o.model == "sums") {
        if (o.components.empty()) throw InvalidInput("sums model needs --components p0,p1,...;p0,p1,...");
        IndependentSumModel m;
        std::stringstream ss(o.components);
        std::string part;
        while (std::getline(ss, part, ';')) m.components.push_back(parse_list(part, ','));
        return m;
    }
    throw InvalidInput("unknown model '" + o.model + "' (runs|reliability|mixed|sums)");
}

CompoundPoissonParams approximant(const AnyModel& m) {
    return std::visit(
        [](const auto& v) -> CompoundPoissonParams {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, RunsModel>) return runs_cp_params(v);
            if constexpr (std::is_same_v<T, ReliabilityModel>) return reliability_cp_params(v);
            if constexpr (std::is_same_v<T, MixedPoissonModel>) return mixed_cp_params(v);
            if constexpr (std::is_same_v<T, IndependentSumModel>) return sums_cp_params(v);
        },
        m);
}

Input resolve(const Options& o) {
    if (!o.rates.empty() && !o.model.empty()) throw InvalidInput("give either --rates or --model, not both");
    if (!o.rates.empty()) return {std::nullopt, CompoundPoissonParams(o.rates)};
    if (o.model.empty()) throw InvalidInput("missing --rates or --model");
    AnyModel m = model_from_options(o);
    return {m, approximant(m)};
}

// d_K bound of the model at a given m1, where the model defines one.
std::optional<double> model_dk_bound(const AnyModel& m, double m1) {
    if (!std::isfinite(m1)) return std::nullopt;
    if (const auto* r = std::get_if<RunsModel>(&m)) return runs_dk_bound(*r, m1);
    if (const auto* r = std::get_if<ReliabilityModel>(&m)) return reliability_dk_bound(*r, m1);
    if (const auto* r = std::get_if<MixedPoissonModel>(&m)) return mixed_dk_bound(*r, m1);
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

std::string format_number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_cell(const json& v) {
    if (v.is_null()) return "";
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
    if (v.is_number()) return format_number(v.get<double>());
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string quoted = "\"";
        for (char c : s) quoted += (c == '"') ? std::string("\"\"") : std::string(1, c);
        return quoted + "\"";
    }
    return v.dump();
}

std::string csv_table(const std::vector<std::string>& columns, const std::vector<json>& rows) {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
    out += "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (i) out += ",";
            out += csv_cell(row.contains(columns[i]) ? row.at(columns[i]) : json());
        }
        out += "\n";
    }
    return out;
}

bool want_csv(const Options& o) {
    if (o.format != "json" && o.format != "csv") throw InvalidInput("--format must be json or csv");
    return o.csv || o.format == "csv";
}

// The whole document is built before anything is written; files are written
// to a sibling temporary and renamed into place.
void emit(const Options& o, const std::string& text) {
    if (o.output.empty()) {
        std::cout << text << std::flush;
        return;
    }
    const std::filesystem::path target(o.output);
    std::filesystem::path tmp = target;
    tmp += ".partial";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw InvalidInput("cannot write " + tmp.string());
        f << text;
        if (!f) throw InvalidInput("cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
}

// ---------------------------------------------------------------------------
// Bound records (shared by bounds and sweep)
// ---------------------------------------------------------------------------

const std::vector<std::string> kSlots{"general", "monotone", "bx99", "thm2_1", "thm2_2", "cor3", "thm2_4", "thm4"};

std::vector<std::string> record_columns(const std::vector<std::string>& slots) {
    std::vector<std::string> cols{"model", "n",     "p",      "k",      "q",      "a",      "b",     "w",
                                  "shape", "scale", "rates",  "theta0", "theta1", "theta2", "theta3"};
    for (const auto& s : slots) {
        cols.push_back(s + "_applicable");
        cols.push_back(s + "_m0");
        cols.push_back(s + "_m1");
    }
    for (const char* c : {"best_method", "best_m0", "best_m1", "regime", "dk_bound", "vacuous"}) cols.emplace_back(c);
    return cols;
}

json numeric(double v) { return std::isfinite(v) ? json(v) : json("inf"); }

void describe_input(json& rec, const Input& in) {
    if (in.model) {
        const json m = to_json(*in.model);
        rec["model"] = m.at("model");
        for (const auto& [key, value] : m.items()) {
            if (key == "model" || key == "mixing" || key == "components") continue;
            rec[key] = value;
        }
        if (m.contains("mixing")) rec["mixing"] = m.at("mixing");
        if (m.contains("components")) rec["components"] = m.at("components");
    } else {
        rec["model"] = "rates";
    }
    std::string joined;
    for (double r : in.params.rates()) joined += (joined.empty() ? "" : ";") + format_number(r);
    rec["rates"] = joined;
}

json bound_record(const Input& in, const std::vector<std::string>& slots) {
    json rec = json::object();
    describe_input(rec, in);
    const ThetaVector th = theta(in.params, 4);
    for (int i = 0; i < 4; ++i) rec["theta" + std::to_string(i)] = th[static_cast<std::size_t>(i)];

    const std::vector<SteinFactorBound> all = all_bounds(in.params);
    std::vector<SteinFactorBound> chosen;
    json rows = json::array();
    for (std::size_t i = 0; i < kSlots.size(); ++i) {
        if (std::find(slots.begin(), slots.end(), kSlots[i]) == slots.end()) continue;
        const auto& b = all[i];
        chosen.push_back(b);
        rec[kSlots[i] + "_applicable"] = b.applicable;
        rec[kSlots[i] + "_m0"] = numeric(b.m0);
        rec[kSlots[i] + "_m1"] = numeric(b.m1);
        json row = to_json(b);
        row["slot"] = kSlots[i];
        rows.push_back(row);
    }
    const SteinFactorBound best = best_of(chosen);
    rec["bounds"] = rows;
    rec["best"] = to_json(best);
    rec["best_method"] = best.applicable ? json(best.method.str()) : json();
    rec["best_m0"] = numeric(best.m0);
    rec["best_m1"] = numeric(best.m1);
    rec["regime"] = to_string(regime_classify(th));
    rec["dk_bound"] = json();
    rec["vacuous"] = json();
    if (in.model) {
        if (const auto dk = model_dk_bound(*in.model, best.m1)) {
            rec["dk_bound"] = *dk;
            rec["vacuous"] = *dk > 1.0;
        }
    }
    return rec;
}

std::vector<std::string> selected_slots(const Options& o) {
    if (o.methods.empty()) return kSlots;
    std::vector<std::string> out;
    for (const auto& m : o.methods) {
        if (std::find(kSlots.begin(), kSlots.end(), m) == kSlots.end()) {
            throw InvalidInput("unknown method '" + m + "'");
        }
    }
    for (const auto& s : kSlots) {
        if (std::find(o.methods.begin(), o.methods.end(), s) != o.methods.end()) out.push_back(s);
    }
    return out;
}

std::string render_records(const Options& o, const std::vector<json>& records, bool as_array) {
    if (want_csv(o)) return csv_table(record_columns(selected_slots(o)), records);
    if (as_array) return json(records).dump(2) + "\n";
    return records.front().dump(2) + "\n";
}

int cmd_bounds(const Options& o) {
    const Input in = resolve(o);
    emit(o, render_records(o, {bound_record(in, selected_slots(o))}, false));
    return kOk;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct Range {
    std::string name;
    double start = 0.0, stop = 0.0;
    int count = 1;

    double at(int i) const {
        if (count == 1) return start;
        return (start * (count - 1 - i) + stop * i) / (count - 1);
    }
};

Range parse_range(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw InvalidInput("range must look like name=start:stop:count");
    Range r;
    r.name = text.substr(0, eq);
    const auto parts = parse_list(text.substr(eq + 1), ':');
    if (parts.size() != 3) throw InvalidInput("range must look like name=start:stop:count");
    r.start = parts[0];
    r.stop = parts[1];
    if (parts[2] < 1 || parts[2] != std::floor(parts[2])) throw InvalidInput("range count must be an integer >= 1");
    r.count = static_cast<int>(parts[2]);
    return r;
}

void apply_point(Options& o, const std::string& name, double v) {
    if (name == "n") o.n = static_cast<int>(std::lround(v));
    else if (name == "k") o.k = static_cast<int>(std::lround(v));
    else if (name == "p") o.p = v;
    else if (name == "q") o.q = v;
    else if (name == "qk") {
        // q chosen so that q^k hits the requested value
        o.q = std::pow(v, 1.0 / need(o.k, "--k"));
    } else if ((name == "a" || name == "b" || name == "w") && o.two_point.size() == 3) {
        o.two_point[name == "a" ? 0 : name == "b" ? 1 : 2] = v;
    } else if ((name == "shape" || name == "scale") && o.gamma.size() == 2) {
        o.gamma[name == "shape" ? 0 : 1] = v;
    } else {
        throw InvalidInput("cannot sweep '" + name + "' for this model");
    }
}

int cmd_sweep(const Options& o) {
    std::vector<Range> ranges;
    for (const auto& r : o.ranges) ranges.push_back(parse_range(r));
    const auto slots = selected_slots(o);
    std::size_t total = 1;
    for (const auto& r : ranges) total *= static_cast<std::size_t>(r.count);
    std::vector<json> records;
    for (std::size_t flat = 0; flat < total; ++flat) {
        Options point = o;
        std::size_t rest = flat;
        // last range varies fastest
        for (std::size_t i = ranges.size(); i-- > 0;) {
            const auto count = static_cast<std::size_t>(ranges[i].count);
            apply_point(point, ranges[i].name, ranges[i].at(static_cast<int>(rest % count)));
            rest /= count;
        }
        records.push_back(bound_record(resolve(point), slots));
    }
    emit(o, render_records(o, records, true));
    return kOk;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct ModelLaw {
    DistributionTable table;
    std::optional<McTable> mc;
    std::string source;
};

ModelLaw model_law(const AnyModel& m, const Options& o) {
    if (const auto* r = std::get_if<RunsModel>(&m)) return {runs_exact_pmf(*r), std::nullopt, "transfer-matrix"};
    if (const auto* r = std::get_if<ReliabilityModel>(&m)) {
        if (o.exact) return {reliability_exact_pmf(*r), std::nullopt, "exhaustive"};
        McTable mc = reliability_mc_pmf(*r, o.samples, o.seed);
        DistributionTable t = mc.table;
        return {std::move(t), std::move(mc), "monte-carlo"};
    }
    if (const auto* r = std::get_if<MixedPoissonModel>(&m)) return {mixed_exact_pmf(*r), std::nullopt, "mixture"};
    return {sums_exact_pmf(std::get<IndependentSumModel>(m)), std::nullopt, "convolution"};
}

int cmd_verify(const Options& o) {
    const Input in = resolve(o);
    json rec = json::object();
    describe_input(rec, in);

    const auto bounds = all_bounds(in.params);
    const SteinFactorBound best = best_of(bounds);
    const EmpiricalFactors emp = empirical_factors(in.params);
    bool factor_pass = true;
    json checks = json::array();
    for (const auto& b : bounds) {
        if (!b.applicable) continue;
        const auto r = verify_bound(b, emp);
        factor_pass = factor_pass && r.pass;
        checks.push_back(to_json(r));
    }
    rec["verifications"] = checks;
    rec["best"] = to_json(best);
    rec["best_method"] = best.applicable ? json(best.method.str()) : json();
    rec["best_m0"] = numeric(best.m0);
    rec["best_m1"] = numeric(best.m1);
    rec["m0_hat"] = emp.m0_hat;
    rec["m1_hat"] = emp.m1_hat;
    rec["factor_pass"] = factor_pass;

    bool dk_pass = true;
    rec["dk_bound"] = json();
    rec["vacuous"] = json();
    if (in.model) {
        const ModelLaw law = model_law(*in.model, o);
        const DistanceReport d = law.mc ? distance(*law.mc, cp_pmf(in.params)) : distance(law.table, cp_pmf(in.params));
        rec["law"] = law.source;
        rec["distance"] = to_json(d);
        rec["d_k"] = d.d_k;
        rec["d_k_upper"] = d.d_k_upper();
        rec["d_tv"] = d.d_tv;
        rec["mc_stderr"] = d.mc_stderr;
        if (const auto dk = model_dk_bound(*in.model, best.m1)) {
            rec["dk_bound"] = *dk;
            rec["vacuous"] = *dk > 1.0;
            // A violation is reported only when it is certain (beyond 4 standard errors for Monte Carlo).
            dk_pass = d.d_k - 4.0 * d.mc_stderr <= *dk;
        }
    }
    rec["dk_pass"] = dk_pass;
    rec["pass"] = factor_pass && dk_pass;

    if (want_csv(o)) {
        const std::vector<std::string> cols{"model", "n", "p", "k", "q", "a", "b", "w", "shape", "scale", "rates",
                                            "law", "best_method", "best_m0", "best_m1", "m0_hat", "m1_hat",
                                            "factor_pass", "d_k", "d_k_upper", "d_tv", "mc_stderr", "dk_bound",
                                            "vacuous", "dk_pass", "pass"};
        emit(o, csv_table(cols, {rec}));
    } else {
        emit(o, rec.dump(2) + "\n");
    }
    return (factor_pass && dk_pass) ? kOk : kViolation;
}

// ---------------------------------------------------------------------------
// stein-solve, pmf
// ---------------------------------------------------------------------------

int cmd_stein_solve(const Options& o) {
    const Input in = resolve(o);
    const std::size_t floor = o.y + 10 * in.params.max_cluster();
    const std::size_t x_max = o.x_max ? o.x_max : std::max(default_x_max(in.params, o.y), floor);
    const SteinSolution sol = solve_stein(in.params, o.y, x_max);
    if (want_csv(o)) {
        std::vector<json> rows;
        for (std::size_t x = 1; x <= sol.x_max; ++x) rows.push_back({{"x", x}, {"f", sol.f(x)}});
        emit(o, csv_table({"x", "f"}, rows));
    } else {
        json j = to_json(sol);
        j["interior_residual"] = interior_residual(in.params, sol);
        j["rates"] = to_json(in.params)["rates"];
        emit(o, j.dump(2) + "\n");
    }
    return kOk;
}

int cmd_pmf(const Options& o) {
    const Input in = resolve(o);
    DistributionTable t;
    if (o.law == "approx") {
        t = cp_pmf(in.params);
    } else if (o.law == "model") {
        if (!in.model) throw InvalidInput("--law model needs --model");
        t = model_law(*in.model, o).table;
    } else {
        throw InvalidInput("--law must be approx or model");
    }
    if (want_csv(o)) {
        std::vector<json> rows;
        for (std::size_t x = 0; x < t.size(); ++x) rows.push_back({{"x", x}, {"pmf", t.pmf[x]}});
        emit(o, csv_table({"x", "pmf"}, rows));
    } else {
        emit(o, to_json(t).dump(2) + "\n");
    }
    return kOk;
}

void add_input_options(CLI::App* sub, Options& o) {
    sub->add_option("--rates", o.rates, "cluster rates lambda_1,...,lambda_J")->delimiter(',');
    sub->add_option("--model", o.model, "runs | reliability | mixed | sums");
    sub->add_option("--n", o.n, "runs length or grid side");
    sub->add_option("--p", o.p, "runs success probability");
    sub->add_option("--k", o.k, "reliability subgrid side");
    sub->add_option("--q", o.q, "reliability failure probability");
    sub->add_option("--two-point", o.two_point, "two-point mixing a,b,w (P(xi=a)=w)")->delimiter(',')->expected(3);
    sub->add_option("--gamma", o.gamma, "gamma mixing shape,scale")->delimiter(',')->expected(2);
    sub->add_option("--components", o.components, "summand pmfs, ';' between components");
    sub->add_option("--format", o.format, "json | csv");
    sub->add_flag("--csv", o.csv, "same as --format csv");
    sub->add_option("--output", o.output, "write to a file instead of stdout");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Compound Poisson Stein factors: bounds, verification and sweeps"};
    app.require_subcommand(1);
    Options o;

    auto* bounds = app.add_subcommand("bounds", "all Stein factor bounds and the best one");
    add_input_options(bounds, o);
    bounds->add_option("--methods", o.methods, "subset of " "general,monotone,bx99,thm2_1,thm2_2,cor3,thm2_4,thm4")->delimiter(',');

    auto* verify = app.add_subcommand("verify", "check bounds against the Stein oracle and the exact law");
    add_input_options(verify, o);
    verify->add_flag("--exact", o.exact, "exhaustive reliability law (n <= 5)");
    verify->add_option("--samples", o.samples, "Monte Carlo samples for reliability")->check(CLI::Range(10000ULL, 1000000000ULL));
    verify->add_option("--seed", o.seed, "Monte Carlo seed (default 20240917)");

    auto* sweep = app.add_subcommand("sweep", "bounds over a parameter grid");
    add_input_options(sweep, o);
    sweep->add_option("--range", o.ranges, "name=start:stop:count (repeatable; last varies fastest)");
    sweep->add_option("--methods", o.methods, "subset of methods")->delimiter(',');

    auto* solve = app.add_subcommand("stein-solve", "solve the Stein equation for h = 1{x <= y}");
    add_input_options(solve, o);
    solve->add_option("--y", o.y, "threshold")->required();
    solve->add_option("--x-max", o.x_max, "truncation point");

    auto* pmf = app.add_subcommand("pmf", "dump a distribution table");
    add_input_options(pmf, o);
    pmf->add_option("--law", o.law, "approx (compound Poisson) | model (the statistic itself)");
    pmf->add_flag("--exact", o.exact, "exhaustive reliability law (n <= 5)");
    pmf->add_option("--samples", o.samples, "Monte Carlo samples for reliability");
    pmf->add_option("--seed", o.seed, "Monte Carlo seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (bounds->parsed()) return cmd_bounds(o);
        if (verify->parsed()) return cmd_verify(o);
        if (sweep->parsed()) return cmd_sweep(o);
        if (solve->parsed()) return cmd_stein_solve(o);
        if (pmf->parsed()) return cmd_pmf(o);
    } catch (const BudgetExceeded& e) {
        std::cerr << "budget exceeded: " << e.what() << "\n";
        return kBudget;
    } catch (const NotConverged& e) {
        std::cerr << "not converged: " << e.what() << "\n";
        return kBudget;
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
