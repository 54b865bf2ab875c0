// serialize.hpp
//
// JSON forms of the public types.  Infinite Stein factors are written as the
// string "inf".
#pragma once

#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cpstein/applications.hpp"
#include "cpstein/cp_core.hpp"
#include "cpstein/error.hpp"
#include "cpstein/exact_oracles.hpp"
#include "cpstein/stein_bounds.hpp"
#include "cpstein/stein_oracle.hpp"

namespace cpstein {

using nlohmann::json;

inline json number_or_inf(double v) { return std::isinf(v) && v > 0 ? json("inf") : json(v); }

inline double number_or_inf(const json& j) {
    if (j.is_string() && j.get<std::string>() == "inf") return kInf;
    return j.get<double>();
}

inline json to_json(const CompoundPoissonParams& p) {
    return {{"rates", std::vector<double>(p.rates().begin(), p.rates().end())}};
}

inline CompoundPoissonParams params_from_json(const json& j) {
    if (!j.is_object() || !j.contains("rates") || !j["rates"].is_array()) {
        throw InvalidInput("expected {\"rates\": [...]}");
    }
    return CompoundPoissonParams(j["rates"].get<std::vector<double>>());
}

inline json to_json(const DistributionTable& t) { return {{"pmf", t.pmf}, {"tail_mass", t.tail_mass}}; }

inline DistributionTable table_from_json(const json& j) {
    if (!j.is_object() || !j.contains("pmf")) throw InvalidInput("expected {\"pmf\": [...], \"tail_mass\": t}");
    DistributionTable t{j["pmf"].get<std::vector<double>>(), j.value("tail_mass", 0.0)};
    if (!t.is_valid()) throw InvalidInput("distribution table is not normalised");
    return t;
}

inline json to_json(const SteinFactorBound& b) {
    return {{"m0", number_or_inf(b.m0)},
            {"m1", number_or_inf(b.m1)},
            {"method", b.method.str()},
            {"applicable", b.applicable},
            {"note", b.note}};
}

inline json to_json(const VerificationReport& r) {
    return {{"method", r.method}, {"m0_bound", number_or_inf(r.m0_bound)}, {"m0_hat", r.m0_hat},
            {"m1_bound", number_or_inf(r.m1_bound)}, {"m1_hat", r.m1_hat}, {"pass", r.pass},
            {"x_max", r.x_max}, {"y_max", r.y_max}};
}

inline json to_json(const DistanceReport& d) {
    return {{"d_k", d.d_k},
            {"d_tv", d.d_tv},
            {"argmax_y", d.argmax_y},
            {"mc_stderr", d.mc_stderr},
            {"certified_slack", d.certified_slack}};
}

inline json to_json(const SteinSolution& s) {
    return {{"threshold", s.threshold}, {"x_max", s.x_max}, {"f", s.values},
            {"residual0", s.residual0}, {"eh_u", s.eh_u}};
}

inline json to_json(const RunsModel& m) { return {{"model", "runs"}, {"n", m.n}, {"p", m.p}}; }

inline json to_json(const ReliabilityModel& m) {
    return {{"model", "reliability"}, {"n", m.n}, {"k", m.k}, {"q", m.q}};
}

inline json to_json(const MixedPoissonModel& m) {
    if (const auto* t = std::get_if<TwoPointMixing>(&m.mixing)) {
        return {{"model", "mixed"}, {"mixing", "two_point"}, {"a", t->a}, {"b", t->b}, {"w", t->w}};
    }
    const auto& g = std::get<GammaMixing>(m.mixing);
    return {{"model", "mixed"}, {"mixing", "gamma"}, {"shape", g.shape}, {"scale", g.scale}};
}

inline json to_json(const IndependentSumModel& m) { return {{"model", "sums"}, {"components", m.components}}; }

using AnyModel = std::variant<RunsModel, ReliabilityModel, MixedPoissonModel, IndependentSumModel>;

inline json to_json(const AnyModel& m) {
    return std::visit([](const auto& v) { return to_json(v); }, m);
}

inline AnyModel model_from_json(const json& j) {
    const std::string tag = j.at("model").get<std::string>();
    if (tag == "runs") return RunsModel{j.at("n").get<int>(), j.at("p").get<double>()};
    if (tag == "reliability") {
        return ReliabilityModel{j.at("n").get<int>(), j.at("k").get<int>(), j.at("q").get<double>()};
    }
    if (tag == "mixed") {
        const std::string mixing = j.at("mixing").get<std::string>();
        if (mixing == "two_point") {
            return MixedPoissonModel{TwoPointMixing{j.at("a").get<double>(), j.at("b").get<double>(),
                                                    j.at("w").get<double>()}};
        }
        if (mixing == "gamma") {
            return MixedPoissonModel{GammaMixing{j.at("shape").get<double>(), j.at("scale").get<double>()}};
        }
        throw InvalidInput("unknown mixing: " + mixing);
    }
    if (tag == "sums") {
        return IndependentSumModel{j.at("components").get<std::vector<std::vector<double>>>()};
    }
    throw InvalidInput("unknown model: " + tag);
}

} // namespace cpstein
