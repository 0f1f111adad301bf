#pragma once

/**
 * @file serialize.hpp
 * @brief JSON encodings of the report types (nlohmann::json).
 *
 * Field names are stable; the schemas live in docs/schema. Doubles are
 * written with the shortest text that reads back to the same value.
 */

#include <nlohmann/json.hpp>

#include "darboux.hpp"
#include "oracle.hpp"
#include "substitution.hpp"

namespace rsint {

using nlohmann::json;

NLOHMANN_JSON_SERIALIZE_ENUM(Direction, {{Direction::increasing, "increasing"},
                                         {Direction::decreasing, "decreasing"},
                                         {Direction::constant, "constant"}})

NLOHMANN_JSON_SERIALIZE_ENUM(Label, {{Label::G, "G"}, {Label::B, "B"}, {Label::U, "U"}})

NLOHMANN_JSON_SERIALIZE_ENUM(Identity, {{Identity::eq1, "eq1"},
                                        {Identity::eq6, "eq6"},
                                        {Identity::eq7, "eq7"},
                                        {Identity::eq30, "eq30"},
                                        {Identity::coda, "coda"}})

inline void to_json(json& j, const Interval& i) { j = json::array({i.lo, i.hi}); }
inline void from_json(const json& j, Interval& i) { i = Interval{j.at(0).get<double>(), j.at(1).get<double>()}; }

inline void to_json(json& j, const OrientedInterval& i) { j = json{{"start", i.start}, {"end", i.end}}; }
inline void from_json(const json& j, OrientedInterval& i) {
    i = OrientedInterval{j.at("start").get<double>(), j.at("end").get<double>()};
}

inline void to_json(json& j, const Enclosure& e) { j = json{{"lower", e.lower}, {"upper", e.upper}}; }
inline void from_json(const json& j, Enclosure& e) {
    e = Enclosure{j.at("lower").get<double>(), j.at("upper").get<double>()};
}

inline void to_json(json& j, const Bounds& b) { j = json{{"inf", b.inf}, {"sup", b.sup}}; }
inline void from_json(const json& j, Bounds& b) {
    b.inf = j.at("inf").get<double>();
    b.sup = j.at("sup").get<double>();
}

inline void to_json(json& j, const Partition& p) { j = p.points(); }
inline void from_json(const json& j, Partition& p) { p = Partition(j.get<std::vector<double>>()); }

inline void to_json(json& j, const CertificationReport& r) {
    j = json{{"partition", r.partition}, {"upper", r.upper},     {"lower", r.lower},
             {"gap", r.gap},             {"osc_sum", r.osc_sum}, {"epsilon", r.epsilon},
             {"certified", r.certified}, {"rounds", r.rounds},   {"gap_history", r.gap_history}};
}
inline void from_json(const json& j, CertificationReport& r) {
    j.at("partition").get_to(r.partition);
    j.at("upper").get_to(r.upper);
    j.at("lower").get_to(r.lower);
    j.at("gap").get_to(r.gap);
    j.at("osc_sum").get_to(r.osc_sum);
    j.at("epsilon").get_to(r.epsilon);
    j.at("certified").get_to(r.certified);
    j.at("rounds").get_to(r.rounds);
    j.at("gap_history").get_to(r.gap_history);
}

inline void to_json(json& j, const DiagnosticCheck& c) {
    j = json{{"name", c.name}, {"value", c.value}, {"bound", c.bound}, {"holds", c.holds}};
}
inline void from_json(const json& j, DiagnosticCheck& c) {
    j.at("name").get_to(c.name);
    j.at("value").get_to(c.value);
    j.at("bound").get_to(c.bound);
    j.at("holds").get_to(c.holds);
}

/// Cells as [left, right, label] rows.
inline void to_json(json& j, const ClassifiedPartition& cp) {
    json cells = json::array();
    for (std::size_t k = 0; k < cp.cells.size(); ++k)
        cells.push_back(json::array({cp.cells[k].lo, cp.cells[k].hi, cp.labels[k]}));
    j = json{{"eta", cp.eta}, {"cells", std::move(cells)}, {"density_bounds", cp.density_bounds}};
}
inline void from_json(const json& j, ClassifiedPartition& cp) {
    j.at("eta").get_to(cp.eta);
    cp.cells.clear();
    cp.labels.clear();
    for (const auto& row : j.at("cells")) {
        cp.cells.push_back(Interval{row.at(0).get<double>(), row.at(1).get<double>()});
        cp.labels.push_back(row.at(2).get<Label>());
    }
    j.at("density_bounds").get_to(cp.density_bounds);
}

/// Checks, named quantities and the classified partition sit under
/// "diagnostics".
inline void to_json(json& j, const VerificationReport& r) {
    json diag{{"tolerance", r.tolerance}, {"quantities", r.quantities}, {"checks", r.checks}};
    diag["classification"] = r.classification ? json(*r.classification) : json(nullptr);
    j = json{{"identity", r.identity}, {"lhs", r.lhs},         {"rhs", r.rhs},
             {"agree", r.agree},       {"max_gap", r.max_gap}, {"diagnostics", std::move(diag)}};
}
inline void from_json(const json& j, VerificationReport& r) {
    j.at("identity").get_to(r.identity);
    j.at("lhs").get_to(r.lhs);
    j.at("rhs").get_to(r.rhs);
    j.at("agree").get_to(r.agree);
    j.at("max_gap").get_to(r.max_gap);
    const json& d = j.at("diagnostics");
    d.at("tolerance").get_to(r.tolerance);
    d.at("quantities").get_to(r.quantities);
    d.at("checks").get_to(r.checks);
    if (d.contains("classification") && !d.at("classification").is_null())
        r.classification = d.at("classification").get<ClassifiedPartition>();
    else
        r.classification.reset();
}

inline void to_json(json& j, const OracleResult& o) {
    j = json{{"value", o.value},
             {"grid_cells", o.grid_cells},
             {"richardson_estimate", o.richardson_estimate},
             {"stability_gap", o.stability_gap}};
}
inline void from_json(const json& j, OracleResult& o) {
    j.at("value").get_to(o.value);
    j.at("grid_cells").get_to(o.grid_cells);
    j.at("richardson_estimate").get_to(o.richardson_estimate);
    j.at("stability_gap").get_to(o.stability_gap);
}

} // namespace rsint
