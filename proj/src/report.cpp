#include "tristage/report.hpp"

#include "tristage/error.hpp"

#include <fstream>

namespace tristage::report {

using nlohmann::json;

json to_json(const pipeline::DiagnosticsReport& r) {
    json weeks = json::array();
    for (const auto& w : r.stage1_weeks) {
        weeks.push_back({{"week", w.week},
                         {"is_future", w.is_future},
                         {"predicted_sum", w.predicted_sum},
                         {"category_total", w.category_total},
                         {"deviation", w.deviation},
                         {"squared_deviation", w.squared}});
    }
    return {
        {"stage1_week_deviation", std::move(weeks)},
        {"stage1_future_squared_deviation", r.stage1_future_squared_deviation},
        {"bias",
         {{"source", r.bias.source},
          {"holdout_weeks", r.bias.holdout_weeks},
          {"rows", r.bias.rows},
          {"over", r.bias.over},
          {"under", r.bias.under},
          {"consistency_rate", r.bias.consistency_rate},
          {"direction", r.bias.direction}}},
        {"stage2_terms",
         {{"fit_historical", r.terms.terms.fit_historical},
          {"fit_future", r.terms.terms.fit_future},
          {"constraint", r.terms.terms.constraint},
          {"constraint_future", r.terms.terms.constraint_future},
          {"fit_future_to_constraint", r.terms.fit_to_constraint},
          {"fit_future_to_constraint_future", r.terms.fit_to_constraint_future}}},
        {"trivial_probe",
         {{"rounds", r.probe.rounds},
          {"final_loss", r.probe.final_loss},
          {"max_gap", r.probe.max_gap},
          {"max_relative_gap", r.probe.max_relative_gap}}},
    };
}

json to_json(const metrics::ProductMetrics& m) {
    return {{"mae", m.mae}, {"rmse", m.rmse}, {"wmape", m.wmape}};
}

json to_json(const metrics::Adherence& a) {
    json weeks = json::array();
    for (const auto& w : a.weeks) weeks.push_back({{"week", w.week}, {"deviation", w.deviation}});
    return {{"mean", a.mean}, {"max", a.max}, {"weeks", std::move(weeks)}};
}

json to_json(const KeyValues& kv) {
    json out = json::object();
    for (const auto& [key, value] : kv.entries()) out[key] = value;
    return out;
}

void write_json(const json& doc, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << doc.dump(2) << '\n';
    if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Persistence, path.string() + ": " + e.what());
    }
}

} // namespace tristage::report
