#pragma once

#include "tristage/kvconfig.hpp"
#include "tristage/metrics.hpp"
#include "tristage/pipeline.hpp"

#include <json.hpp>

#include <filesystem>

namespace tristage::report {

nlohmann::json to_json(const pipeline::DiagnosticsReport& report);
nlohmann::json to_json(const metrics::ProductMetrics& m);
nlohmann::json to_json(const metrics::Adherence& a);
nlohmann::json to_json(const KeyValues& kv);

/// Pretty-printed with a trailing newline, so equal documents are equal bytes.
void write_json(const nlohmann::json& doc, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

} // namespace tristage::report
