#pragma once

#include <json.hpp>

#include "aesthete/normalization.hpp"
#include "aesthete/optimizer.hpp"

namespace aesthete {

using Json = nlohmann::json;

// Wire format shared by the HTTP API, the CLI and persisted sessions.
// Intensities are objects keyed by filter name; fixed flags are name lists.

Json to_json(const ParamArray& k);
Json fixed_to_json(const ParamVector& params);
Json to_json(const ScoreDistribution& d);
Json to_json(const IterationRecord& record);
Json to_json(const AbnReport& report);
Json to_json(const OptimizerConfig& config);

/// Throws Error(Schema, "missing field <name>") when `key` is absent and
/// Error(Schema, "invalid field <name>") when it has the wrong type.
const Json& require(const Json& object, const char* key);

ParamArray params_from_json(const Json& k);
void fixed_from_json(const Json& names, ParamVector& params);
ScoreDistribution distribution_from_json(const Json& buckets);
IterationRecord record_from_json(const Json& j);
AbnReport abn_report_from_json(const Json& j);
OptimizerConfig config_from_json(const Json& j);

/// Parses a filter name, throwing Error(InvalidArgument, "unknown filter: <name>").
FilterId filter_from_name(std::string_view name);

}  // namespace aesthete
