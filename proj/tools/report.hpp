#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ivqr/gmm.hpp"
#include "ivqr/inference.hpp"
#include "ivqr/simulation.hpp"

namespace ivqr::cli {

// Version of the report JSON layout; bump on incompatible changes.
inline constexpr int kReportSchemaVersion = 1;

nlohmann::json ToJson(const Vector& v);
nlohmann::json ToJson(const Matrix& m);
nlohmann::json ToJson(const GmmFit& fit, const std::vector<std::string>& names);
nlohmann::json ToJson(const InferenceReport& rep, const std::vector<std::string>& names);
nlohmann::json ToJson(const sim::McSummary& s);

// Coefficient table: name, estimate, se, CI bounds.
std::string InferenceTable(const Vector& theta, const InferenceReport& rep,
                           const std::vector<std::string>& names);

// Writes `content` to `path` through a temporary sibling and a rename, so a
// failed run never leaves a partial file behind.
void WriteAtomically(const std::string& path, const std::string& content);

}  // namespace ivqr::cli
