#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "parahom/config.hpp"
#include "parahom/experiments.hpp"

namespace parahom {

/// FNV-1a, 64 bit.
std::uint64_t fnv1a(std::string_view bytes);

/// 16 hex digits identifying a run: hash of the command and the rendered config.
std::string config_hash(const std::string& command, const Config& config);

/// printf "%.12e".
std::string format_number(double v);

/// Header epsilon,h,tau,metric,lhs,rhs,ratio then one row per record, LF line endings.
std::string render_csv(const SweepReport& report);

/// Summary, records, command, hash and the full rendered config.
std::string render_json(const SweepReport& report, const std::string& command, const Config& config);

struct StoredReport {
  std::string command;
  std::string hash;
  std::string config;  // rendered YAML
  SweepReport report;
};

/// Inverse of render_json; throws ConfigError naming the first missing or mistyped field.
StoredReport report_from_json(const std::string& text);

/// Line chart of ratio against epsilon (log scale), one polyline per metric.
std::string render_svg(const SweepReport& report);

struct Artifact {
  std::string name;
  std::string contents;
};

/// Writes every artifact to a temporary file in `dir` first and renames them into place
/// afterwards. On any failure the temporaries (and anything already renamed) are removed
/// and IoError names the path.
std::vector<std::filesystem::path> write_artifacts(const std::filesystem::path& dir,
                                                   const std::vector<Artifact>& artifacts);

}  // namespace parahom
