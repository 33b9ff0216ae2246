#pragma once

#include <string>
#include <vector>

#include "parahom/experiments.hpp"

namespace parahom {

struct RotationInput {
  std::vector<std::vector<double>> matrix;
  double delta = 1e-3;

  bool operator==(const RotationInput&) const = default;
};

struct OutputOptions {
  bool svg = false;

  bool operator==(const OutputOptions&) const = default;
};

/// Everything a CLI run reads from its config file.
struct Config {
  SweepConfig sweep;
  RotationInput rotation;
  OutputOptions output;

  bool operator==(const Config&) const = default;
};

/// Parses the YAML config. Unknown keys, type mismatches and invalid values raise
/// ConfigError naming the key and (1-based) line. Defaults come from default_config of the
/// selected sweep.kind (fundamental for the fundsol command). A non-empty `command` also
/// enforces that command's required keys. Numbers may be written as fractions "1/4".
Config parse_config(const std::string& text, const std::string& command = "");

/// YAML with every key spelled out (defaults included), doubles in shortest round-trip form,
/// so that parse_config(render_config(c)) == c.
std::string render_config(const Config& config);

}  // namespace parahom
