#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace parahom {

inline const std::vector<std::string> kCommands{"cell", "hom", "solve", "sweep", "fundsol", "rotate", "report"};

struct RunOptions {
  std::string command;
  std::filesystem::path config;  // YAML config, or a JSON report for the report command
  std::filesystem::path out;
  bool quiet = false;
};

/// Exit status: 0 pass, 1 threshold/solver/IO failure, 2 usage or config error.
int run_command(const RunOptions& options, std::ostream& out, std::ostream& err);

/// `parahom <command> --config <path> --out <dir> [--quiet]`
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace parahom
