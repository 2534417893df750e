#pragma once

// The kleinlab commands. Each returns a JSON report and an exit code:
// 0 success, 2 validation failure, 3 inconclusive budget (1 for anything
// unexpected).

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include "kleinlab/error.hpp"
#include "kleinlab/io.hpp"

namespace kleinlab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitInconclusive = 3;

struct CommandOptions {
  std::string file;
  std::optional<std::size_t> depth;
  std::optional<double> epsilon0;
  std::optional<std::size_t> samples;
  std::optional<std::uint64_t> seed;
  /// CSV destination for limitset and graph, the report for the others.
  std::optional<std::string> out;
  bool json = false;
};

struct CommandResult {
  int exit_code = kExitOk;
  Json report;
  /// One line per finding for the plain-text output.
  std::string summary;
  /// CSV body for limitset and graph.
  std::string csv;
};

/// Exit code for a library error.
int exit_code_for(ErrorCode code) noexcept;

CommandResult cmd_validate(const CommandOptions& opt);
CommandResult cmd_limitset(const CommandOptions& opt);
CommandResult cmd_dimension(const CommandOptions& opt);
CommandResult cmd_graph(const CommandOptions& opt);
CommandResult cmd_harmonic(const CommandOptions& opt);
CommandResult cmd_diagnose(const CommandOptions& opt);

/// Dispatch by name, turning library errors into reports with exit codes.
CommandResult run_command(const std::string& name, const CommandOptions& opt);

/// Writes the CSV (to --out or stdout) and the report (JSON or text) as the
/// flags ask. Returns the exit code.
int emit_result(const std::string& name, const CommandOptions& opt, const CommandResult& r, std::ostream& out,
                std::ostream& err);

}  // namespace kleinlab
