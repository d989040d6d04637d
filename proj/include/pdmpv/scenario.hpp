#pragma once

// Scenario files: model selection, start state, sets and per-command
// settings in one JSON document, and the command dispatcher behind the CLI.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "pdmpv/pdmp.hpp"

namespace pdmpv {

/// Invalid scenario. `line` is 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::string path = "", std::size_t line = 0)
      : std::runtime_error(what), path_(std::move(path)), line_(line) {}
  const std::string& path() const noexcept { return path_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string path_;
  std::size_t line_;
};

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfigError = 2;

const std::vector<std::string>& scenario_commands();

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
};

struct RunOutcome {
  int exit_code = kExitSuccess;
  /// File name -> contents, written only after the command completes.
  std::map<std::string, std::string> artifacts;
  std::string summary;
};

/// Runs `command` on a parsed scenario without touching the filesystem.
/// Throws ConfigError for schema violations.
RunOutcome execute_scenario(const std::string& command, const nlohmann::json& scenario,
                            const RunOverrides& overrides = {});

/// Reads the scenario file, runs the command and writes the artifacts into
/// `out_dir`. Returns the exit status; diagnostics go to `err`.
int run_scenario(const std::string& command, const std::string& scenario_path,
                 const std::string& out_dir, const RunOverrides& overrides, std::ostream& log,
                 std::ostream& err);

/// 1-based line of the value at JSON pointer `path` in `text`, 0 if not found.
std::size_t locate_line(const std::string& text, const std::string& path);

}  // namespace pdmpv
