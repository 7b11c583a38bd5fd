#pragma once

#include "swl/experiments.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace swl {

inline constexpr const char* kArtifactVersion = "1.0.0";
inline constexpr int kCsvSchemaVersion = 1;

/// Defaults: n = 1, kappa = -0.25, T = 1, n_r = 400, grading = 2, n_t = n_r,
/// seed = 0, lambda grid {10, 20, 40, 80, 160}, corpus "standard".
struct RunConfig {
  std::string command;
  int n = 1;
  double kappa = -0.25;
  double T = 1.0;
  int n_r = 400;
  int n_t = 0;  ///< 0 means n_r
  double grading = 2.0;
  double epsilon = 0.1;
  std::vector<double> lambda_grid{10, 20, 40, 80, 160};
  std::vector<double> T_list;  ///< observability; empty means 1.2 x threshold
  std::vector<double> eps_seq{0.2, 0.1, 0.05, 0.025};
  std::uint64_t seed = 0;
  std::string corpus = "standard";  ///< standard | solver | neumann | zero
  std::string equation = "demo";    ///< demo | free | twisted
  int seeds = 10;
  double obs_grading = 1.0;  ///< radial grading for observability runs
  std::string out = "swl_out";

  bool operator==(const RunConfig&) const = default;
  int time_nodes() const { return n_t > 0 ? n_t : n_r; }
};

const std::vector<std::string>& known_commands();

/// key = value lines; '#' starts a comment. Unknown keys are errors.
RunConfig parse_config_text(const std::string& text, RunConfig base = {});
RunConfig parse_config_file(const std::string& path, RunConfig base = {});
/// Applies one key = value assignment (the same keys as the config file).
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
std::string serialize(const RunConfig& cfg);
/// Checks every module precondition that can be checked without computing.
void validate(const RunConfig& cfg);

using Cell = std::variant<std::string, double, long long, bool>;

struct ReportTable {
  std::string name;  ///< file stem
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

struct RunManifest {
  std::string config;  ///< serialized RunConfig
  std::string version = kArtifactVersion;
  std::string timestamp;  ///< UTC, ISO 8601
  std::vector<std::pair<std::string, bool>> checks;
  std::vector<std::string> files;
  bool failed = false;
};

/// Doubles are printed with 17 significant digits.
std::string format_cell(const Cell& c);
std::string to_csv(const ReportTable& table);

/// Writes <name>.csv and <name>.jsonl per table, then manifest.json, each
/// through a temporary file and a rename. On error the written files are
/// removed, a failed manifest is left behind and the error is rethrown.
std::vector<std::string> write_reports(const std::vector<ReportTable>& tables, RunManifest manifest,
                                       const std::string& outdir);

/// Runs cfg.command. Exit code 0 when every check passes, 2 on a failed
/// check, 1 on configuration errors.
int dispatch(const RunConfig& cfg, std::ostream& log);

}  // namespace swl
