#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace fraclab {

inline constexpr std::string_view kVersion = "0.1.0";

/// Exit statuses of a run.
enum ExitStatus : int {
  exit_ok = 0,
  exit_validation = 2,
  exit_accuracy = 3,
  exit_violation = 4,
};

/// A parsed scenario file. Keys are checked against the command's schema before anything
/// is computed; see docs/config.md.
struct ExperimentConfig {
  std::string name;
  std::string command;
  std::uint64_t seed = 1;
  nlohmann::json raw;

  /// Throws InvalidArgument ("config_invalid", "unknown_key", "s_out_of_range", ...).
  static ExperimentConfig from_json(const nlohmann::json& j, const std::string& fallback_name);
  /// Reads and parses a file; malformed JSON throws ParseError ("config_parse").
  static ExperimentConfig load(const std::filesystem::path& path);
};

struct RunResult {
  std::string name;
  std::string command;
  int exit_code = exit_ok;
  nlohmann::json report;
  /// Extra data files as (suffix, content); written next to the report as name.suffix.
  std::vector<std::pair<std::string, std::string>> files;
  /// Short classification for the corpus summary (verdict, oscillation class, or empty).
  std::string verdict;
  double tolerance = 0.0;
};

/// 64-bit FNV-1a of the canonical (key-sorted, compact) serialization.
std::uint64_t config_hash(const nlohmann::json& j);

/// Runs the configured pipeline. Library failures become error reports with the matching
/// exit status rather than exceptions.
RunResult run(const ExperimentConfig& config);
/// Loads and runs; a config that cannot be read or parsed yields an exit-2 report.
RunResult run_file(const std::filesystem::path& path);

/// Writes name.json and the data files into `dir` (created if needed).
void write_outputs(const RunResult& result, const std::filesystem::path& dir);

struct CorpusResult {
  int exit_code = exit_ok;
  std::vector<RunResult> runs;  ///< sorted by name
  std::string summary_csv;
};

/// Runs every *.json in `dir` on `threads` workers. An empty directory is a validation
/// error. The summary is ordered by scenario name and independent of the thread count.
CorpusResult run_corpus(const std::filesystem::path& dir, int threads);

}  // namespace fraclab
