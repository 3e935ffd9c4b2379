#pragma once

// CSV and manifest writers plus the readers used by `classify`. Numbers are
// written with std::to_chars so output never depends on the C locale.

#include <filesystem>
#include <istream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gaitlab/config.hpp"
#include "gaitlab/gait_analysis.hpp"
#include "gaitlab/harness.hpp"
#include "gaitlab/rollout_log.hpp"

namespace gaitlab {

inline constexpr std::string_view kToolName = "gaitlab";
inline constexpr std::string_view kToolVersion = "1.0.0";

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Fixed notation, `digits` after the point; -0 prints as 0.
std::string fmt(double value, int digits = 9);

// Columns: time_s, phase_*, grf_*, stance_*, foot_*_x/_y, com_x, com_y,
// vel_x, vel_y, heading, cmd_vx, cmd_yaw_rate, gait_reward, impulse_x,
// impulse_y, then obs_sin_*/obs_cos_* when observations were logged.
std::string rollout_csv(const RolloutLog& log);
// leg,kind,time_s with kind touchdown | liftoff, sorted by time.
std::string events_csv(const RolloutLog& log);

// time_s,rpd_lf,rpd_rh,rpd_lh,label; one row per complete cycle.
std::string rpd_csv(std::span<const RpdSample> samples, bool wrap_aware = true);
std::string aggregated_rpd_csv(std::span<const AggregatedRpd> ticks);

std::string balance_csv(const BalanceResult& result);          // fig4_balance.csv
std::string balance_summary_csv(const BalanceResult& result);  // fig4_balance_summary.csv
std::string emergence_csv(const EmergenceResult& result);      // fig5_rpd.csv
std::string labels_csv(const EmergenceResult& result);         // fig6_labels.csv
std::string failure_table_csv(const DisturbanceResult& result);   // table1_failures.csv
std::string failure_detail_csv(const DisturbanceResult& result);  // table1_failures_long.csv

// Reads `leg,time_s[,kind]` rows; kind defaults to touchdown.
TouchdownLog read_touchdown_csv(std::istream& in);
// Reads the time and grf_* columns of a rollout CSV.
GrfSeries read_rollout_grf(std::istream& in);

struct WrittenFile {
  std::string name;
  std::string sha256;
};

// Writes `content` to dir/name and returns its digest.
WrittenFile write_output(const std::filesystem::path& dir, const std::string& name, const std::string& content);

nlohmann::json make_manifest(const std::string& command, const RunConfig& config,
                             std::span<const std::uint64_t> seeds, std::span<const WrittenFile> files);

// A manifest can stand in for a config file: returns its embedded config
// and the kernel it was produced with, or nullopt for a plain config.
struct ManifestReplay {
  nlohmann::json config;
  std::string kernel;
  std::string command;
};
std::optional<ManifestReplay> as_manifest(const nlohmann::json& j);

}  // namespace gaitlab
