#include "gaitlab/io.hpp"

#include "gaitlab/kernels.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace gaitlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<std::string_view, kLegCount> kLower{"rf", "lf", "rh", "lh"};

std::string lower_leg(std::size_t i) { return std::string(kLower[i]); }

void add_leg_columns(std::string& header, std::string_view prefix, std::string_view suffix = "") {
  for (std::size_t i = 0; i < kLegCount; ++i) {
    header += ',';
    header += prefix;
    header += kLower[i];
    header += suffix;
  }
}

std::string opt_time(const std::optional<double>& t) { return t ? fmt(*t, 6) : std::string(); }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& text, std::size_t line, const std::string& column) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw ParseError(line, "column '" + column + "': not a finite number: '" + text + "'");
  return v;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

}  // namespace

std::string fmt(double value, int digits) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::fixed, digits);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  std::string s(buf.data(), ptr);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string rollout_csv(const RolloutLog& log) {
  std::string h = "time_s";
  add_leg_columns(h, "phase_");
  add_leg_columns(h, "grf_");
  add_leg_columns(h, "stance_");
  for (std::size_t i = 0; i < kLegCount; ++i) h += ",foot_" + lower_leg(i) + "_x,foot_" + lower_leg(i) + "_y";
  h += ",com_x,com_y,vel_x,vel_y,heading,cmd_vx,cmd_yaw_rate,gait_reward,impulse_x,impulse_y";
  if (log.observations) {
    for (std::size_t i = 0; i < kLegCount; ++i) h += ",obs_sin_" + lower_leg(i) + ",obs_cos_" + lower_leg(i);
  }
  std::string out = h + '\n';
  for (std::size_t k = 0; k < log.size(); ++k) {
    std::string row = fmt(log.time[k], 6);
    for (double p : log.phases[k]) row += ',' + fmt(p);
    for (double g : log.grf[k]) row += ',' + fmt(g);
    for (std::uint8_t s : log.stance[k]) row += s ? ",1" : ",0";
    for (const Vec2& f : log.feet[k]) row += ',' + fmt(f.x) + ',' + fmt(f.y);
    row += ',' + fmt(log.com[k].x) + ',' + fmt(log.com[k].y);
    row += ',' + fmt(log.velocity[k].x) + ',' + fmt(log.velocity[k].y);
    row += ',' + fmt(log.heading[k]) + ',' + fmt(log.cmd_forward[k]) + ',' + fmt(log.cmd_yaw_rate[k]);
    row += ',' + fmt(log.gait_reward[k]);
    row += ',' + fmt(log.impulse[k].x) + ',' + fmt(log.impulse[k].y);
    if (log.observations) {
      const PhaseObservation& o = (*log.observations)[k];
      for (std::size_t i = 0; i < kLegCount; ++i) row += ',' + fmt(o.values[2 * i]) + ',' + fmt(o.values[2 * i + 1]);
    }
    out += row + '\n';
  }
  return out;
}

std::string events_csv(const RolloutLog& log) {
  std::vector<ContactRecord> events = log.contacts;
  std::stable_sort(events.begin(), events.end(),
                   [](const ContactRecord& a, const ContactRecord& b) { return a.time < b.time; });
  std::string out = "leg,kind,time_s\n";
  for (const ContactRecord& e : events) {
    out += std::string(leg_name(e.leg)) + ',' + (e.kind == ContactEvent::Touchdown ? "touchdown" : "liftoff") + ',' +
           fmt(e.time, 9) + '\n';
  }
  return out;
}

std::string rpd_csv(std::span<const RpdSample> samples, bool wrap_aware) {
  std::string out = "time_s,rpd_lf,rpd_rh,rpd_lh,label\n";
  for (const RpdSample& s : samples) {
    const Classification c = classify_gait(s, wrap_aware);
    out += fmt(s.cycle_start, 6) + ',' + fmt(s.values[0]) + ',' + fmt(s.values[1]) + ',' + fmt(s.values[2]) + ',' +
           std::string(gait_name(c.label)) + '\n';
  }
  return out;
}

std::string aggregated_rpd_csv(std::span<const AggregatedRpd> ticks) {
  std::string out = "time_s,rpd_lf,rpd_rh,rpd_lh,label\n";
  for (const AggregatedRpd& t : ticks) {
    out += fmt(t.time, 6) + ',' + fmt(t.rpd.values[0]) + ',' + fmt(t.rpd.values[1]) + ',' + fmt(t.rpd.values[2]) +
           ',' + std::string(gait_name(t.gait.label)) + '\n';
  }
  return out;
}

std::string balance_csv(const BalanceResult& result) {
  std::string out = "seed,mask,leg,mean_grf,failed,failure_time_s\n";
  for (const BalanceRecord& r : result.records) {
    for (std::size_t i = 0; i < kLegCount; ++i) {
      out += std::to_string(r.seed) + ',' + r.mask.name() + ',' + std::string(leg_name(kLegs[i])) + ',' +
             fmt(r.mean_grf[i]) + ',' + (r.failure_time ? "1" : "0") + ',' + opt_time(r.failure_time) + '\n';
    }
  }
  return out;
}

std::string balance_summary_csv(const BalanceResult& result) {
  std::string out = "mask,leg,count,failed,mean,min,q25,median,q75,max\n";
  for (const BalanceSummary& s : result.summarize()) {
    for (std::size_t i = 0; i < kLegCount; ++i) {
      const LegDistribution& d = s.legs[i];
      out += s.mask.name() + ',' + std::string(leg_name(kLegs[i])) + ',' + std::to_string(d.count) + ',' +
             std::to_string(s.failed) + ',' + fmt(d.mean) + ',' + fmt(d.min) + ',' + fmt(d.q25) + ',' +
             fmt(d.median) + ',' + fmt(d.q75) + ',' + fmt(d.max) + '\n';
    }
  }
  return out;
}

std::string emergence_csv(const EmergenceResult& result) {
  std::string out =
      "seed,mask,initial_lf,initial_rh,initial_lh,final_lf,final_rh,final_lh,final_label,final_distance,"
      "convergence_time_s,stationary,incomplete_cycles,failure_time_s\n";
  for (const EmergenceRecord& r : result.records) {
    std::string row = std::to_string(r.seed) + ',' + r.mask.name();
    for (double v : r.initial_rpd) row += ',' + fmt(v);
    if (r.final_rpd) {
      for (double v : r.final_rpd->rpd.values) row += ',' + fmt(v);
      row += ',' + std::string(gait_name(r.final_rpd->gait.label)) + ',' + fmt(r.final_rpd->gait.distance);
    } else {
      row += ",,,,,";
    }
    row += ',' + opt_time(r.convergence_time) + ',' + (r.stationary ? "1" : "0") + ',' +
           std::to_string(r.incomplete_cycles) + ',' + opt_time(r.failure_time);
    out += row + '\n';
  }
  return out;
}

std::string labels_csv(const EmergenceResult& result) {
  std::string out = "seed,mask,time_s,rpd_lf,rpd_rh,rpd_lh,label\n";
  for (const EmergenceRecord& r : result.records) {
    for (const AggregatedRpd& t : r.ticks) {
      out += std::to_string(r.seed) + ',' + r.mask.name() + ',' + fmt(t.time, 6) + ',' + fmt(t.rpd.values[0]) + ',' +
             fmt(t.rpd.values[1]) + ',' + fmt(t.rpd.values[2]) + ',' + std::string(gait_name(t.gait.label)) + '\n';
    }
  }
  return out;
}

std::string failure_table_csv(const DisturbanceResult& result) {
  const std::vector<FailureRow> rows = result.table();
  std::vector<std::string> masks;
  std::vector<double> magnitudes;
  for (const FailureRow& r : rows) {
    if (std::find(masks.begin(), masks.end(), r.mask.name()) == masks.end()) masks.push_back(r.mask.name());
    if (std::find(magnitudes.begin(), magnitudes.end(), r.magnitude) == magnitudes.end())
      magnitudes.push_back(r.magnitude);
  }
  std::sort(masks.begin(), masks.end());
  std::sort(magnitudes.begin(), magnitudes.end());

  std::string out = "magnitude_mps";
  for (const std::string& m : masks) out += ',' + m + "_mean_pct," + m + "_std_pct";
  out += '\n';
  for (double mag : magnitudes) {
    out += fmt(mag, 2);
    for (const std::string& m : masks) {
      auto it = std::find_if(rows.begin(), rows.end(),
                             [&](const FailureRow& r) { return r.magnitude == mag && r.mask.name() == m; });
      out += ',' + fmt(it->mean_pct, 4) + ',' + fmt(it->std_pct, 4);
    }
    out += '\n';
  }
  return out;
}

std::string failure_detail_csv(const DisturbanceResult& result) {
  std::string out = "magnitude_mps,mask,mean_pct,std_pct,families,trials,settle_failures\n";
  for (const FailureRow& r : result.table()) {
    out += fmt(r.magnitude, 2) + ',' + r.mask.name() + ',' + fmt(r.mean_pct, 4) + ',' + fmt(r.std_pct, 4) + ',' +
           std::to_string(r.families) + ',' + std::to_string(r.trials) + ',' +
           std::to_string(r.settle_failures) + '\n';
  }
  return out;
}

TouchdownLog read_touchdown_csv(std::istream& in) {
  std::string line;
  std::size_t n = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++n;
    if (!blank(line)) header = split_csv(line);
  }
  if (header.empty()) throw ParseError(n, "empty touchdown file");
  const auto col = [&](std::string_view name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto leg_col = col("leg");
  const auto time_col = col("time_s");
  const auto kind_col = col("kind");
  if (!leg_col || !time_col) throw ParseError(n, "header must contain 'leg' and 'time_s'");

  TouchdownLog log;
  while (std::getline(in, line)) {
    ++n;
    if (blank(line)) continue;
    const std::vector<std::string> cells = split_csv(line);
    if (cells.size() != header.size())
      throw ParseError(n, "expected " + std::to_string(header.size()) + " columns, got " + std::to_string(cells.size()));
    const auto leg = parse_leg(cells[*leg_col]);
    if (!leg) throw ParseError(n, "unknown leg '" + cells[*leg_col] + "'");
    const double t = parse_number(cells[*time_col], n, "time_s");
    bool touchdown = true;
    if (kind_col) {
      const std::string& k = cells[*kind_col];
      if (k == "liftoff") touchdown = false;
      else if (k != "touchdown") throw ParseError(n, "kind must be touchdown or liftoff, got '" + k + "'");
    }
    auto& list = touchdown ? log.touchdowns[index(*leg)] : log.liftoffs[index(*leg)];
    if (!list.empty() && t <= list.back())
      throw ParseError(n, "times for " + std::string(leg_name(*leg)) + " must be strictly increasing");
    list.push_back(t);
  }
  return log;
}

GrfSeries read_rollout_grf(std::istream& in) {
  std::string line;
  std::size_t n = 0;
  if (!std::getline(in, line)) throw ParseError(1, "empty rollout file");
  ++n;
  const std::vector<std::string> header = split_csv(line);
  std::optional<std::size_t> time_col;
  PerLeg<std::optional<std::size_t>> grf_col{};
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "time_s") time_col = c;
    for (std::size_t i = 0; i < kLegCount; ++i)
      if (header[c] == "grf_" + lower_leg(i)) grf_col[i] = c;
  }
  if (!time_col || std::any_of(grf_col.begin(), grf_col.end(), [](const auto& c) { return !c; }))
    throw ParseError(1, "header must contain time_s and grf_rf, grf_lf, grf_rh, grf_lh");

  GrfSeries series;
  std::vector<double> times;
  while (std::getline(in, line)) {
    ++n;
    if (blank(line)) continue;
    const std::vector<std::string> cells = split_csv(line);
    if (cells.size() != header.size())
      throw ParseError(n, "expected " + std::to_string(header.size()) + " columns, got " + std::to_string(cells.size()));
    times.push_back(parse_number(cells[*time_col], n, "time_s"));
    PerLeg<double> g{};
    for (std::size_t i = 0; i < kLegCount; ++i) g[i] = parse_number(cells[*grf_col[i]], n, header[*grf_col[i]]);
    series.values.push_back(g);
  }
  if (times.empty()) throw ParseError(n, "rollout file has no samples");
  series.start_time = times.front();
  if (times.size() > 1) series.sample_dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  if (times.size() > 1 && !(series.sample_dt > 0.0)) throw ParseError(n, "time_s must increase");
  return series;
}

WrittenFile write_output(const fs::path& dir, const std::string& name, const std::string& content) {
  fs::create_directories(dir);
  const fs::path path = dir / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
  return {name, sha256_hex(content)};
}

json make_manifest(const std::string& command, const RunConfig& config, std::span<const std::uint64_t> seeds,
                   std::span<const WrittenFile> files) {
  json masks = json::array();
  for (const OrcMask& m : config.experiment.masks) masks.push_back(m.name());
  json file_map = json::object();
  for (const WrittenFile& f : files) file_map[f.name] = f.sha256;
  return json{{"tool", kToolName},
              {"version", kToolVersion},
              {"config_format_version", kConfigFormatVersion},
              {"command", command},
              {"kernel", std::string(kernels::isa_name(kernels::active().isa))},
              {"config_digest", config.digest()},
              {"seeds", std::vector<std::uint64_t>(seeds.begin(), seeds.end())},
              {"masks", masks},
              {"config", config.to_json()},
              {"files", file_map}};
}

std::optional<ManifestReplay> as_manifest(const json& j) {
  if (!j.is_object() || !j.contains("tool") || j["tool"] != kToolName || !j.contains("config")) return std::nullopt;
  ManifestReplay r;
  r.config = j["config"];
  r.kernel = j.value("kernel", std::string("auto"));
  r.command = j.value("command", std::string());
  return r;
}

}  // namespace gaitlab
