#include "gaitlab/config.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "gaitlab/kernels.hpp"

namespace gaitlab {

using nlohmann::json;

void PerturbationSchedule::validate() const {
  if (!(settle >= 0.0)) throw ConfigError("experiment.perturbation.settle", "must be >= 0");
  if (!(group_spacing > 0.0)) throw ConfigError("experiment.perturbation.group_spacing", "must be > 0");
  if (!(window > 0.0)) throw ConfigError("experiment.perturbation.window", "must be > 0");
  if (group_size == 0) throw ConfigError("experiment.perturbation.group_size", "must be > 0");
  if (groups == 0) throw ConfigError("experiment.perturbation.groups", "must be > 0");
  if (!(angle_spacing_deg > 0.0) ||
      std::abs(angle_spacing_deg * static_cast<double>(group_size) - 360.0) > 1e-9) {
    throw ConfigError("experiment.perturbation.angle_spacing_deg",
                      "group_size x angle_spacing_deg must cover exactly 360 degrees");
  }
  if (magnitudes.empty()) throw ConfigError("experiment.perturbation.magnitudes", "must not be empty");
  for (double m : magnitudes) {
    if (!std::isfinite(m) || m < 0.0) throw ConfigError("experiment.perturbation.magnitudes", "entries must be >= 0");
  }
}

std::string_view experiment_name(ExperimentType t) noexcept {
  switch (t) {
    case ExperimentType::Rollout: return "rollout";
    case ExperimentType::Balance: return "balance";
    case ExperimentType::Emergence: return "emergence";
    case ExperimentType::Disturbance: return "disturbance";
  }
  return "?";
}

bool ExperimentSection::terminates_on_failure() const noexcept {
  if (terminate_on_failure) return *terminate_on_failure;
  return type == ExperimentType::Rollout || type == ExperimentType::Disturbance;
}

namespace {

// Integers built in code arrive signed; parsed text arrives unsigned.
bool is_count(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

// Walks one JSON object, remembering which keys were consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  const json* find(const std::string& k) {
    seen_.insert(k);
    auto it = j_.find(k);
    if (it == j_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  void number(const std::string& k, double& out) {
    if (const json* v = find(k)) {
      if (!v->is_number()) throw ConfigError(key(k), "expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) throw ConfigError(key(k), "must be finite");
    }
  }

  void count(const std::string& k, std::size_t& out) {
    if (const json* v = find(k)) {
      if (!is_count(*v)) throw ConfigError(key(k), "expected a non-negative integer");
      out = v->get<std::size_t>();
    }
  }

  void flag(const std::string& k, bool& out) {
    if (const json* v = find(k)) {
      if (!v->is_boolean()) throw ConfigError(key(k), "expected true or false");
      out = v->get<bool>();
    }
  }

  void text(const std::string& k, std::string& out) {
    if (const json* v = find(k)) {
      if (!v->is_string()) throw ConfigError(key(k), "expected a string");
      out = v->get<std::string>();
    }
  }

  std::optional<Section> child(const std::string& k) {
    if (const json* v = find(k)) return Section(*v, key(k));
    return std::nullopt;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(key(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class F>
void wrap_errors(const std::string& key, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(key, e.what());
  }
}

ExperimentType parse_experiment(const std::string& s) {
  for (ExperimentType t : {ExperimentType::Rollout, ExperimentType::Balance, ExperimentType::Emergence,
                           ExperimentType::Disturbance}) {
    if (experiment_name(t) == s) return t;
  }
  throw ConfigError("experiment.type", "expected rollout, balance, emergence or disturbance, got '" + s + "'");
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  Section root(j, "");

  if (const json* v = root.find("format_version")) {
    if (!v->is_number_integer() || v->get<int>() != kConfigFormatVersion)
      throw ConfigError("format_version", "unsupported version, expected " + std::to_string(kConfigFormatVersion));
  }

  if (auto s = root.child("oscillator")) {
    s->number("dt", c.oscillator.dt);
    if (!(c.oscillator.dt > 0.0)) throw ConfigError("oscillator.dt", "must be > 0");
    std::string mode(coupling_mode_name(c.oscillator.coupling_mode));
    s->text("coupling_mode", mode);
    wrap_errors("oscillator.coupling_mode", [&] { c.oscillator.coupling_mode = parse_coupling_mode(mode); });
    s->number("diffusive_gain", c.oscillator.diffusive_gain);
    if (c.oscillator.diffusive_gain < 0.0) throw ConfigError("oscillator.diffusive_gain", "must be >= 0");
    s->number("blend_width", c.oscillator.blend_width);
    if (c.oscillator.blend_width < 0.0) throw ConfigError("oscillator.blend_width", "must be >= 0");
    s->text("kernel", c.oscillator.kernel);
    if (c.oscillator.kernel != "auto")
      wrap_errors("oscillator.kernel", [&] { (void)kernels::parse_isa(c.oscillator.kernel); });
    if (auto p = s->child("params")) {
      double omega = 1.0, sigma = 0.0, xi = 0.0;
      p->number("omega", omega);
      p->number("sigma", sigma);
      p->number("xi", xi);
      p->finish();
      wrap_errors("oscillator.params", [&] { c.oscillator.fixed_params = OscillatorParams(omega, sigma, xi); });
    }
    s->finish();
  }

  if (auto s = root.child("plant")) {
    PlantConfig& p = c.plant;
    s->number("body_half_length", p.body_half_length);
    s->number("body_half_width", p.body_half_width);
    s->number("step_length_gain", p.step_length_gain);
    s->number("failure_margin", p.failure_margin);
    s->number("failure_grace", p.failure_grace);
    s->number("velocity_time_constant", p.velocity_time_constant);
    s->number("capture_gain", p.capture_gain);
    s->number("grf_noise_std", p.grf_noise_std);
    s->finish();
  }
  wrap_errors("plant", [&] { c.plant.validate(); });

  if (auto s = root.child("rewards")) {
    auto read_map = [&](const std::string& name, std::map<std::string, double>& out) {
      if (auto m = s->child(name)) {
        for (const std::string& term : known_reward_terms()) {
          double v = 0.0;
          if (m->find(term) == nullptr) continue;
          m->number(term, v);
          out[term] = v;
        }
        m->finish();
      }
    };
    if (s->find("weights") != nullptr) c.rewards.weights.clear();
    read_map("weights", c.rewards.weights);
    read_map("scales", c.rewards.scales);
    for (const auto& [term, v] : c.rewards.scales) {
      if (!(v > 0.0)) throw ConfigError("rewards.scales." + term, "must be > 0");
    }
    s->finish();
  }

  if (auto s = root.child("analysis")) {
    AnalysisSection& a = c.analysis;
    s->number("touchdown_threshold", a.touchdown_threshold);
    s->number("debounce", a.debounce);
    s->flag("wrap_aware", a.wrap_aware);
    s->count("window_cycles", a.window_cycles);
    s->number("stride", a.stride);
    s->number("stationary_tolerance", a.stationary_tolerance);
    s->number("stationary_window", a.stationary_window);
    if (a.window_cycles == 0) throw ConfigError("analysis.window_cycles", "must be > 0");
    if (!(a.stride > 0.0)) throw ConfigError("analysis.stride", "must be > 0");
    if (a.debounce < 0.0) throw ConfigError("analysis.debounce", "must be >= 0");
    s->finish();
  }

  if (auto s = root.child("experiment")) {
    ExperimentSection& e = c.experiment;
    std::string type(experiment_name(e.type));
    s->text("type", type);
    e.type = parse_experiment(type);
    s->number("duration", e.duration);
    if (!(e.duration > 0.0)) throw ConfigError("experiment.duration", "must be > 0");
    s->number("v_x", e.v_x);
    s->number("yaw_rate", e.yaw_rate);
    if (const json* m = s->find("masks")) {
      if (!m->is_array() || m->empty()) throw ConfigError("experiment.masks", "expected a non-empty array");
      e.masks.clear();
      for (const json& item : *m) {
        if (!item.is_string()) throw ConfigError("experiment.masks", "entries must be strings like \"ORC111\"");
        wrap_errors("experiment.masks", [&] { e.masks.push_back(OrcMask::parse(item.get<std::string>())); });
      }
    }
    if (const json* v = s->find("eval_sigma")) {
      if (!v->is_number() || v->get<double>() < 0.0)
        throw ConfigError("experiment.eval_sigma", "expected a number >= 0");
      e.eval_sigma = v->get<double>();
    }
    if (const json* v = s->find("terminate_on_failure")) {
      if (!v->is_boolean()) throw ConfigError("experiment.terminate_on_failure", "expected true or false");
      e.terminate_on_failure = v->get<bool>();
    }
    if (const json* v = s->find("initial_phases")) {
      if (!v->is_array() || v->size() != kLegCount)
        throw ConfigError("experiment.initial_phases", "expected 4 numbers (RF, LF, RH, LH)");
      PerLeg<double> ph{};
      for (std::size_t i = 0; i < kLegCount; ++i) {
        if (!(*v)[i].is_number()) throw ConfigError("experiment.initial_phases", "expected numbers");
        ph[i] = (*v)[i].get<double>();
      }
      e.initial_phases = ph;
    }
    if (auto p = s->child("perturbation")) {
      PerturbationSchedule& ps = e.perturbation;
      p->number("settle", ps.settle);
      p->number("group_spacing", ps.group_spacing);
      p->number("angle_spacing_deg", ps.angle_spacing_deg);
      p->count("group_size", ps.group_size);
      p->count("groups", ps.groups);
      p->number("window", ps.window);
      if (const json* m = p->find("magnitudes")) {
        if (!m->is_array()) throw ConfigError("experiment.perturbation.magnitudes", "expected an array");
        ps.magnitudes.clear();
        for (const json& item : *m) {
          if (!item.is_number()) throw ConfigError("experiment.perturbation.magnitudes", "expected numbers");
          ps.magnitudes.push_back(item.get<double>());
        }
      }
      p->finish();
    }
    e.perturbation.validate();
    s->finish();
  }

  if (auto s = root.child("output")) {
    s->text("directory", c.output.directory);
    s->text("format", c.output.format);
    if (c.output.format != "csv") throw ConfigError("output.format", "only \"csv\" is supported");
    s->count("decimation", c.output.decimation);
    if (c.output.decimation == 0) throw ConfigError("output.decimation", "must be >= 1");
    s->finish();
  }

  if (auto s = root.child("seed")) {
    if (const json* v = s->find("base")) {
      if (!is_count(*v)) throw ConfigError("seed.base", "expected a non-negative integer");
      c.seed.base = v->get<std::uint64_t>();
    }
    s->count("count", c.seed.count);
    if (c.seed.count == 0) throw ConfigError("seed.count", "must be >= 1");
    s->finish();
  }

  root.finish();
  return c;
}

RunConfig RunConfig::load(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("parse error: ") + e.what());
  }
  for (const std::string& o : overrides) apply_override(j, o);
  return from_json(j);
}

json RunConfig::to_json() const {
  json j;
  j["format_version"] = kConfigFormatVersion;

  json osc{{"dt", oscillator.dt},
           {"coupling_mode", std::string(coupling_mode_name(oscillator.coupling_mode))},
           {"diffusive_gain", oscillator.diffusive_gain},
           {"blend_width", oscillator.blend_width},
           {"kernel", oscillator.kernel}};
  if (oscillator.fixed_params) {
    const auto& p = *oscillator.fixed_params;
    osc["params"] = {{"omega", p.omega()}, {"sigma", p.sigma()}, {"xi", p.xi()}};
  } else {
    osc["params"] = nullptr;
  }
  j["oscillator"] = osc;

  j["plant"] = {{"body_half_length", plant.body_half_length},
                {"body_half_width", plant.body_half_width},
                {"step_length_gain", plant.step_length_gain},
                {"failure_margin", plant.failure_margin},
                {"failure_grace", plant.failure_grace},
                {"velocity_time_constant", plant.velocity_time_constant},
                {"capture_gain", plant.capture_gain},
                {"grf_noise_std", plant.grf_noise_std}};

  j["rewards"] = {{"weights", rewards.weights}, {"scales", rewards.scales}};

  j["analysis"] = {{"touchdown_threshold", analysis.touchdown_threshold},
                   {"debounce", analysis.debounce},
                   {"wrap_aware", analysis.wrap_aware},
                   {"window_cycles", analysis.window_cycles},
                   {"stride", analysis.stride},
                   {"stationary_tolerance", analysis.stationary_tolerance},
                   {"stationary_window", analysis.stationary_window}};

  json masks = json::array();
  for (const OrcMask& m : experiment.masks) masks.push_back(m.name());
  const PerturbationSchedule& ps = experiment.perturbation;
  json e{{"type", std::string(experiment_name(experiment.type))},
         {"duration", experiment.duration},
         {"v_x", experiment.v_x},
         {"yaw_rate", experiment.yaw_rate},
         {"masks", masks},
         {"terminate_on_failure", experiment.terminates_on_failure()},
         {"perturbation",
          {{"settle", ps.settle},
           {"group_spacing", ps.group_spacing},
           {"angle_spacing_deg", ps.angle_spacing_deg},
           {"group_size", ps.group_size},
           {"groups", ps.groups},
           {"magnitudes", ps.magnitudes},
           {"window", ps.window}}}};
  e["eval_sigma"] = experiment.eval_sigma ? json(*experiment.eval_sigma) : json(nullptr);
  e["initial_phases"] = experiment.initial_phases ? json(*experiment.initial_phases) : json(nullptr);
  j["experiment"] = e;

  j["output"] = {{"directory", output.directory}, {"format", output.format}, {"decimation", output.decimation}};
  j["seed"] = {{"base", seed.base}, {"count", seed.count}};
  return j;
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xF]);
  }
  return out;
}

std::string RunConfig::digest() const {
  json j = to_json();
  j.erase("seed");
  j["output"].erase("directory");
  return sha256_hex(j.dump());
}

std::vector<std::uint64_t> RunConfig::seeds() const {
  std::vector<std::uint64_t> s(seed.count);
  for (std::size_t i = 0; i < seed.count; ++i) s[i] = seed.base + i;
  return s;
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError(assignment, "override must look like key.path=value");
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);

  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::parse_error&) {
    parsed = value;
  }

  json* node = &j;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    json& next = (*node)[parts[i]];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) throw ConfigError(path, "'" + parts[i] + "' is not a section");
    node = &next;
  }
  (*node)[parts.back()] = parsed;
}

}  // namespace gaitlab
