#include "pursuit/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace pursuit {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError("config key '" + key + "': expected a number, got '" + s + "'");
  return v;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& s) {
  Int v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ConfigError("config key '" + key + "': expected an integer, got '" + s + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + s + "'");
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Ref>
Field make_field(std::string key, Ref ref) {
  using T = std::remove_reference_t<decltype(ref(std::declval<RunConfig&>()))>;
  Field f;
  f.key = key;
  f.set = [ref, key](RunConfig& c, const std::string& s) {
    if constexpr (std::is_same_v<T, double>) {
      ref(c) = parse_double(key, s);
    } else if constexpr (std::is_same_v<T, bool>) {
      ref(c) = parse_bool(key, s);
    } else {
      ref(c) = parse_int<T>(key, s);
    }
  };
  f.get = [ref](const RunConfig& c) -> std::string {
    const T& v = ref(const_cast<RunConfig&>(c));
    if constexpr (std::is_same_v<T, double>) {
      return format_double(v);
    } else if constexpr (std::is_same_v<T, bool>) {
      return v ? "true" : "false";
    } else {
      return std::to_string(v);
    }
  };
  return f;
}

#define PURSUIT_FIELD(name, expr) make_field(name, [](RunConfig& c) -> auto& { return expr; })

const std::vector<Field>& registry() {
  static const std::vector<Field> fields = [] {
    std::vector<Field> f{
        PURSUIT_FIELD("domain.scale", c.domain.scale),
        PURSUIT_FIELD("domain.t_max", c.domain.t_max),
        PURSUIT_FIELD("domain.map_seed", c.domain.map_seed),
        PURSUIT_FIELD("domain.visibility_min", c.domain.visibility_min),
        PURSUIT_FIELD("domain.dark_forest_threshold", c.domain.dark_forest_threshold),
        PURSUIT_FIELD("domain.noise_cell", c.domain.noise_cell),
        PURSUIT_FIELD("domain.known_hideouts", c.domain.known_hideouts),
        PURSUIT_FIELD("domain.unknown_hideouts", c.domain.unknown_hideouts),
        PURSUIT_FIELD("domain.rendezvous", c.domain.rendezvous),
        PURSUIT_FIELD("domain.landmark_separation", c.domain.landmark_separation),
        PURSUIT_FIELD("domain.capture_radius", c.domain.capture_radius),
        PURSUIT_FIELD("adversary.speed", c.domain.adversary_speed),
        PURSUIT_FIELD("adversary.sense_radius", c.domain.adversary_sense_radius),
    };
    for (int i = 0; i < kBlueTypeCount; ++i) {
      const std::string section(to_string(static_cast<AgentType>(i)));
      f.push_back(make_field(section + ".count",
                             [i](RunConfig& c) -> auto& { return c.domain.blue[i].count; }));
      f.push_back(make_field(section + ".speed",
                             [i](RunConfig& c) -> auto& { return c.domain.blue[i].speed; }));
      f.push_back(make_field(section + ".radius",
                             [i](RunConfig& c) -> auto& { return c.domain.blue[i].radius; }));
    }
    std::vector<Field> rest{
        PURSUIT_FIELD("policy.forest_weight", c.policy.forest_weight),
        PURSUIT_FIELD("policy.evade_timer", c.policy.evade_timer),
        PURSUIT_FIELD("policy.max_evasions", c.policy.max_evasions),
        PURSUIT_FIELD("policy.staleness", c.policy.staleness),
        PURSUIT_FIELD("policy.intercept_horizon", c.policy.intercept_horizon),
        PURSUIT_FIELD("policy.spiral_spacing", c.policy.spiral_spacing),
        PURSUIT_FIELD("policy.spiral_turns", c.policy.spiral_turns),
        PURSUIT_FIELD("dataset.history", c.dataset.history),
        PURSUIT_FIELD("dataset.stride", c.dataset.stride),
        PURSUIT_FIELD("dataset.max_detections", c.dataset.max_detections),
        PURSUIT_FIELD("model.components", c.model.components),
        PURSUIT_FIELD("model.embed", c.model.embed),
        PURSUIT_FIELD("model.hidden", c.model.hidden),
        PURSUIT_FIELD("model.mi_weight", c.model.mi_weight),
        PURSUIT_FIELD("model.use_gnn", c.model.use_gnn),
        PURSUIT_FIELD("model.use_mi", c.model.use_mi),
        PURSUIT_FIELD("model.use_omega_mm", c.model.use_omega_mm),
        PURSUIT_FIELD("model.mi_sweep", c.model.mi_sweep),
        PURSUIT_FIELD("model.horizon", c.model.horizon),
        PURSUIT_FIELD("train.learning_rate", c.train.learning_rate),
        PURSUIT_FIELD("train.batch_size", c.train.batch_size),
        PURSUIT_FIELD("train.epochs", c.train.epochs),
        PURSUIT_FIELD("train.seed", c.train.seed),
        PURSUIT_FIELD("eval.delta", c.eval.delta),
        PURSUIT_FIELD("eval.p_threshold", c.eval.p_threshold),
        PURSUIT_FIELD("eval.ct_samples", c.eval.ct_samples),
        PURSUIT_FIELD("eval.ade_top_component", c.eval.ade_top_component),
    };
    f.insert(f.end(), rest.begin(), rest.end());
    return f;
  }();
  return fields;
}

#undef PURSUIT_FIELD

const Field* find_field(const std::string& key) {
  for (const auto& f : registry())
    if (f.key == key) return &f;
  return nullptr;
}

void set_key(RunConfig& c, const std::string& key, const std::string& value) {
  const Field* f = find_field(key);
  if (!f) throw ConfigError("unknown config key '" + key + "'");
  f->set(c, value);
}

void validate(const RunConfig& c) {
  const auto& d = c.domain;
  if (!(d.scale >= 1.0 / 64.0 - 1e-12) || d.scale > 1.0)
    throw ConfigError("domain.scale must lie in [1/64, 1]");
  if (d.t_max < 1) throw ConfigError("domain.t_max must be >= 1");
  if (!(d.visibility_min > 0.0 && d.visibility_min <= 1.0))
    throw ConfigError("domain.visibility_min must lie in (0, 1]");
  if (d.known_hideouts < 0 || d.unknown_hideouts < 1 || d.rendezvous < 0)
    throw ConfigError("landmark counts must be non-negative with >= 1 unknown hideout");
  if (d.domain == Domain::narco && d.rendezvous < 1)
    throw ConfigError("narco domain needs domain.rendezvous >= 1");
  if (d.adversary_speed <= 0.0) throw ConfigError("adversary.speed must be > 0");
  for (int i = 0; i < kBlueTypeCount; ++i) {
    const auto& b = d.blue[i];
    const auto name = std::string(to_string(static_cast<AgentType>(i)));
    if (b.count < 0) throw ConfigError(name + ".count must be >= 0");
    if (b.radius < 0.0) throw ConfigError(name + ".radius must be >= 0");
    const bool camera = static_cast<AgentType>(i) == AgentType::camera;
    if (b.count > 0 && camera && b.speed != 0.0) throw ConfigError("camera.speed must be 0");
    if (b.count > 0 && !camera && b.speed <= 0.0) throw ConfigError(name + ".speed must be > 0");
  }
  if (c.policy.evade_timer < 1 || c.policy.max_evasions < 0 || c.policy.staleness < 0 || c.policy.forest_weight < 0.0 ||
      c.policy.spiral_spacing <= 0.0 || c.policy.spiral_turns < 1)
    throw ConfigError("policy parameters out of range");
  if (c.dataset.history < 0 || c.dataset.stride < 1 || c.dataset.max_detections < 1)
    throw ConfigError("dataset parameters out of range");
  if (c.model.components < 1) throw ConfigError("model.components must be >= 1");
  if (c.model.mi_weight < 0.0) throw ConfigError("model.mi_weight must be >= 0");
  if (c.model.use_mi && !c.model.use_omega_mm)
    throw ConfigError("model.use_mi requires model.use_omega_mm");
  if (c.model.horizon < 0) throw ConfigError("model.horizon must be >= 0");
  if (c.train.batch_size < 1 || c.train.epochs < 0) throw ConfigError("train parameters out of range");
  if (!(c.eval.delta > 0.0) || c.eval.ct_samples < 1) throw ConfigError("eval parameters out of range");
}

void sync_derived(RunConfig& c) {
  c.model.history = c.dataset.history;
  c.model.max_detections = c.dataset.max_detections;
}

}  // namespace

std::string_view to_string(Domain d) { return d == Domain::prison ? "prison" : "narco"; }

std::string_view to_string(AgentType t) {
  switch (t) {
    case AgentType::camera: return "camera";
    case AgentType::search_party: return "search_party";
    case AgentType::helicopter: return "helicopter";
    case AgentType::airplane: return "airplane";
    case AgentType::marine_vessel: return "marine_vessel";
    case AgentType::adversary: return "adversary";
  }
  return "unknown";
}

Domain parse_domain(std::string_view s) {
  if (s == "prison") return Domain::prison;
  if (s == "narco") return Domain::narco;
  throw ConfigError("unknown domain '" + std::string(s) + "'");
}

AgentType parse_agent_type(std::string_view s) {
  for (int i = 0; i < kAgentTypeCount; ++i)
    if (to_string(static_cast<AgentType>(i)) == s) return static_cast<AgentType>(i);
  throw std::invalid_argument("unknown agent type '" + std::string(s) + "'");
}

int DomainSpec::width() const { return std::max(1, static_cast<int>(std::lround(ref_width * scale))); }
int DomainSpec::height() const { return std::max(1, static_cast<int>(std::lround(ref_height * scale))); }

const BlueAgentSpec& DomainSpec::roster(AgentType t) const { return blue.at(static_cast<int>(t)); }
BlueAgentSpec& DomainSpec::roster(AgentType t) { return blue.at(static_cast<int>(t)); }

RunConfig RunConfig::defaults(Domain d) {
  RunConfig c;
  auto& s = c.domain;
  s.domain = d;
  if (d == Domain::prison) {
    s.ref_width = 2428;
    s.ref_height = 2428;
    s.roster(AgentType::camera) = {6, 0.0, 80.0};
    s.roster(AgentType::search_party) = {3, 6.5, 100.0};
    s.roster(AgentType::helicopter) = {1, 25.0, 200.0};
  } else {
    s.ref_width = 7884;
    s.ref_height = 3538;
    s.visibility_min = 0.4;
    s.dark_forest_threshold = 0.55;
    s.noise_cell = 640.0;
    s.known_hideouts = 0;
    s.unknown_hideouts = 2;
    s.rendezvous = 2;
    s.landmark_separation = 600.0;
    s.capture_radius = 25.0;
    s.adversary_speed = 15.0;
    s.adversary_sense_radius = 400.0;
    s.roster(AgentType::airplane) = {2, 60.0, 300.0};
    s.roster(AgentType::marine_vessel) = {3, 20.0, 150.0};
  }
  sync_derived(c);
  return c;
}

RunConfig RunConfig::parse(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.message() + " at line " +
                      std::to_string(e.line()));
  }
  Domain d = Domain::prison;
  if (auto name = tree.get_optional<std::string>("domain.name")) d = parse_domain(*name);
  RunConfig c = defaults(d);
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError("config key '" + section + "' must live inside a [section]");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      if (full == "domain.name") continue;
      set_key(c, full, value.data());
    }
  }
  sync_derived(c);
  validate(c);
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void RunConfig::apply_overrides(const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + a + "' is not key=value");
    const std::string key = a.substr(0, eq);
    const std::string value = a.substr(eq + 1);
    if (key == "domain.name") {
      if (parse_domain(value) != domain.domain)
        throw ConfigError("domain.name cannot be changed by an override");
      continue;
    }
    set_key(*this, key, value);
  }
  sync_derived(*this);
  validate(*this);
}

std::string RunConfig::to_ini() const {
  std::ostringstream out;
  std::string current;
  out << "[domain]\nname = " << to_string(domain.domain) << "\n";
  current = "domain";
  for (const auto& f : registry()) {
    const auto dot = f.key.find('.');
    const std::string section = f.key.substr(0, dot);
    if (section != current) {
      out << "\n[" << section << "]\n";
      current = section;
    }
    out << f.key.substr(dot + 1) << " = " << f.get(*this) << "\n";
  }
  return out.str();
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[i] = digits[v & 0xf];
  return s;
}

std::string RunConfig::hash() const { return hex64(fnv1a64(to_ini())); }

std::string RunConfig::simulation_hash() const {
  std::ostringstream sim;
  sim << "name = " << to_string(domain.domain) << "\n";
  for (const auto& f : registry()) {
    const std::string section = f.key.substr(0, f.key.find('.'));
    if (section == "dataset" || section == "model" || section == "train" || section == "eval") continue;
    sim << f.key << " = " << f.get(*this) << "\n";
  }
  return hex64(fnv1a64(sim.str()));
}

}  // namespace pursuit
