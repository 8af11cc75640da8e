#include "upen/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "upen/error.hpp"

namespace upen {

namespace {

struct Default {
  const char* key;
  const char* value;
};

// The complete set of recognised keys and their defaults.
constexpr Default kDefaults[] = {
    {"run.task", "explore"},
    {"run.policy", "upen"},
    {"run.episodes", "5"},
    {"run.seed", "1"},
    {"run.budget", "0"},
    {"run.checkpoint", "500"},
    {"run.floorplan", ""},
    {"run.weights", ""},
    {"run.ensemble_size", "4"},
    {"run.min_geodesic_m", "1.0"},
    {"run.min_gedr", "1.0"},
    {"run.success_radius_m", "0.2"},
    {"run.snapshots", "100,250,500,1000"},
    {"run.artifacts", "false"},
    {"run.output_dir", "upen_out"},
    {"policy.alpha1", "0.1"},
    {"policy.alpha2", "0.5"},
    {"policy.lookahead_m", "1.5"},
    {"policy.explore_cadence", "30"},
    {"policy.pointgoal_cadence", "20"},
    {"rrt.max_paths", "10"},
    {"rrt.goal_rate", "0.2"},
    {"rrt.step_cells", "5"},
    {"rrt.iterations", "3000"},
    {"rrt.occupancy_threshold", "0.6"},
    {"rrt.goal_tolerance_cells", "4"},
    {"sensor.fov_deg", "90"},
    {"sensor.n_rays", "128"},
    {"sensor.max_range_m", "5.0"},
    {"map.rows", "256"},
    {"map.cols", "256"},
    {"map.local_h", "160"},
    {"map.local_w", "160"},
    {"world.rows", "240"},
    {"world.cols", "240"},
    {"world.cell_size_m", "0.05"},
    {"world.room_slots_rows", "3"},
    {"world.room_slots_cols", "3"},
    {"world.min_room_cells", "58"},
    {"world.max_room_cells", "76"},
    {"world.corridor_width", "14"},
    {"world.extra_connection_prob", "0.2"},
    {"world.max_obstacles_per_room", "2"},
    {"train.members", "4"},
    {"train.plans", "8"},
    {"train.heldout_plans", "2"},
    {"train.episodes_per_plan", "4"},
    {"train.waypoints", "5"},
    {"train.samples_per_pair", "1500"},
    {"train.epochs", "15"},
    {"train.learning_rate", "0.5"},
    {"train.batch_size", "256"},
    {"train.seed", "1"},
    {"train.seed_base", "1000000"},
};

std::string trim(const std::string& s) {
  const auto b = std::find_if_not(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
  const auto e = std::find_if_not(s.rbegin(), s.rend(), [](unsigned char c) { return std::isspace(c); }).base();
  return b < e ? std::string(b, e) : std::string();
}

}  // namespace

Config::Config() {
  for (const Default& d : kDefaults) values_[d.key] = d.value;
}

bool Config::known_key(const std::string& key) {
  return std::any_of(std::begin(kDefaults), std::end(kDefaults), [&](const Default& d) { return key == d.key; });
}

void Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open config " + path);
  parse(in, path);
}

void Config::parse(std::istream& in, const std::string& origin) {
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorCode::kInvalidArgument, where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::kInvalidArgument, where + ": expected key = value");
    if (section.empty()) fail(ErrorCode::kInvalidArgument, where + ": key outside of a [section]");
    set(section + "." + trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void Config::set(const std::string& key, const std::string& value) {
  if (!known_key(key)) fail(ErrorCode::kInvalidArgument, "unknown config key '" + key + "'");
  values_[key] = value;
}

const std::string& Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) fail(ErrorCode::kInvalidArgument, "unknown config key '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::kInvalidArgument, key + ": expected a number, got '" + v + "'");
}

long long Config::get_int(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t used = 0;
    const long long i = std::stoll(v, &used);
    if (used == v.size()) return i;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::kInvalidArgument, key + ": expected an integer, got '" + v + "'");
}

bool Config::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(ErrorCode::kInvalidArgument, key + ": expected a boolean, got '" + v + "'");
}

std::vector<int> Config::get_int_list(const std::string& key) const {
  std::vector<int> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      fail(ErrorCode::kInvalidArgument, key + ": bad list element '" + item + "'");
    }
  }
  return out;
}

std::string Config::dump() const {
  std::ostringstream os;
  std::string section;
  for (const auto& [key, value] : values_) {
    const auto dot = key.find('.');
    const std::string s = key.substr(0, dot);
    if (s != section) {
      os << (section.empty() ? "" : "\n") << '[' << s << "]\n";
      section = s;
    }
    os << key.substr(dot + 1) << " = " << value << '\n';
  }
  return os.str();
}

}  // namespace upen
