#include "mobsim/io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "mobsim/rng.hpp"

namespace mobsim {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

template <typename T>
T parse_number(const std::string& s, std::size_t line, const char* what) {
  T v{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("line " + std::to_string(line) + ": bad " + what + " '" + s + "'", line);
  }
  return v;
}

std::optional<double> as_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

int days_spanned(const Trajectory& t, const GridSpec& grid) {
  const std::int64_t end = t.stays.empty() ? 1 : t.stays.back().end_slot();
  return static_cast<int>(std::max<std::int64_t>(1, (end + grid.slots_per_day - 1) / grid.slots_per_day));
}

template <typename T>
T required(const Json& j, const char* key) {
  if (!j.contains(key)) throw std::invalid_argument(std::string("missing field '") + key + "'");
  return j.at(key).get<T>();
}

}  // namespace

void write_trajectories_csv(std::ostream& os, std::span<const Trajectory> ts, const GridSpec& grid) {
  os << "user_id,day,start_slot,duration_slots,cell_x,cell_y\n";
  for (const Trajectory& t : ts) {
    const std::string id = csv_field(t.user_id.value_or(""));
    for (const Stay& s : t.stays) {
      os << id << ',' << s.start_slot / grid.slots_per_day << ',' << s.start_slot % grid.slots_per_day << ','
         << s.duration_slots << ',' << s.cell.x << ',' << s.cell.y << '\n';
    }
  }
}

std::vector<Trajectory> read_trajectories_csv(std::istream& is, const GridSpec& grid) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<Trajectory> out;
  std::map<std::string, std::size_t> index;  // named users may interleave
  std::optional<std::size_t> open_anonymous;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("user_id", 0) == 0) continue;
    }
    const auto f = split_csv(line);
    if (f.size() != 6) throw ParseError("line " + std::to_string(lineno) + ": expected 6 fields", lineno);
    const auto day = parse_number<std::int64_t>(f[1], lineno, "day");
    const auto slot = parse_number<std::int64_t>(f[2], lineno, "start_slot");
    const auto dur = parse_number<std::int64_t>(f[3], lineno, "duration_slots");
    const auto x = parse_number<std::int32_t>(f[4], lineno, "cell_x");
    const auto y = parse_number<std::int32_t>(f[5], lineno, "cell_y");
    if (day < 0 || slot < 0 || slot >= grid.slots_per_day || dur < 1 || x < 0 || y < 0) {
      throw ParseError("line " + std::to_string(lineno) + ": value out of range", lineno);
    }
    const Stay stay{{x, y}, day * grid.slots_per_day + slot, dur};

    Trajectory* t = nullptr;
    if (f[0].empty()) {
      // anonymous rows: a stay that starts before the previous one ends opens a new trajectory
      if (!open_anonymous || out[*open_anonymous].stays.back().end_slot() > stay.start_slot) {
        open_anonymous = out.size();
        out.emplace_back();
      }
      t = &out[*open_anonymous];
    } else {
      auto [it, inserted] = index.try_emplace(f[0], out.size());
      if (inserted) {
        out.emplace_back();
        out.back().user_id = f[0];
      }
      t = &out[it->second];
      if (!t->stays.empty() && t->stays.back().end_slot() > stay.start_slot) {
        throw ParseError("line " + std::to_string(lineno) + ": overlapping stay for user " + f[0], lineno);
      }
    }
    t->stays.push_back(stay);
  }
  for (Trajectory& t : out) t.num_days = days_spanned(t, grid);
  return out;
}

void save_trajectories(const std::filesystem::path& path, std::span<const Trajectory> ts, const GridSpec& grid) {
  std::ostringstream os;
  write_trajectories_csv(os, ts, grid);
  write_text_file(path, os.str());
}

std::vector<Trajectory> load_trajectories(const std::filesystem::path& path, const GridSpec& grid) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_trajectories_csv(is, grid);
}

Json to_json(const GridSpec& g) {
  return {{"cell_size_m", g.cell_size_m},
          {"origin", {{"lat", g.origin.lat}, {"lon", g.origin.lon}}},
          {"slots_per_day", g.slots_per_day}};
}

GridSpec grid_from_json(const Json& j) {
  GridSpec g;
  g.cell_size_m = j.value("cell_size_m", g.cell_size_m);
  g.slots_per_day = j.value("slots_per_day", g.slots_per_day);
  if (j.contains("origin")) {
    g.origin.lat = j["origin"].value("lat", g.origin.lat);
    g.origin.lon = j["origin"].value("lon", g.origin.lon);
  }
  validate(g);
  return g;
}

Json to_json(const GeneratorParams& p) {
  Json j;
  for (ParamField f : kAllParamFields) j[std::string(to_string(f))] = get(p, f);
  j["home_cell"] = {p.home_cell.x, p.home_cell.y};
  j["activity"] = p.activity;
  j["num_days"] = p.num_days;
  return j;
}

GeneratorParams params_from_json(const Json& j, const GeneratorParams& defaults) {
  GeneratorParams p = defaults;
  for (ParamField f : kAllParamFields) {
    const std::string key(to_string(f));
    if (j.contains(key)) set(p, f, j[key].get<double>());
  }
  if (j.contains("home_cell")) {
    const auto& h = j["home_cell"];
    if (!h.is_array() || h.size() != 2) throw std::invalid_argument("home_cell must be [x, y]");
    p.home_cell = {h[0].get<std::int32_t>(), h[1].get<std::int32_t>()};
  }
  if (j.contains("activity")) {
    const auto& a = j["activity"];
    if (!a.is_array() || a.size() != 24) throw std::invalid_argument("activity must have 24 weights");
    for (std::size_t h = 0; h < 24; ++h) p.activity[h] = a[h].get<double>();
  }
  p.num_days = j.value("num_days", p.num_days);
  return p;
}

Json to_json(const UserProfile& p) {
  Json attrs = Json::array();
  for (const auto& [k, v] : p.attributes) {
    Json value = std::holds_alternative<double>(v) ? Json(std::get<double>(v)) : Json(std::get<std::string>(v));
    attrs.push_back({{"key", k}, {"value", value}});
  }
  return {{"id", p.id}, {"attributes", attrs}};
}

UserProfile profile_from_json(const Json& j) {
  UserProfile p;
  p.id = required<std::string>(j, "id");
  for (const auto& a : j.value("attributes", Json::array())) {
    const auto& v = a.at("value");
    p.attributes.emplace_back(a.at("key").get<std::string>(),
                              v.is_number() ? AttributeValue(v.get<double>()) : AttributeValue(v.get<std::string>()));
  }
  return p;
}

Json to_json(const PromptDoc& d) {
  return {{"profile", to_json(d.profile)}, {"base_text", d.base_text}, {"constraints", d.constraints},
          {"persona", d.persona},         {"params", to_json(d.params)}, {"revision", d.revision}};
}

PromptDoc prompt_from_json(const Json& j) {
  PromptDoc d;
  d.profile = profile_from_json(j.at("profile"));
  d.base_text = j.value("base_text", "");
  d.constraints = j.value("constraints", std::vector<std::string>{});
  d.persona = j.value("persona", "");
  GeneratorParams defaults;
  defaults.activity = default_activity();
  d.params = params_from_json(j.value("params", Json::object()), defaults);
  d.revision = j.value("revision", 0u);
  return d;
}

Json to_json(const PromptSet& ps) {
  Json prompts = Json::array();
  for (const auto& [id, doc] : ps.prompts) prompts.push_back(to_json(doc));
  return {{"seed", ps.seed}, {"prompts", prompts}};
}

PromptSet promptset_from_json(const Json& j) {
  PromptSet ps;
  ps.seed = j.value("seed", std::uint64_t{0});
  for (const auto& pj : j.at("prompts")) {
    PromptDoc d = prompt_from_json(pj);
    const std::string id = d.profile.id;
    if (!ps.prompts.emplace(id, std::move(d)).second) throw std::invalid_argument("duplicate prompt id " + id);
  }
  return ps;
}

void save_promptset(const std::filesystem::path& path, const PromptSet& ps) {
  write_text_file(path, to_json(ps).dump(1) + "\n");
}

PromptSet load_promptset(const std::filesystem::path& path) { return promptset_from_json(read_json_file(path)); }

std::string content_hash(const PromptSet& ps) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json(ps).dump())));
  return buf;
}

Json to_json(const GuidanceConfig& cfg) {
  Json objectives = Json::array();
  for (const ObjectiveSpec& o : cfg.objectives) {
    Json oj{{"measure_id", std::string(to_string(o.measure))},
            {"kind", o.kind == DistanceKind::Vector ? "vector" : "scalar"}};
    if (o.kind == DistanceKind::Vector) {
      oj["sample_kind"] = std::string(to_string(o.target.kind));
      oj["samples"] = o.target.samples;
    } else {
      oj["scalar"] = o.target_scalar;
    }
    objectives.push_back(std::move(oj));
  }
  return {{"shared_data_type", std::string(to_string(cfg.shared_data_type))},
          {"mu", cfg.mu},
          {"epsilon_reward", cfg.epsilon_reward},
          {"epsilon_log", cfg.epsilon_log},
          {"l1_log_coords", cfg.l1_log_coords},
          {"objectives", objectives}};
}

GuidanceConfig guidance_from_json(const Json& j) {
  GuidanceConfig cfg;
  cfg.shared_data_type = shared_data_type_from_string(required<std::string>(j, "shared_data_type"));
  cfg.mu = j.value("mu", cfg.mu);
  cfg.epsilon_reward = j.value("epsilon_reward", cfg.epsilon_reward);
  cfg.epsilon_log = j.value("epsilon_log", cfg.epsilon_log);
  cfg.l1_log_coords = j.value("l1_log_coords", cfg.l1_log_coords);
  for (const auto& oj : j.at("objectives")) {
    ObjectiveSpec o;
    o.measure = measure_id_from_string(required<std::string>(oj, "measure_id"));
    const std::string kind = oj.value("kind", std::string(distance_kind_of(o.measure) == DistanceKind::Vector ? "vector" : "scalar"));
    if (kind != "vector" && kind != "scalar") throw std::invalid_argument("objective kind must be vector or scalar");
    o.kind = kind == "vector" ? DistanceKind::Vector : DistanceKind::Scalar;
    if (o.kind == DistanceKind::Vector) {
      o.target.kind = oj.contains("sample_kind") ? sample_kind_from_string(oj["sample_kind"].get<std::string>())
                                                 : sample_kind_of(o.measure);
      o.target.samples = required<std::vector<double>>(oj, "samples");
    } else {
      o.target_scalar = required<double>(oj, "scalar");
    }
    cfg.objectives.push_back(std::move(o));
  }
  validate(cfg);
  return cfg;
}

void save_target(const std::filesystem::path& path, const GuidanceConfig& cfg) {
  write_text_file(path, to_json(cfg).dump(1) + "\n");
}

GuidanceConfig load_target(const std::filesystem::path& path) { return guidance_from_json(read_json_file(path)); }

std::vector<UserProfile> read_profiles_csv(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  std::vector<UserProfile> out;
  std::map<std::string, std::size_t> seen;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto f = split_csv(line);
    if (header.empty()) {
      if (f.empty() || f[0] != "id") throw ParseError("profiles: header must start with 'id'", lineno);
      header = std::move(f);
      continue;
    }
    if (f.size() != header.size()) {
      throw ParseError("line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) + " fields",
                       lineno);
    }
    UserProfile p;
    p.id = f[0];
    if (p.id.empty()) throw ParseError("line " + std::to_string(lineno) + ": empty id", lineno);
    if (!seen.emplace(p.id, lineno).second) {
      throw ParseError("line " + std::to_string(lineno) + ": duplicate id " + p.id, lineno);
    }
    for (std::size_t k = 1; k < f.size(); ++k) {
      const auto num = as_number(f[k]);
      p.attributes.emplace_back(header[k], num ? AttributeValue(*num) : AttributeValue(f[k]));
    }
    out.push_back(std::move(p));
  }
  if (header.empty()) throw ParseError("profiles: empty file", 0);
  return out;
}

void write_profiles_csv(std::ostream& os, std::span<const UserProfile> profiles) {
  os << "id";
  if (!profiles.empty()) {
    for (const auto& [k, v] : profiles.front().attributes) os << ',' << csv_field(k);
  }
  os << '\n';
  for (const UserProfile& p : profiles) {
    os << csv_field(p.id);
    for (const auto& [k, v] : p.attributes) {
      os << ',';
      if (std::holds_alternative<double>(v)) {
        os << Json(std::get<double>(v)).dump();
      } else {
        os << csv_field(std::get<std::string>(v));
      }
    }
    os << '\n';
  }
}

std::vector<UserProfile> load_profiles(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_profiles_csv(is);
}

Json read_json_file(const std::filesystem::path& path) {
  try {
    return Json::parse(read_text_file(path));
  } catch (const Json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    os << text;
    if (!os) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace mobsim
