#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "stackheat/runner.hpp"
#include "stackheat/thermal.hpp"

#include "runner_util.hpp"

// Scenario files: an INI-style config with named sections plus one CSV per
// time series (header "hour,value", rows 0..T-1 in order). Paths inside the
// config are resolved relative to the config file. The writer uses shortest
// round-trip number formatting, so a written scenario loads back exactly.

namespace stackheat::runner {

namespace fs = std::filesystem;

ValidationError::ValidationError(const std::string& what_arg, std::vector<devices::Violation> v)
    : std::runtime_error(what_arg), violations(std::move(v)) {}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  std::size_t b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

struct IniValue {
  std::string text;
  int line = 0;
  mutable bool used = false;
};

struct IniSection {
  std::string name;
  int line = 0;
  std::map<std::string, IniValue> keys;
  mutable bool used = false;
};

// Line-oriented INI: [section] headers, key = value pairs, full-line comments
// starting with ';' or '#'. Repeated sections or keys are errors, not merges.
class Ini {
 public:
  explicit Ini(const std::string& path) : path_(path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError(path + ": cannot open scenario file");
    std::string raw;
    int line = 0;
    IniSection* cur = nullptr;
    while (std::getline(in, raw)) {
      ++line;
      const std::string s = trim(raw);
      if (s.empty() || s[0] == ';' || s[0] == '#') continue;
      if (s.front() == '[') {
        if (s.back() != ']') fail(line, "unterminated section header");
        const std::string name = trim(s.substr(1, s.size() - 2));
        if (name.empty()) fail(line, "empty section name");
        for (const IniSection& sec : sections_)
          if (sec.name == name) fail(line, "duplicate section [" + name + "]");
        sections_.push_back({name, line, {}, false});
        cur = &sections_.back();
        continue;
      }
      const std::size_t eq = s.find('=');
      if (eq == std::string::npos) fail(line, "expected 'key = value' or '[section]'");
      if (!cur) fail(line, "key outside any section");
      const std::string key = trim(s.substr(0, eq));
      const std::string value = trim(s.substr(eq + 1));
      if (key.empty()) fail(line, "empty key");
      if (value.empty()) fail(line, "empty value for '" + key + "'");
      if (!cur->keys.emplace(key, IniValue{value, line, false}).second)
        fail(line, "duplicate key '" + key + "' in [" + cur->name + "]");
    }
  }

  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw ScenarioError(path_ + ":" + std::to_string(line) + ": " + msg);
  }

  const IniSection* find(const std::string& name) const {
    for (const IniSection& sec : sections_)
      if (sec.name == name) {
        sec.used = true;
        return &sec;
      }
    return nullptr;
  }

  const IniSection& require(const std::string& name) const {
    const IniSection* sec = find(name);
    if (!sec) throw ScenarioError(path_ + ": missing section [" + name + "]");
    return *sec;
  }

  const std::string* get(const IniSection& sec, const std::string& key) const {
    auto it = sec.keys.find(key);
    if (it == sec.keys.end()) return nullptr;
    it->second.used = true;
    return &it->second.text;
  }

  const std::string& require(const IniSection& sec, const std::string& key) const {
    const std::string* v = get(sec, key);
    if (!v)
      throw ScenarioError(path_ + ": [" + sec.name + "] (line " + std::to_string(sec.line) +
                          ") is missing key '" + key + "'");
    return *v;
  }

  double number(const IniSection& sec, const std::string& key) const {
    return to_number(sec, key, require(sec, key));
  }

  double number_or(const IniSection& sec, const std::string& key, double fallback) const {
    const std::string* v = get(sec, key);
    return v ? to_number(sec, key, *v) : fallback;
  }

  long integer(const IniSection& sec, const std::string& key) const {
    const std::string& v = require(sec, key);
    long out = 0;
    const char* b = v.data();
    const char* e = b + v.size();
    auto [p, ec] = std::from_chars(b, e, out);
    if (ec != std::errc() || p != e)
      fail(sec.keys.at(key).line, "'" + key + "' must be an integer, got '" + v + "'");
    return out;
  }

  // Every parsed key and section must have been consumed by the loader;
  // leftovers are typos worth failing on.
  void reject_unused() const {
    for (const IniSection& sec : sections_) {
      if (!sec.used) fail(sec.line, "unknown section [" + sec.name + "]");
      for (const auto& [key, val] : sec.keys)
        if (!val.used) fail(val.line, "unknown key '" + key + "' in [" + sec.name + "]");
    }
  }

  const std::vector<IniSection>& sections() const { return sections_; }
  const std::string& path() const { return path_; }

 private:
  double to_number(const IniSection& sec, const std::string& key, const std::string& v) const {
    const char* b = v.c_str();
    char* end = nullptr;
    const double out = std::strtod(b, &end);
    if (end != b + v.size() || v.empty())
      fail(sec.keys.at(key).line, "'" + key + "' must be a number, got '" + v + "'");
    return out;
  }

  std::string path_;
  std::vector<IniSection> sections_;
};

// One time series from a "hour,value" CSV with exactly T in-order rows.
std::vector<double> load_profile(const std::string& path, int T) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path + ": cannot open profile file");
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw ScenarioError(path + ":" + std::to_string(lineno) + ": " + msg);
  };
  if (!std::getline(in, line)) {
    lineno = 1;
    fail("empty profile file");
  }
  ++lineno;
  if (trim(line) != "hour,value") fail("profile header must be exactly 'hour,value'");
  std::vector<double> out;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty()) continue;
    const std::size_t comma = s.find(',');
    if (comma == std::string::npos) fail("expected 'hour,value'");
    const std::string hs = trim(s.substr(0, comma));
    const std::string vs = trim(s.substr(comma + 1));
    int hour = -1;
    auto [p, ec] = std::from_chars(hs.data(), hs.data() + hs.size(), hour);
    if (ec != std::errc() || p != hs.data() + hs.size()) fail("hour must be an integer");
    if (hour != static_cast<int>(out.size()))
      fail("hour " + std::to_string(hour) + " out of order (expected " +
           std::to_string(out.size()) + ")");
    const char* b = vs.c_str();
    char* end = nullptr;
    const double v = std::strtod(b, &end);
    if (vs.empty() || end != b + vs.size()) fail("value must be a number, got '" + vs + "'");
    out.push_back(v);
    if (static_cast<int>(out.size()) > T)
      fail("profile has more than horizon_T = " + std::to_string(T) + " rows");
  }
  if (static_cast<int>(out.size()) != T)
    throw ScenarioError(path + ": profile has " + std::to_string(out.size()) +
                        " rows, horizon_T = " + std::to_string(T));
  return out;
}

std::string resolve(const std::string& config_path, const std::string& rel) {
  const fs::path p(rel);
  if (p.is_absolute()) return rel;
  return (fs::path(config_path).parent_path() / p).string();
}

// "8-21" / "8,9,10" / "0-5,14,20-23" -> set of hours.
std::set<int> parse_hours(const Ini& ini, const IniSection& sec, const std::string& key,
                          const std::string& text) {
  const int line = sec.keys.at(key).line;
  std::set<int> out;
  std::stringstream ss(text);
  std::string piece;
  while (std::getline(ss, piece, ',')) {
    piece = trim(piece);
    if (piece.empty()) ini.fail(line, "empty entry in '" + key + "'");
    const std::size_t dash = piece.find('-', 1);  // a leading '-' would be a sign
    int lo = 0, hi = 0;
    auto parse_int = [&](const std::string& s, int& v) {
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size())
        ini.fail(line, "'" + key + "' entry '" + piece + "' is not an hour or range");
    };
    if (dash == std::string::npos) {
      parse_int(piece, lo);
      hi = lo;
    } else {
      parse_int(trim(piece.substr(0, dash)), lo);
      parse_int(trim(piece.substr(dash + 1)), hi);
    }
    if (lo > hi) ini.fail(line, "'" + key + "' range '" + piece + "' is reversed");
    for (int h = lo; h <= hi; ++h) out.insert(h);
  }
  if (out.empty()) ini.fail(line, "'" + key + "' selects no hours");
  return out;
}

std::pair<double, double> parse_band(const Ini& ini, const IniSection& sec,
                                     const std::string& key, const std::string& text) {
  const int line = sec.keys.at(key).line;
  const std::size_t comma = text.find(',');
  if (comma == std::string::npos) ini.fail(line, "'" + key + "' must be 'low,high'");
  const std::string ls = trim(text.substr(0, comma));
  const std::string hs = trim(text.substr(comma + 1));
  char* end = nullptr;
  const double lo = std::strtod(ls.c_str(), &end);
  if (ls.empty() || end != ls.c_str() + ls.size()) ini.fail(line, "'" + key + "' low bound");
  const double hi = std::strtod(hs.c_str(), &end);
  if (hs.empty() || end != hs.c_str() + hs.size()) ini.fail(line, "'" + key + "' high bound");
  return {lo, hi};
}

thermal::BuildingZone load_zone(const Ini& ini, const IniSection& sec, thermal::ZoneKind kind) {
  thermal::BuildingZone z;
  z.zone_kind = kind;
  z.surface_area_m2 = ini.number(sec, "surface_area_m2");
  z.volume_m3 = ini.number(sec, "volume_m3");
  z.loss_coeff_W_per_m2K = ini.number(sec, "loss_coeff_W_per_m2K");
  z.air_specific_heat_J_per_kgK =
      ini.number_or(sec, "air_specific_heat_J_per_kgK", z.air_specific_heat_J_per_kgK);
  z.air_density_kg_per_m3 = ini.number_or(sec, "air_density_kg_per_m3", z.air_density_kg_per_m3);
  z.skin_temp_C = ini.number_or(sec, "skin_temp_C", z.skin_temp_C);
  z.metabolic_rate_W_per_m2 =
      ini.number_or(sec, "metabolic_rate_W_per_m2", z.metabolic_rate_W_per_m2);
  z.clothing_insulation_clo =
      ini.number_or(sec, "clothing_insulation_clo", z.clothing_insulation_clo);
  z.duty_min_temp_C = ini.number_or(sec, "duty_min_temp_C", z.duty_min_temp_C);
  // Default start: the neutral-comfort temperature of this zone.
  z.initial_temp_C = ini.number_or(sec, "initial_temp_C", thermal::temp_from_pmv(0.0, z));
  return z;
}

devices::PriceSpec load_price(const Ini& ini, const IniSection& sec) {
  devices::PriceSpec p;
  p.kappa_min = ini.number(sec, "kappa_min");
  p.kappa_max = ini.number(sec, "kappa_max");
  p.kappa_mean = ini.number(sec, "kappa_mean");
  p.tier_count = static_cast<int>(ini.integer(sec, "tiers"));
  return p;
}

// Shortest decimal string that scans back to exactly the same double.
std::string num(double v) {
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, p);
}

void write_profile(const std::string& path, const std::vector<double>& series) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ScenarioError(path + ": cannot write profile file");
  out << "hour,value\n";
  for (std::size_t t = 0; t < series.size(); ++t) out << t << ',' << num(series[t]) << '\n';
  if (!out.flush()) throw ScenarioError(path + ": write failed");
}

std::string hours_text(const std::set<int>& hours) {
  // Compress consecutive runs back into "a-b" pieces.
  std::string out;
  for (auto it = hours.begin(); it != hours.end();) {
    int lo = *it, hi = lo;
    auto run = std::next(it);
    while (run != hours.end() && *run == hi + 1) hi = *run++;
    if (!out.empty()) out += ',';
    out += std::to_string(lo);
    if (hi > lo) out += '-' + std::to_string(hi);
    it = run;
  }
  return out;
}

}  // namespace

devices::Scenario load_scenario(const std::string& path) {
  const Ini ini(path);
  devices::Scenario sc;

  const IniSection& top = ini.require("scenario");
  sc.horizon_T = static_cast<int>(ini.integer(top, "horizon_T"));
  if (sc.horizon_T < 1) ini.fail(top.line, "horizon_T must be at least 1");
  sc.dt_s = ini.number_or(top, "dt_s", 3600.0);
  sc.comfort_penalty_psi = ini.number(top, "comfort_penalty_psi");
  sc.shift_max_kW = ini.number(top, "shift_max_kW");
  sc.reserve_fraction = ini.number_or(top, "reserve_fraction", 0.05);
  sc.price_mean_tolerance = ini.number_or(top, "price_mean_tolerance", 0.0);

  const IniSection& prof = ini.require("profiles");
  sc.outdoor_temp_profile_C =
      load_profile(resolve(path, ini.require(prof, "outdoor_temp_C")), sc.horizon_T);
  sc.base_electric_load_kW =
      load_profile(resolve(path, ini.require(prof, "electric_load_kW")), sc.horizon_T);

  // Curtailment cap: a profile CSV, a constant, or a fraction of base load.
  {
    const std::string* file = ini.get(top, "cut_max_profile");
    const std::string* constant = ini.get(top, "cut_max_kW");
    const std::string* fraction = ini.get(top, "cut_max_fraction");
    const int given = (file != nullptr) + (constant != nullptr) + (fraction != nullptr);
    if (given > 1)
      ini.fail(top.line, "give at most one of cut_max_profile, cut_max_kW, cut_max_fraction");
    if (file) {
      sc.cut_max_profile_kW = load_profile(resolve(path, *file), sc.horizon_T);
    } else if (constant) {
      const double c = ini.number_or(top, "cut_max_kW", 0.0);  // re-read marks it used
      sc.cut_max_profile_kW.assign(sc.horizon_T, c);
    } else if (fraction) {
      const double f = ini.number_or(top, "cut_max_fraction", 0.0);
      sc.cut_max_profile_kW.resize(sc.horizon_T);
      for (int t = 0; t < sc.horizon_T; ++t)
        sc.cut_max_profile_kW[t] = f * sc.base_electric_load_kW[t];
    } else {
      sc.cut_max_profile_kW.assign(sc.horizon_T, 0.0);
    }
  }

  sc.residential_zone =
      load_zone(ini, ini.require("zone.residential"), thermal::ZoneKind::Residential);
  sc.public_zone = load_zone(ini, ini.require("zone.public"), thermal::ZoneKind::Public);

  if (const IniSection* sec = ini.find("comfort")) {
    if (const std::string* v = ini.get(*sec, "working_hours"))
      sc.comfort.working_hours = parse_hours(ini, *sec, "working_hours", *v);
    if (const std::string* v = ini.get(*sec, "pmv_band_working"))
      sc.comfort.pmv_band_working = parse_band(ini, *sec, "pmv_band_working", *v);
    if (const std::string* v = ini.get(*sec, "pmv_band_offhours"))
      sc.comfort.pmv_band_offhours = parse_band(ini, *sec, "pmv_band_offhours", *v);
    if (const std::string* v = ini.get(*sec, "pmv_band_public"))
      sc.comfort.pmv_band_public = parse_band(ini, *sec, "pmv_band_public", *v);
  }

  sc.electric_price = load_price(ini, ini.require("price.electric"));
  sc.heat_price = load_price(ini, ini.require("price.heat"));

  for (const IniSection& sec : ini.sections()) {
    const std::size_t dot = sec.name.find('.');
    if (dot == std::string::npos) continue;
    const std::string head = sec.name.substr(0, dot);
    const std::string name = sec.name.substr(dot + 1);
    if (head == "zone" || head == "price") continue;
    sec.used = true;
    if (name.empty()) ini.fail(sec.line, "device section needs a name after '.'");
    if (head == "chp") {
      devices::ChpUnit u;
      u.name = name;
      u.cost_a = ini.number(sec, "cost_a");
      u.cost_b = ini.number(sec, "cost_b");
      u.cost_c = ini.number(sec, "cost_c");
      u.cv_ratio = ini.number(sec, "cv_ratio");
      u.p_min_kW = ini.number(sec, "p_min_kW");
      u.p_max_kW = ini.number(sec, "p_max_kW");
      u.h_min_kW = ini.number(sec, "h_min_kW");
      u.h_max_kW = ini.number(sec, "h_max_kW");
      u.ramp_kW_per_h = ini.number(sec, "ramp_kW_per_h");
      u.reserve_cost = ini.number_or(sec, "reserve_cost", 0.0);
      sc.chp_units.push_back(std::move(u));
    } else if (head == "con") {
      devices::ConUnit u;
      u.name = name;
      u.cost_a = ini.number(sec, "cost_a");
      u.cost_b = ini.number(sec, "cost_b");
      u.cost_c = ini.number(sec, "cost_c");
      u.p_min_kW = ini.number(sec, "p_min_kW");
      u.p_max_kW = ini.number(sec, "p_max_kW");
      u.ramp_kW_per_h = ini.number(sec, "ramp_kW_per_h");
      u.reserve_cost = ini.number_or(sec, "reserve_cost", 0.0);
      sc.con_units.push_back(std::move(u));
    } else if (head == "storage") {
      devices::Storage s;
      s.name = name;
      const std::string& kind = ini.require(sec, "kind");
      if (kind == "electric")
        s.kind = devices::StorageKind::Electric;
      else if (kind == "thermal")
        s.kind = devices::StorageKind::Thermal;
      else
        ini.fail(sec.keys.at("kind").line, "storage kind must be electric or thermal");
      s.capacity_kWh = ini.number(sec, "capacity_kWh");
      s.p_charge_max_kW = ini.number(sec, "p_charge_max_kW");
      s.p_discharge_max_kW = ini.number(sec, "p_discharge_max_kW");
      s.eta_charge = ini.number(sec, "eta_charge");
      s.eta_discharge = ini.number(sec, "eta_discharge");
      s.soc_init_kWh = ini.number(sec, "soc_init_kWh");
      s.soc_min_kWh = ini.number(sec, "soc_min_kWh");
      s.soc_max_kWh = ini.number(sec, "soc_max_kWh");
      s.cycling_cost = ini.number_or(sec, "cycling_cost", 0.0);
      s.reserve_cost = ini.number_or(sec, "reserve_cost", 0.0);
      sc.storages.push_back(std::move(s));
    } else if (head == "boiler") {
      devices::ElectricBoiler b;
      b.name = name;
      b.p_max_kW = ini.number(sec, "p_max_kW");
      b.eta_eb = ini.number(sec, "eta_eb");
      sc.boilers.push_back(std::move(b));
    } else if (head == "renewable") {
      devices::Renewable r;
      r.name = name;
      const std::string& kind = ini.require(sec, "kind");
      if (kind == "wind")
        r.kind = devices::RenewKind::Wind;
      else if (kind == "pv")
        r.kind = devices::RenewKind::PV;
      else
        ini.fail(sec.keys.at("kind").line, "renewable kind must be wind or pv");
      r.availability_profile_kW =
          load_profile(resolve(path, ini.require(sec, "profile")), sc.horizon_T);
      r.curtail_penalty = ini.number_or(sec, "curtail_penalty", 0.0);
      sc.renewables.push_back(std::move(r));
    } else {
      ini.fail(sec.line, "unknown section [" + sec.name + "]");
    }
  }

  ini.reject_unused();

  sc.residential_share = reference_share(sc);

  std::vector<devices::Violation> viol = devices::validate_scenario(sc);
  if (!viol.empty()) {
    std::string msg = path + ": scenario failed validation:";
    for (const devices::Violation& v : viol) msg += "\n  " + v.field + ": " + v.message;
    throw ValidationError(msg, std::move(viol));
  }
  return sc;
}

std::string write_scenario(const std::string& dir, const devices::Scenario& sc) {
  const fs::path root(dir);
  const fs::path profdir = root / "profiles";
  std::error_code ec;
  fs::create_directories(profdir, ec);
  if (ec) throw ScenarioError(profdir.string() + ": cannot create directory");

  auto emit = [&](const std::string& base, const std::vector<double>& series) {
    const std::string rel = "profiles/" + base + ".csv";
    write_profile((root / rel).string(), series);
    return rel;
  };

  const std::string outdoor = emit("outdoor_temp_C", sc.outdoor_temp_profile_C);
  const std::string load = emit("electric_load_kW", sc.base_electric_load_kW);
  const std::string cut = emit("cut_max_kW", sc.cut_max_profile_kW);
  std::vector<std::string> renew_files;
  {
    std::set<std::string> taken;
    for (const devices::Renewable& r : sc.renewables) {
      std::string base = r.kind == devices::RenewKind::Wind ? "wind_avail_kW" : "pv_avail_kW";
      if (!taken.insert(base).second) {
        base += "_" + r.name;
        taken.insert(base);
      }
      renew_files.push_back(emit(base, r.availability_profile_kW));
    }
  }

  const fs::path ini_path = root / "scenario.ini";
  std::ofstream out(ini_path, std::ios::binary);
  if (!out) throw ScenarioError(ini_path.string() + ": cannot write scenario file");

  out << "[scenario]\n";
  out << "horizon_T = " << sc.horizon_T << '\n';
  out << "dt_s = " << num(sc.dt_s) << '\n';
  out << "comfort_penalty_psi = " << num(sc.comfort_penalty_psi) << '\n';
  out << "shift_max_kW = " << num(sc.shift_max_kW) << '\n';
  out << "reserve_fraction = " << num(sc.reserve_fraction) << '\n';
  out << "price_mean_tolerance = " << num(sc.price_mean_tolerance) << '\n';
  out << "cut_max_profile = " << cut << '\n';

  out << "\n[profiles]\n";
  out << "outdoor_temp_C = " << outdoor << '\n';
  out << "electric_load_kW = " << load << '\n';

  const thermal::BuildingZone* zones[2] = {&sc.residential_zone, &sc.public_zone};
  const char* zsec[2] = {"zone.residential", "zone.public"};
  for (int z = 0; z < 2; ++z) {
    const thermal::BuildingZone& bz = *zones[z];
    const thermal::BuildingZone defaults;
    out << "\n[" << zsec[z] << "]\n";
    out << "surface_area_m2 = " << num(bz.surface_area_m2) << '\n';
    out << "volume_m3 = " << num(bz.volume_m3) << '\n';
    out << "loss_coeff_W_per_m2K = " << num(bz.loss_coeff_W_per_m2K) << '\n';
    if (bz.air_specific_heat_J_per_kgK != defaults.air_specific_heat_J_per_kgK)
      out << "air_specific_heat_J_per_kgK = " << num(bz.air_specific_heat_J_per_kgK) << '\n';
    if (bz.air_density_kg_per_m3 != defaults.air_density_kg_per_m3)
      out << "air_density_kg_per_m3 = " << num(bz.air_density_kg_per_m3) << '\n';
    if (bz.skin_temp_C != defaults.skin_temp_C)
      out << "skin_temp_C = " << num(bz.skin_temp_C) << '\n';
    if (bz.metabolic_rate_W_per_m2 != defaults.metabolic_rate_W_per_m2)
      out << "metabolic_rate_W_per_m2 = " << num(bz.metabolic_rate_W_per_m2) << '\n';
    if (bz.clothing_insulation_clo != defaults.clothing_insulation_clo)
      out << "clothing_insulation_clo = " << num(bz.clothing_insulation_clo) << '\n';
    out << "duty_min_temp_C = " << num(bz.duty_min_temp_C) << '\n';
    out << "initial_temp_C = " << num(bz.initial_temp_C) << '\n';
  }

  out << "\n[comfort]\n";
  out << "working_hours = " << hours_text(sc.comfort.working_hours) << '\n';
  out << "pmv_band_working = " << num(sc.comfort.pmv_band_working.first) << ','
      << num(sc.comfort.pmv_band_working.second) << '\n';
  out << "pmv_band_offhours = " << num(sc.comfort.pmv_band_offhours.first) << ','
      << num(sc.comfort.pmv_band_offhours.second) << '\n';
  out << "pmv_band_public = " << num(sc.comfort.pmv_band_public.first) << ','
      << num(sc.comfort.pmv_band_public.second) << '\n';

  const devices::PriceSpec* prices[2] = {&sc.electric_price, &sc.heat_price};
  const char* psec[2] = {"price.electric", "price.heat"};
  for (int i = 0; i < 2; ++i) {
    out << "\n[" << psec[i] << "]\n";
    out << "kappa_min = " << num(prices[i]->kappa_min) << '\n';
    out << "kappa_max = " << num(prices[i]->kappa_max) << '\n';
    out << "kappa_mean = " << num(prices[i]->kappa_mean) << '\n';
    out << "tiers = " << prices[i]->tier_count << '\n';
  }

  for (const devices::ChpUnit& u : sc.chp_units) {
    out << "\n[chp." << u.name << "]\n";
    out << "cost_a = " << num(u.cost_a) << '\n';
    out << "cost_b = " << num(u.cost_b) << '\n';
    out << "cost_c = " << num(u.cost_c) << '\n';
    out << "cv_ratio = " << num(u.cv_ratio) << '\n';
    out << "p_min_kW = " << num(u.p_min_kW) << '\n';
    out << "p_max_kW = " << num(u.p_max_kW) << '\n';
    out << "h_min_kW = " << num(u.h_min_kW) << '\n';
    out << "h_max_kW = " << num(u.h_max_kW) << '\n';
    out << "ramp_kW_per_h = " << num(u.ramp_kW_per_h) << '\n';
    out << "reserve_cost = " << num(u.reserve_cost) << '\n';
  }
  for (const devices::ConUnit& u : sc.con_units) {
    out << "\n[con." << u.name << "]\n";
    out << "cost_a = " << num(u.cost_a) << '\n';
    out << "cost_b = " << num(u.cost_b) << '\n';
    out << "cost_c = " << num(u.cost_c) << '\n';
    out << "p_min_kW = " << num(u.p_min_kW) << '\n';
    out << "p_max_kW = " << num(u.p_max_kW) << '\n';
    out << "ramp_kW_per_h = " << num(u.ramp_kW_per_h) << '\n';
    out << "reserve_cost = " << num(u.reserve_cost) << '\n';
  }
  for (const devices::Storage& s : sc.storages) {
    out << "\n[storage." << s.name << "]\n";
    out << "kind = " << (s.kind == devices::StorageKind::Electric ? "electric" : "thermal")
        << '\n';
    out << "capacity_kWh = " << num(s.capacity_kWh) << '\n';
    out << "p_charge_max_kW = " << num(s.p_charge_max_kW) << '\n';
    out << "p_discharge_max_kW = " << num(s.p_discharge_max_kW) << '\n';
    out << "eta_charge = " << num(s.eta_charge) << '\n';
    out << "eta_discharge = " << num(s.eta_discharge) << '\n';
    out << "soc_init_kWh = " << num(s.soc_init_kWh) << '\n';
    out << "soc_min_kWh = " << num(s.soc_min_kWh) << '\n';
    out << "soc_max_kWh = " << num(s.soc_max_kWh) << '\n';
    out << "cycling_cost = " << num(s.cycling_cost) << '\n';
    out << "reserve_cost = " << num(s.reserve_cost) << '\n';
  }
  for (const devices::ElectricBoiler& b : sc.boilers) {
    out << "\n[boiler." << b.name << "]\n";
    out << "p_max_kW = " << num(b.p_max_kW) << '\n';
    out << "eta_eb = " << num(b.eta_eb) << '\n';
  }
  for (std::size_t i = 0; i < sc.renewables.size(); ++i) {
    const devices::Renewable& r = sc.renewables[i];
    out << "\n[renewable." << r.name << "]\n";
    out << "kind = " << (r.kind == devices::RenewKind::Wind ? "wind" : "pv") << '\n';
    out << "profile = " << renew_files[i] << '\n';
    out << "curtail_penalty = " << num(r.curtail_penalty) << '\n';
  }

  if (!out.flush()) throw ScenarioError(ini_path.string() + ": write failed");
  return ini_path.string();
}

}  // namespace stackheat::runner
