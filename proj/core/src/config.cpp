#include "adhesion/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "adhesion/coupling.hpp"

namespace adhesion {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(trim(cur));
  return out;
}

}  // namespace

RawConfig RawConfig::parse(std::istream& in) {
  RawConfig cfg;
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      cfg.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    cfg.sections_[section].emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

RawConfig RawConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse(in);
}

RawConfig RawConfig::parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

bool RawConfig::has(const std::string& section, const std::string& key) const {
  const auto it = sections_.find(section);
  if (it == sections_.end()) return false;
  for (const auto& [k, v] : it->second)
    if (k == key) return true;
  return false;
}

std::string RawConfig::get(const std::string& section, const std::string& key) const {
  const auto it = sections_.find(section);
  if (it != sections_.end())
    for (const auto& [k, v] : it->second)
      if (k == key) return v;
  throw ConfigError("missing key [" + section + "] " + key);
}

std::string RawConfig::get_or(const std::string& section, const std::string& key,
                              const std::string& fallback) const {
  return has(section, key) ? get(section, key) : fallback;
}

std::vector<std::string> RawConfig::get_all(const std::string& section,
                                            const std::string& key) const {
  std::vector<std::string> out;
  const auto it = sections_.find(section);
  if (it != sections_.end())
    for (const auto& [k, v] : it->second)
      if (k == key) out.push_back(v);
  return out;
}

double RawConfig::get_double(const std::string& section, const std::string& key) const {
  const std::string v = get(section, key);
  try {
    return std::stod(v);
  } catch (...) {
    throw ConfigError("key [" + section + "] " + key + ": not a number: " + v);
  }
}

double RawConfig::get_double_or(const std::string& section, const std::string& key,
                                double fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get(section, key);
  if (v == "auto") return fallback;
  return get_double(section, key);
}

long long RawConfig::get_int(const std::string& section, const std::string& key) const {
  const std::string v = get(section, key);
  try {
    return std::stoll(v);
  } catch (...) {
    throw ConfigError("key [" + section + "] " + key + ": not an integer: " + v);
  }
}

long long RawConfig::get_int_or(const std::string& section, const std::string& key,
                                long long fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get(section, key);
  if (v == "auto") return fallback;
  return get_int(section, key);
}

bool RawConfig::get_bool_or(const std::string& section, const std::string& key,
                            bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get(section, key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("key [" + section + "] " + key + ": not a boolean: " + v);
}

std::vector<double> RawConfig::get_list_or(const std::string& section, const std::string& key,
                                           const std::vector<double>& fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get(section, key);
  if (v == "auto") return fallback;
  std::vector<double> out;
  for (const std::string& tok : split(v, ','))
    if (!tok.empty()) out.push_back(std::stod(tok));
  return out;
}

double ExperimentConfig::resolved_dt() const {
  if (dt > 0.0) return dt;
  const LipschitzEstimate est = potential.modes.empty()
                                    ? LipschitzEstimate{}
                                    : estimate_eta(potential, 16);
  return default_dt_max(est.eta(), rates);
}

int ExperimentConfig::resolved_workers() const {
  if (const char* env = std::getenv("ADHESION_WORKERS")) {
    const int w = std::atoi(env);
    if (w >= 1) return w;
  }
  if (workers >= 1) return workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::min(16u, std::max(1u, hw)));
}

void ExperimentConfig::validate() const {
  if (d != 1 && d != 2) throw ConfigError("model.d must be 1 or 2");
  diff.validate();
  rates.validate();
  potential.validate();
  if (potential.d != d) throw ConfigError("potential dimension mismatch");
  if (n_particles < 1) throw ConfigError("numerics.N must be >= 1");
  if (horizon < 0.0) throw ConfigError("numerics.horizon must be >= 0");
  if (spectral_K < 1) throw ConfigError("numerics.K must be >= 1");
  spin_law0.validate();
  spin_law0_bar.validate();
}

ExperimentConfig ExperimentConfig::from_raw(const RawConfig& raw) {
  ExperimentConfig cfg;
  cfg.d = static_cast<int>(raw.get_int_or("model", "d", 1));
  cfg.diff.sigma_plus = raw.get_double_or("model", "sigma_plus", 1.0);
  cfg.diff.sigma_minus = raw.get_double_or("model", "sigma_minus", 1.0);
  cfg.rates.alpha_plus = raw.get_double_or("model", "alpha_plus", 1.0);
  cfg.rates.alpha_minus = raw.get_double_or("model", "alpha_minus", 1.0);

  cfg.potential.d = cfg.d;
  cfg.potential.eta_scale = raw.get_double_or("potential", "eta_scale", 1.0);
  for (const std::string& entry : raw.get_all("potential", "mode")) {
    // k[,k2] : u_coeff : v_coeff
    const auto parts = split(entry, ':');
    if (parts.size() != 3) throw ConfigError("potential.mode: expected k : U : V");
    PotentialMode mode;
    const auto ks = split(parts[0], ',');
    if (static_cast<int>(ks.size()) != cfg.d)
      throw ConfigError("potential.mode: k-tuple arity != d");
    mode.k.d = cfg.d;
    for (int i = 0; i < cfg.d; ++i) mode.k[i] = std::stoi(ks[static_cast<std::size_t>(i)]);
    mode.u_coeff = std::stod(parts[1]);
    mode.v_coeff = std::stod(parts[2]);
    cfg.potential.modes.push_back(mode);
  }

  cfg.n_particles = static_cast<int>(raw.get_int_or("numerics", "N", 256));
  cfg.dt = raw.get_double_or("numerics", "dt", 0.0);
  cfg.spectral_K = static_cast<int>(raw.get_int_or("numerics", "K", 32));
  cfg.grid_n = static_cast<int>(raw.get_int_or("numerics", "grid_n", 0));
  cfg.horizon = raw.get_double_or("numerics", "horizon", 1.0);
  cfg.snapshots = raw.get_list_or("numerics", "snapshots", {});
  cfg.coupling_delta = raw.get_double_or("numerics", "delta", 0.0);
  cfg.coupling_a = raw.get_double_or("numerics", "a", 0.0);

  const std::string init = raw.get_or("numerics", "init", "uniform");
  if (init == "uniform") cfg.init = InitKind::kUniform;
  else if (init == "lattice") cfg.init = InitKind::kLattice;
  else if (init == "file") cfg.init = InitKind::kFile;
  else throw ConfigError("numerics.init: unknown kind " + init);
  cfg.init_file = raw.get_or("numerics", "init_file", "");

  cfg.spin_law0 = SpinLaw::from_p_plus(raw.get_double_or("numerics", "p_plus0", 1.0));
  if (raw.has("numerics", "p_plus0_bar")) {
    cfg.spin_law0_bar = SpinLaw::from_p_plus(raw.get_double("numerics", "p_plus0_bar"));
    cfg.matched_laws = false;
  } else {
    cfg.spin_law0_bar = cfg.spin_law0;
    cfg.matched_laws = true;
  }

  cfg.seed = static_cast<std::uint64_t>(raw.get_int_or("run", "seed", 1));
  cfg.repeats = static_cast<int>(raw.get_int_or("run", "repeats", 8));
  cfg.workers = static_cast<int>(raw.get_int_or("run", "workers", 0));
  cfg.allow_exploratory = raw.get_bool_or("run", "allow_exploratory", false);

  cfg.experiment = raw.get_or("experiment", "name", "");
  cfg.n_ladder = raw.get_list_or("experiment", "N_ladder", cfg.n_ladder);
  cfg.plateau_times = raw.get_list_or("experiment", "plateau_times", cfg.plateau_times);
  cfg.plateau_n = static_cast<int>(raw.get_int_or("experiment", "plateau_N", 512));
  cfg.sweep_lo = raw.get_double_or("experiment", "sweep_lo", 0.5);
  cfg.sweep_hi = raw.get_double_or("experiment", "sweep_hi", 1.5);
  cfg.sweep_steps = static_cast<int>(raw.get_int_or("experiment", "sweep_steps", 21));
  cfg.branch_seed_eps = raw.get_double_or("experiment", "branch_seed_eps", 1e-2);
  cfg.pde_onset_horizon = raw.get_double_or("experiment", "pde_onset_horizon", 40.0);
  cfg.crossval_horizon = raw.get_double_or("experiment", "crossval_horizon", 80.0);

  cfg.contract_p_plus_a = raw.get_double_or("experiment", "contract_p_plus_a", 0.7);
  cfg.contract_p_plus_b = raw.get_double_or("experiment", "contract_p_plus_b", -1.0);
  cfg.contract_perturb_a =
      raw.get_list_or("experiment", "contract_perturb_a", cfg.contract_perturb_a);
  cfg.contract_perturb_b =
      raw.get_list_or("experiment", "contract_perturb_b", cfg.contract_perturb_b);

  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  return from_raw(RawConfig::parse_file(path));
}

}  // namespace adhesion
