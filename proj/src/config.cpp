#include "learnsysid/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace learnsysid {
namespace eval {

namespace {

using SectionMap = std::map<std::string, std::map<std::string, std::string>>;

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// key = value lines under [section] headers; values are numbers, booleans,
// or double-quoted strings. Comments start with #.
SectionMap parse_toml_subset(std::istream& in, const std::string& path) {
  SectionMap out;
  std::string section, line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": empty section name");
      out[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": empty key or value");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    out[section][key] = value;
  }
  return out;
}

SectionMap parse_json_config(std::istream& in, const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  SectionMap out;
  for (const auto& [section, body] : j.items()) {
    if (!body.is_object())
      throw std::runtime_error(path + ": section '" + section + "' must be an object");
    for (const auto& [key, value] : body.items()) {
      if (value.is_string())
        out[section][key] = value.get<std::string>();
      else if (value.is_boolean())
        out[section][key] = value.get<bool>() ? "true" : "false";
      else if (value.is_number())
        out[section][key] = value.dump();
      else
        throw std::runtime_error(path + ": unsupported value type at " + section + "." + key);
    }
  }
  return out;
}

double to_double(const std::string& where, const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(where + ": expected a number, got '" + s + "'");
  }
}

long to_long(const std::string& where, const std::string& s) {
  const double v = to_double(where, s);
  const long l = static_cast<long>(v);
  if (static_cast<double>(l) != v) throw std::runtime_error(where + ": expected an integer, got '" + s + "'");
  return l;
}

bool to_bool(const std::string& where, const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw std::runtime_error(where + ": expected true or false, got '" + s + "'");
}

void apply_sections(Config& cfg, const SectionMap& sections, const std::string& path) {
  for (const auto& [section, kv] : sections) {
    for (const auto& [key, value] : kv) {
      const std::string where = path + ": " + section + "." + key;
      bool known = true;
      if (section == "simulator") {
        if (key == "duration") cfg.sim.duration = to_double(where, value);
        else if (key == "dt") cfg.sim.dt = to_double(where, value);
        else if (key == "noise_std_v") cfg.sim.noise_std_v = to_double(where, value);
        else if (key == "noise_std_omega") cfg.sim.noise_std_omega = to_double(where, value);
        else if (key == "fe_period") cfg.sim.fe_period = to_double(where, value);
        else if (key == "fe_radius") cfg.sim.fe_radius = to_double(where, value);
        else if (key == "fe_altitude") cfg.sim.fe_altitude = to_double(where, value);
        else if (key == "kp") cfg.sim.gains.kp = to_double(where, value);
        else if (key == "kv") cfg.sim.gains.kv = to_double(where, value);
        else if (key == "kR") cfg.sim.gains.kR = to_double(where, value);
        else if (key == "komega") cfg.sim.gains.komega = to_double(where, value);
        else if (key == "mass") cfg.quad.m = to_double(where, value);
        else if (key == "c_d") cfg.quad.c_d = to_double(where, value);
        else known = false;
      } else if (section == "sindy") {
        if (key == "threshold") cfg.sindy_threshold = to_double(where, value);
        else if (key == "ridge") cfg.sindy_ridge = to_double(where, value);
        else if (key == "max_iters") cfg.sindy_max_iters = static_cast<int>(to_long(where, value));
        else known = false;
      } else if (section == "learn") {
        if (key == "mode") cfg.learn_mode = value;
        else if (key == "basis_functions") cfg.P = to_long(where, value);
        else if (key == "lambda") cfg.lambda = to_double(where, value);
        else if (key == "lipschitz") cfg.lipschitz = to_double(where, value);
        else known = false;
      } else if (section == "meta") {
        if (key == "alpha") cfg.meta.alpha = to_double(where, value);
        else if (key == "beta") cfg.meta.beta = to_double(where, value);
        else if (key == "inner_rounds") cfg.meta.n = static_cast<int>(to_long(where, value));
        else if (key == "inner_batch") cfg.meta.inner_batch = to_long(where, value);
        else if (key == "meta_batch") cfg.meta.meta_batch = to_long(where, value);
        else if (key == "outer_iters") cfg.meta.outer_iters = to_long(where, value);
        else if (key == "second_order") cfg.meta.second_order = to_bool(where, value);
        else if (key == "mu_meta") cfg.meta.mu_meta = to_double(where, value);
        else if (key == "checkpoint_every") cfg.meta.checkpoint_every = to_long(where, value);
        else known = false;
      } else if (section == "adapt") {
        if (key == "rate") cfg.adapt_rate = to_double(where, value);
        else if (key == "steps") cfg.adapt_steps = static_cast<int>(to_long(where, value));
        else known = false;
      } else if (section == "eval") {
        if (key == "adapt_fraction") cfg.adapt_fraction = to_double(where, value);
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_long(where, value));
        else if (key == "raw_units") cfg.raw_units = to_bool(where, value);
        else if (key == "plot_normalized") cfg.plot_normalized = to_bool(where, value);
        else if (key == "formulations") cfg.formulations = value;
        else if (key == "smooth_window") cfg.smooth_window = static_cast<int>(to_long(where, value));
        else known = false;
      } else {
        throw std::runtime_error(path + ": unknown section [" + section + "]");
      }
      if (!known) throw std::runtime_error(where + ": unknown key");
    }
  }
  if (cfg.learn_mode != "elementwise" && cfg.learn_mode != "vector")
    throw std::runtime_error(path + ": learn.mode must be 'elementwise' or 'vector'");
}

}  // namespace

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_config: cannot open " + path);
  SectionMap sections;
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json")
    sections = parse_json_config(in, path);
  else
    sections = parse_toml_subset(in, path);
  Config cfg;
  apply_sections(cfg, sections, path);
  cfg.meta.seed = cfg.seed;
  return cfg;
}

std::string config_canonical(const Config& cfg) {
  std::ostringstream os;
  char buf[64];
  auto num = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%s=%.17g\n", key, v);
    os << buf;
  };
  num("simulator.duration", cfg.sim.duration);
  num("simulator.dt", cfg.sim.dt);
  num("simulator.noise_std_v", cfg.sim.noise_std_v);
  num("simulator.noise_std_omega", cfg.sim.noise_std_omega);
  num("simulator.fe_period", cfg.sim.fe_period);
  num("simulator.fe_radius", cfg.sim.fe_radius);
  num("simulator.fe_altitude", cfg.sim.fe_altitude);
  num("simulator.kp", cfg.sim.gains.kp);
  num("simulator.kv", cfg.sim.gains.kv);
  num("simulator.kR", cfg.sim.gains.kR);
  num("simulator.komega", cfg.sim.gains.komega);
  num("simulator.mass", cfg.quad.m);
  num("simulator.c_d", cfg.quad.c_d);
  num("sindy.threshold", cfg.sindy_threshold);
  num("sindy.ridge", cfg.sindy_ridge);
  num("sindy.max_iters", cfg.sindy_max_iters);
  os << "learn.mode=" << cfg.learn_mode << "\n";
  num("learn.basis_functions", static_cast<double>(cfg.P));
  num("learn.lambda", cfg.lambda);
  num("learn.lipschitz", cfg.lipschitz);
  num("meta.alpha", cfg.meta.alpha);
  num("meta.beta", cfg.meta.beta);
  num("meta.inner_rounds", cfg.meta.n);
  num("meta.inner_batch", static_cast<double>(cfg.meta.inner_batch));
  num("meta.meta_batch", static_cast<double>(cfg.meta.meta_batch));
  num("meta.outer_iters", static_cast<double>(cfg.meta.outer_iters));
  os << "meta.second_order=" << (cfg.meta.second_order ? "true" : "false") << "\n";
  num("meta.mu_meta", cfg.meta.mu_meta);
  num("meta.checkpoint_every", static_cast<double>(cfg.meta.checkpoint_every));
  num("adapt.rate", cfg.adapt_rate);
  num("adapt.steps", cfg.adapt_steps);
  num("eval.adapt_fraction", cfg.adapt_fraction);
  num("eval.seed", static_cast<double>(cfg.seed));
  os << "eval.raw_units=" << (cfg.raw_units ? "true" : "false") << "\n";
  os << "eval.plot_normalized=" << (cfg.plot_normalized ? "true" : "false") << "\n";
  os << "eval.formulations=" << cfg.formulations << "\n";
  num("eval.smooth_window", cfg.smooth_window);
  return os.str();
}

std::uint64_t config_hash(const Config& cfg) {
  const std::string s = config_canonical(cfg);
  std::uint64_t h = 14695981039346656037ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

meta::AdaptHyper adapt_hyper_from(const Config& cfg) {
  meta::AdaptHyper h;
  h.rate = cfg.adapt_rate;
  h.steps = cfg.adapt_steps;
  h.lambda = cfg.lambda;
  h.lipschitz = cfg.lipschitz;
  h.seed = cfg.seed;
  return h;
}

}  // namespace eval
}  // namespace learnsysid
