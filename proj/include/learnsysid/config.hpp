#pragma once

#include <cstdint>
#include <string>

#include "learnsysid/meta.hpp"
#include "learnsysid/quadsim.hpp"

namespace learnsysid {
namespace eval {

// Full experiment configuration. Field defaults are the shipped defaults;
// configs/default.toml spells out every one of them.
struct Config {
  sim::SimOptions sim;
  sim::QuadParams quad;

  double sindy_threshold = 0.2;
  double sindy_ridge = 1e-6;
  int sindy_max_iters = 20;

  std::string learn_mode = "elementwise";
  long P = 2;
  double lambda = 0.1;
  double lipschitz = 1.0;

  meta::MetaHyper meta;
  double adapt_rate = 0.005;
  int adapt_steps = 1;

  double adapt_fraction = 0.5;
  std::uint64_t seed = 0;
  bool raw_units = false;
  bool plot_normalized = false;
  std::string formulations = "translational,attitude,full";
  int smooth_window = 0;
};

// Dispatches on extension: .toml (the key = value subset used by
// default.toml) or .json. Unknown sections or keys are errors.
Config load_config(const std::string& path);

// Canonical text form; hashing it gives the config hash stamped into reports.
std::string config_canonical(const Config& cfg);
std::uint64_t config_hash(const Config& cfg);

meta::AdaptHyper adapt_hyper_from(const Config& cfg);

}  // namespace eval
}  // namespace learnsysid
