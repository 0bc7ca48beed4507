#include "learnsysid/mlp.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace learnsysid {

double uniform01(std::uint64_t raw) { return static_cast<double>(raw >> 11) * 0x1.0p-53; }

void mlp_init_into(ParamSet& out, const MlpSpec& spec, const std::string& prefix,
                   std::uint64_t seed) {
  if (spec.dims.size() < 2) throw std::invalid_argument("mlp_init: need at least two layer dims");
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < spec.dims.size(); ++l) {
    const long fan_in = spec.dims[l], fan_out = spec.dims[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Mat w(fan_in, fan_out);
    for (long i = 0; i < w.size(); ++i) w.data()[i] = bound * (2.0 * uniform01(rng()) - 1.0);
    out.add(prefix + ".w" + std::to_string(l), std::move(w));
    out.add(prefix + ".b" + std::to_string(l), Mat::Zero(1, fan_out));
  }
}

ParamSet mlp_init(const MlpSpec& spec, const std::string& prefix, std::uint64_t seed) {
  ParamSet out;
  mlp_init_into(out, spec, prefix, seed);
  return out;
}

ad::Node* mlp_forward(ad::Tape& tape, const ad::NodeMap& params, const std::string& prefix,
                      ad::Node* x, const MlpSpec& spec) {
  ad::Node* h = x;
  for (std::size_t l = 0; l + 1 < spec.dims.size(); ++l) {
    const auto wk = prefix + ".w" + std::to_string(l);
    const auto bk = prefix + ".b" + std::to_string(l);
    auto wi = params.find(wk);
    auto bi = params.find(bk);
    if (wi == params.end() || bi == params.end())
      throw std::invalid_argument("mlp_forward: parameter '" + wk + "' or '" + bk + "' missing");
    h = ad::add_rowvec(tape, ad::matmul(tape, h, wi->second), bi->second);
    const bool last = l + 2 == spec.dims.size();
    if (!last || !spec.linear_output) h = ad::unary(tape, h, spec.hidden);
  }
  return h;
}

}  // namespace learnsysid
