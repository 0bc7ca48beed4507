#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "learnsysid/autodiff.hpp"
#include "learnsysid/params.hpp"

namespace learnsysid {

struct MlpSpec {
  std::vector<long> dims;  // widths including input and output
  ad::UnaryFn hidden = ad::UnaryFn::Gelu;
  bool linear_output = true;
};

// Layer l stores weight "<prefix>.w<l>" of shape dims[l] x dims[l+1] and bias
// "<prefix>.b<l>" of shape 1 x dims[l+1]. Weights are Glorot-uniform drawn
// straight from mt19937_64 bits so the init is identical across platforms;
// biases start at zero.
ParamSet mlp_init(const MlpSpec& spec, const std::string& prefix, std::uint64_t seed);

// Appends an mlp_init to an existing set (shared tape episode with other nets).
void mlp_init_into(ParamSet& out, const MlpSpec& spec, const std::string& prefix,
                   std::uint64_t seed);

ad::Node* mlp_forward(ad::Tape& tape, const ad::NodeMap& params, const std::string& prefix,
                      ad::Node* x, const MlpSpec& spec);

// Uniform double in [0, 1) from the top 53 bits of one engine draw.
double uniform01(std::uint64_t raw);

}  // namespace learnsysid
