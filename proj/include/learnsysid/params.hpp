#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "learnsysid/autodiff.hpp"

namespace learnsysid {

// Named parameter matrices in fixed insertion order. The order defines the
// layout of flatten() and the on-disk format, so two sets built the same way
// serialize identically.
class ParamSet {
 public:
  void add(const std::string& name, Mat value);
  bool has(const std::string& name) const;
  Mat& at(const std::string& name);
  const Mat& at(const std::string& name) const;
  const std::vector<std::pair<std::string, Mat>>& entries() const { return entries_; }
  std::vector<std::pair<std::string, Mat>>& entries() { return entries_; }
  std::size_t size() const { return entries_.size(); }
  long total_values() const;

  std::vector<double> flatten() const;
  void unflatten(const std::vector<double>& flat);

  // Writes base + ".bin" (little-endian doubles) and base + ".json"
  // (names and shapes). load() validates both against each other.
  void save(const std::string& base) const;
  static ParamSet load(const std::string& base);

 private:
  std::vector<std::pair<std::string, Mat>> entries_;
};

// FNV-1a over entry names and raw value bytes; order-sensitive.
std::uint64_t param_hash(const ParamSet& params);

// One tape leaf per entry, keyed by name.
ad::NodeMap make_leaves(ad::Tape& tape, const ParamSet& params);

// Copies node values back into the set; every entry must be present.
void assign_from_nodes(ParamSet& params, const ad::NodeMap& nodes);

}  // namespace learnsysid
