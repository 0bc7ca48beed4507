#include "learnsysid/params.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace learnsysid {

namespace {

constexpr const char* kFormat = "learnsysid-params-v1";

double to_little_endian(double v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  bits = __builtin_bswap64(bits);
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

}  // namespace

void ParamSet::add(const std::string& name, Mat value) {
  if (has(name)) throw std::invalid_argument("ParamSet: duplicate name '" + name + "'");
  entries_.emplace_back(name, std::move(value));
}

bool ParamSet::has(const std::string& name) const {
  for (const auto& [n, v] : entries_)
    if (n == name) return true;
  return false;
}

Mat& ParamSet::at(const std::string& name) {
  for (auto& [n, v] : entries_)
    if (n == name) return v;
  throw std::out_of_range("ParamSet: no entry '" + name + "'");
}

const Mat& ParamSet::at(const std::string& name) const {
  for (const auto& [n, v] : entries_)
    if (n == name) return v;
  throw std::out_of_range("ParamSet: no entry '" + name + "'");
}

long ParamSet::total_values() const {
  long total = 0;
  for (const auto& [n, v] : entries_) total += v.size();
  return total;
}

std::vector<double> ParamSet::flatten() const {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(total_values()));
  for (const auto& [n, v] : entries_) flat.insert(flat.end(), v.data(), v.data() + v.size());
  return flat;
}

void ParamSet::unflatten(const std::vector<double>& flat) {
  if (static_cast<long>(flat.size()) != total_values())
    throw std::invalid_argument("ParamSet: unflatten size " + std::to_string(flat.size()) +
                                " does not match " + std::to_string(total_values()));
  const double* src = flat.data();
  for (auto& [n, v] : entries_) {
    std::memcpy(v.data(), src, static_cast<std::size_t>(v.size()) * sizeof(double));
    src += v.size();
  }
}

void ParamSet::save(const std::string& base) const {
  nlohmann::json meta;
  meta["format"] = kFormat;
  meta["entries"] = nlohmann::json::array();
  for (const auto& [n, v] : entries_)
    meta["entries"].push_back({{"name", n}, {"rows", v.rows()}, {"cols", v.cols()}});

  std::ofstream js(base + ".json");
  if (!js) throw std::runtime_error("ParamSet: cannot write " + base + ".json");
  js << meta.dump(2) << "\n";

  std::ofstream bin(base + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("ParamSet: cannot write " + base + ".bin");
  for (const auto& [n, v] : entries_)
    for (long i = 0; i < v.size(); ++i) {
      const double le = to_little_endian(v.data()[i]);
      bin.write(reinterpret_cast<const char*>(&le), sizeof(le));
    }
}

ParamSet ParamSet::load(const std::string& base) {
  std::ifstream js(base + ".json");
  if (!js) throw std::runtime_error("ParamSet: cannot read " + base + ".json");
  nlohmann::json meta = nlohmann::json::parse(js);
  if (meta.value("format", "") != kFormat)
    throw std::runtime_error("ParamSet: " + base + ".json has unknown format '" +
                             meta.value("format", "") + "'");

  std::ifstream bin(base + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("ParamSet: cannot read " + base + ".bin");

  ParamSet out;
  for (const auto& e : meta.at("entries")) {
    const auto name = e.at("name").get<std::string>();
    const long rows = e.at("rows").get<long>();
    const long cols = e.at("cols").get<long>();
    Mat v(rows, cols);
    for (long i = 0; i < v.size(); ++i) {
      double le;
      if (!bin.read(reinterpret_cast<char*>(&le), sizeof(le)))
        throw std::runtime_error("ParamSet: " + base + ".bin truncated in entry '" + name + "'");
      v.data()[i] = to_little_endian(le);
    }
    out.add(name, std::move(v));
  }
  char extra;
  if (bin.read(&extra, 1))
    throw std::runtime_error("ParamSet: " + base + ".bin has trailing bytes");
  return out;
}

std::uint64_t param_hash(const ParamSet& params) {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](const char* data, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) {
      h ^= static_cast<unsigned char>(data[i]);
      h *= 1099511628211ull;
    }
  };
  for (const auto& [n, v] : params.entries()) {
    mix(n.data(), n.size());
    mix(reinterpret_cast<const char*>(v.data()), static_cast<std::size_t>(v.size()) * sizeof(double));
  }
  return h;
}

ad::NodeMap make_leaves(ad::Tape& tape, const ParamSet& params) {
  ad::NodeMap leaves;
  for (const auto& [name, value] : params.entries()) leaves[name] = ad::leaf(tape, value, name);
  return leaves;
}

void assign_from_nodes(ParamSet& params, const ad::NodeMap& nodes) {
  for (auto& [name, value] : params.entries()) {
    auto it = nodes.find(name);
    if (it == nodes.end()) throw std::invalid_argument("assign_from_nodes: missing '" + name + "'");
    if (it->second->rows() != value.rows() || it->second->cols() != value.cols())
      throw std::invalid_argument("assign_from_nodes: shape mismatch for '" + name + "'");
    value = it->second->value;
  }
}

}  // namespace learnsysid
