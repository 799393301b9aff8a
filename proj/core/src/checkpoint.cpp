#include <cstdint>
#include <fstream>
#include <sstream>

#include "coord/diffcore.hpp"
#include "coord/errors.hpp"

// ParameterSet persistence: "<stem>.manifest" is a line-oriented text file
// (format tag, seed, scheme, step count, one "tensor <name> <ndim> <dims...>"
// line per parameter in insertion order); "<stem>.bin" holds the values as
// raw little-endian doubles concatenated in manifest order.

namespace coord::diff {

namespace {
constexpr const char* kFormatTag = "chaincoord-params v1";

void write_doubles(std::ofstream& out, const std::vector<double>& v) {
  // assumes a little-endian host, checked below at load/save
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

bool host_is_little_endian() {
  const uint16_t probe = 1;
  return *reinterpret_cast<const uint8_t*>(&probe) == 1;
}
}  // namespace

void ParameterSet::save(const std::string& path_stem) const {
  if (!host_is_little_endian())
    throw UnsupportedCapability("checkpoint format requires a little-endian host");
  std::ofstream manifest(path_stem + ".manifest");
  if (!manifest) throw std::runtime_error("cannot write " + path_stem + ".manifest");
  manifest << kFormatTag << "\n";
  manifest << "seed " << init_seed << "\n";
  manifest << "scheme " << init_scheme << "\n";
  manifest << "steps " << step_count << "\n";
  for (const auto& name : order_) {
    const Tensor& t = params_.at(name);
    manifest << "tensor " << name << " " << t.shape().size();
    for (int d : t.shape()) manifest << " " << d;
    manifest << "\n";
  }
  std::ofstream bin(path_stem + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("cannot write " + path_stem + ".bin");
  for (const auto& name : order_) write_doubles(bin, params_.at(name).values());
}

ParameterSet ParameterSet::load(const std::string& path_stem) {
  if (!host_is_little_endian())
    throw UnsupportedCapability("checkpoint format requires a little-endian host");
  const std::string manifest_path = path_stem + ".manifest";
  std::ifstream manifest(manifest_path);
  if (!manifest) throw std::runtime_error("cannot read " + manifest_path);

  ParameterSet ps;
  std::string line;
  int lineno = 0;
  if (!std::getline(manifest, line) || line != kFormatTag)
    throw ParseError(manifest_path, 1, "unrecognized checkpoint format");
  lineno = 1;

  struct Entry {
    std::string name;
    std::vector<int> shape;
  };
  std::vector<Entry> entries;
  while (std::getline(manifest, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string kind;
    ss >> kind;
    if (kind == "seed") {
      ss >> ps.init_seed;
    } else if (kind == "scheme") {
      ss >> ps.init_scheme;
    } else if (kind == "steps") {
      ss >> ps.step_count;
    } else if (kind == "tensor") {
      Entry e;
      size_t ndim = 0;
      ss >> e.name >> ndim;
      for (size_t i = 0; i < ndim; ++i) {
        int d = -1;
        ss >> d;
        e.shape.push_back(d);
      }
      if (!ss || e.name.empty())
        throw ParseError(manifest_path, lineno, "malformed tensor line");
      entries.push_back(std::move(e));
    } else {
      throw ParseError(manifest_path, lineno, "unknown manifest entry: " + kind);
    }
  }

  const std::string bin_path = path_stem + ".bin";
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw std::runtime_error("cannot read " + bin_path);
  for (const auto& e : entries) {
    size_t n = 1;
    for (int d : e.shape) n *= static_cast<size_t>(d);
    std::vector<double> v(n);
    bin.read(reinterpret_cast<char*>(v.data()),
             static_cast<std::streamsize>(n * sizeof(double)));
    if (static_cast<size_t>(bin.gcount()) != n * sizeof(double))
      throw ParseError(bin_path, 0, "checkpoint data truncated at tensor " + e.name);
    ps.params_.emplace(e.name, Tensor::from_values(e.shape, std::move(v), true));
    ps.order_.push_back(e.name);
  }
  return ps;
}

}  // namespace coord::diff
