#include "clar/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

namespace clar {

namespace {

constexpr char kMagic[8] = {'C', 'L', 'A', 'R', 'P', 'R', 'M', '1'};

// This codebase targets little-endian hosts; the writers below memcpy native
// representations directly.
static_assert(sizeof(double) == 8);

template <typename T>
void write_raw(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& is, const std::string& what) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated file while reading " + what);
  return v;
}

}  // namespace

void save_parameters(const std::string& path, const std::vector<const Parameter*>& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  os.write(kMagic, sizeof(kMagic));
  for (const Parameter* p : params) {
    write_raw(os, static_cast<std::uint32_t>(p->name.size()));
    os.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    write_raw(os, static_cast<std::uint32_t>(p->value.rank()));
    for (std::size_t d : p->value.shape()) write_raw(os, static_cast<std::uint64_t>(d));
    os.write(reinterpret_cast<const char*>(p->value.data()),
             static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

std::vector<std::pair<std::string, Tensor>> read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);

  std::vector<std::pair<std::string, Tensor>> out;
  while (true) {
    std::uint32_t name_len;
    is.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
    if (is.eof()) break;
    if (!is) throw std::runtime_error("checkpoint: truncated record header in " + path);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw std::runtime_error("checkpoint: truncated name in " + path);
    const auto rank = read_raw<std::uint32_t>(is, "rank");
    std::vector<std::size_t> shape(rank);
    std::size_t count = 1;
    for (auto& d : shape) {
      d = static_cast<std::size_t>(read_raw<std::uint64_t>(is, "shape"));
      count *= d;
    }
    Tensor t(shape);
    is.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(count * sizeof(double)));
    if (!is) throw std::runtime_error("checkpoint: truncated data for '" + name + "' in " + path);
    out.emplace_back(std::move(name), std::move(t));
  }
  return out;
}

void load_parameters(const std::string& path, const std::vector<Parameter*>& params) {
  auto records = read_checkpoint(path);
  std::unordered_map<std::string, Tensor*> by_name;
  for (auto& [name, tensor] : records) by_name[name] = &tensor;

  for (Parameter* p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end())
      throw std::runtime_error("checkpoint: parameter '" + p->name + "' missing from " + path);
    if (it->second->shape() != p->value.shape())
      throw std::runtime_error("checkpoint: shape mismatch for '" + p->name + "': file has " +
                               Tensor::shape_string(it->second->shape()) + ", expected " +
                               Tensor::shape_string(p->value.shape()));
    p->value = std::move(*it->second);
    p->zero_grad();
  }
}

}  // namespace clar
