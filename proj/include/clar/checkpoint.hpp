#pragma once

#include <string>
#include <vector>

#include "clar/autodiff.hpp"

namespace clar {

// Flat binary parameter checkpoint.
//
// Layout: 8-byte magic "CLARPRM1", then one record per parameter:
//   u32 name length, UTF-8 name bytes, u32 rank, u64 per dimension,
//   f64 per element (row-major). All integers and floats little-endian.
void save_parameters(const std::string& path, const std::vector<const Parameter*>& params);

// Loads records in file order into the given parameters, matching by name.
// Throws on bad magic, truncation, missing names, or shape mismatch.
void load_parameters(const std::string& path, const std::vector<Parameter*>& params);

// Raw read, for inspection and format tests.
std::vector<std::pair<std::string, Tensor>> read_checkpoint(const std::string& path);

}  // namespace clar
