#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "fib/tensor.hpp"

namespace fib {

struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

struct Container {
  nlohmann::json meta;
  std::vector<NamedArray> arrays;

  const NamedArray* find(const std::string& name) const;
};

// Container layout:
//   bytes 0-3   "FIBC"
//   bytes 4-7   u32 LE version (1)
//   bytes 8-15  u64 LE manifest length L
//   L bytes     JSON manifest {"meta": ..., "tensors": [{name, shape, offset}]}
//   blob        f64 LE values; offsets are byte offsets into the blob
void write_container(const std::filesystem::path& path, const Container& c);
Container read_container(const std::filesystem::path& path);

}  // namespace fib
