#include "fib/checkpoint.hpp"

#include <fstream>
#include <iterator>
#include <stdexcept>

#include "fib/binio.hpp"

namespace fib {

namespace {
constexpr char kMagic[4] = {'F', 'I', 'B', 'C'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

const NamedArray* Container::find(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return &a;
  return nullptr;
}

void write_container(const std::filesystem::path& path, const Container& c) {
  nlohmann::json manifest;
  manifest["meta"] = c.meta;
  manifest["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& a : c.arrays) {
    if (shape_numel(a.shape) != a.values.size())
      throw ShapeError("checkpoint array '" + a.name + "' has " + std::to_string(a.values.size()) +
                       " values for shape " + shape_str(a.shape));
    manifest["tensors"].push_back({{"name", a.name}, {"shape", a.shape}, {"offset", offset}});
    offset += a.values.size() * 8;
  }
  const std::string text = manifest.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
  os.write(kMagic, 4);
  binio::put_le<std::uint32_t>(os, kVersion);
  binio::put_le<std::uint64_t>(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& a : c.arrays)
    for (double v : a.values) binio::put_f64(os, v);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

Container read_container(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                         std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || !std::equal(kMagic, kMagic + 4, bytes.begin()))
    throw std::runtime_error("not a checkpoint (bad magic): " + path.string());
  const auto version = binio::get_le<std::uint32_t>(bytes.data() + 4);
  if (version != kVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  const auto mlen = binio::get_le<std::uint64_t>(bytes.data() + 8);
  if (16 + mlen > bytes.size()) throw std::runtime_error("truncated checkpoint manifest");
  const auto manifest = nlohmann::json::parse(bytes.begin() + 16,
                                              bytes.begin() + 16 + static_cast<std::ptrdiff_t>(mlen));
  const std::size_t blob = 16 + mlen;

  Container c;
  c.meta = manifest.value("meta", nlohmann::json::object());
  for (const auto& t : manifest.at("tensors")) {
    NamedArray a;
    a.name = t.at("name").get<std::string>();
    a.shape = t.at("shape").get<Shape>();
    const auto off = t.at("offset").get<std::uint64_t>();
    const std::size_t n = shape_numel(a.shape);
    if (blob + off + n * 8 > bytes.size())
      throw std::runtime_error("checkpoint array '" + a.name + "' extends past end of file");
    a.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) a.values[i] = binio::get_f64(bytes.data() + blob + off + i * 8);
    c.arrays.push_back(std::move(a));
  }
  return c;
}

}  // namespace fib
