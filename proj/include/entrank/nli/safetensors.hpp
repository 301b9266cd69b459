#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace entrank::nli {

// Dense row-major float tensor.
struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<float> data;

  std::int64_t dim(std::size_t i) const { return shape.at(i); }
  std::size_t numel() const { return data.size(); }
};

// Reader for the safetensors container: an 8-byte little-endian header
// length, a JSON header mapping names to {dtype, shape, data_offsets}, then
// the raw buffer. F32, F16, BF16 and F64 payloads are widened/narrowed to
// float on load.
class TensorFile {
 public:
  static TensorFile load(const std::filesystem::path& path);
  static TensorFile parse(std::string_view bytes);

  bool contains(std::string_view name) const;
  const Tensor& get(std::string_view name) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, Tensor, std::less<>> tensors_;
};

// Writes F32 tensors in the same container (used by tests and tools).
std::string serialize_tensors(const std::map<std::string, Tensor>& tensors);

}  // namespace entrank::nli
