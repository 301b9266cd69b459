#include "entrank/nli/safetensors.hpp"

#include <bit>
#include <cstring>

#include <json.hpp>

#include "entrank/error.hpp"
#include "entrank/text_io.hpp"

namespace entrank::nli {

namespace {

constexpr const char* kModule = "scorer";

static_assert(std::endian::native == std::endian::little, "tensor loading assumes a little-endian host");

float half_to_float(std::uint16_t h) {
  const std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000u) << 16;
  std::uint32_t exp = (h >> 10) & 0x1fu;
  std::uint32_t mant = h & 0x3ffu;
  std::uint32_t bits;
  if (exp == 0) {
    if (mant == 0) {
      bits = sign;
    } else {
      exp = 127 - 15 + 1;
      while ((mant & 0x400u) == 0) {
        mant <<= 1;
        --exp;
      }
      mant &= 0x3ffu;
      bits = sign | (exp << 23) | (mant << 13);
    }
  } else if (exp == 0x1f) {
    bits = sign | 0x7f800000u | (mant << 13);
  } else {
    bits = sign | ((exp + 127 - 15) << 23) | (mant << 13);
  }
  return std::bit_cast<float>(bits);
}

float bf16_to_float(std::uint16_t h) { return std::bit_cast<float>(static_cast<std::uint32_t>(h) << 16); }

}  // namespace

TensorFile TensorFile::parse(std::string_view bytes) {
  if (bytes.size() < 8) backend_error(kModule, "tensor file truncated");
  std::uint64_t header_len = 0;
  std::memcpy(&header_len, bytes.data(), 8);
  if (header_len > bytes.size() - 8) backend_error(kModule, "tensor header exceeds file size");
  const std::string_view body = bytes.substr(8 + header_len);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(8, header_len));
  } catch (const nlohmann::json::exception& e) {
    backend_error(kModule, std::string("tensor header: ") + e.what());
  }

  TensorFile file;
  for (const auto& [name, info] : header.items()) {
    if (name == "__metadata__") continue;
    Tensor t;
    const auto dtype = info.at("dtype").get<std::string>();
    t.shape = info.at("shape").get<std::vector<std::int64_t>>();
    const auto offsets = info.at("data_offsets").get<std::vector<std::uint64_t>>();
    if (offsets.size() != 2 || offsets[0] > offsets[1] || offsets[1] > body.size()) {
      backend_error(kModule, "tensor '" + name + "' has invalid offsets");
    }
    std::size_t count = 1;
    for (auto d : t.shape) count *= static_cast<std::size_t>(d);
    const char* src = body.data() + offsets[0];
    const std::size_t nbytes = offsets[1] - offsets[0];
    t.data.resize(count);

    auto expect = [&](std::size_t width) {
      if (nbytes != count * width) backend_error(kModule, "tensor '" + name + "' size does not match shape");
    };
    if (dtype == "F32") {
      expect(4);
      std::memcpy(t.data.data(), src, nbytes);
    } else if (dtype == "F16" || dtype == "BF16") {
      expect(2);
      for (std::size_t i = 0; i < count; ++i) {
        std::uint16_t h;
        std::memcpy(&h, src + 2 * i, 2);
        t.data[i] = dtype == "F16" ? half_to_float(h) : bf16_to_float(h);
      }
    } else if (dtype == "F64") {
      expect(8);
      for (std::size_t i = 0; i < count; ++i) {
        double d;
        std::memcpy(&d, src + 8 * i, 8);
        t.data[i] = static_cast<float>(d);
      }
    } else {
      // Integer buffers (e.g. position_ids) are not needed for inference.
      continue;
    }
    file.tensors_.emplace(name, std::move(t));
  }
  return file;
}

TensorFile TensorFile::load(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = read_file(path, kModule);
  } catch (const Error& e) {
    backend_error(kModule, e.what());
  }
  return parse(bytes);
}

bool TensorFile::contains(std::string_view name) const { return tensors_.find(name) != tensors_.end(); }

const Tensor& TensorFile::get(std::string_view name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) backend_error(kModule, "model file has no tensor '" + std::string(name) + "'");
  return it->second;
}

std::vector<std::string> TensorFile::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : tensors_) out.push_back(name);
  return out;
}

std::string serialize_tensors(const std::map<std::string, Tensor>& tensors) {
  nlohmann::json header = nlohmann::json::object();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : tensors) {
    const std::uint64_t n = t.data.size() * sizeof(float);
    header[name] = {{"dtype", "F32"}, {"shape", t.shape}, {"data_offsets", {offset, offset + n}}};
    offset += n;
  }
  std::string h = header.dump();
  while (h.size() % 8) h += ' ';
  std::string out(8, '\0');
  const std::uint64_t len = h.size();
  std::memcpy(out.data(), &len, 8);
  out += h;
  for (const auto& [name, t] : tensors) {
    out.append(reinterpret_cast<const char*>(t.data.data()), t.data.size() * sizeof(float));
  }
  return out;
}

}  // namespace entrank::nli
