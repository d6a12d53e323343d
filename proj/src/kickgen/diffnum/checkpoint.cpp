#include "kickgen/diffnum/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "kickgen/common/errors.hpp"

namespace kickgen::diffnum {

namespace {
constexpr int kFormatVersion = 1;

void write_u32_le(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                        static_cast<unsigned char>((v >> 8) & 0xFF),
                        static_cast<unsigned char>((v >> 16) & 0xFF),
                        static_cast<unsigned char>((v >> 24) & 0xFF)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32_le(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw kickgen::FormatError("checkpoint: truncated header length");
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}
}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<NamedTensor>& tensors,
                     const nlohmann::json& meta) {
  nlohmann::json header;
  header["format_version"] = kFormatVersion;
  header["meta"] = meta;
  auto& list = header["tensors"] = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& t : tensors) {
    const std::size_t bytes = t.tensor.size() * sizeof(float);
    list.push_back({{"name", t.name},
                    {"group", t.group},
                    {"shape", t.tensor.shape},
                    {"dtype", "f32"},
                    {"offset", offset},
                    {"length", bytes}});
    offset += bytes;
  }
  const std::string hs = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw kickgen::IoError("cannot write checkpoint: " + path);
  write_u32_le(out, static_cast<std::uint32_t>(hs.size()));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto& t : tensors) {
    out.write(reinterpret_cast<const char*>(t.tensor.data.data()),
              static_cast<std::streamsize>(t.tensor.size() * sizeof(float)));
  }
  if (!out) throw kickgen::IoError("write failed for checkpoint: " + path);
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw kickgen::IoError("cannot open checkpoint: " + path);
  const std::uint32_t hlen = read_u32_le(in);
  std::string hs(hlen, '\0');
  in.read(hs.data(), hlen);
  if (!in) throw kickgen::FormatError("checkpoint: truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(hs);
  } catch (const nlohmann::json::exception& e) {
    throw kickgen::FormatError(std::string("checkpoint: bad header JSON: ") +
                               e.what());
  }
  if (!header.contains("format_version") ||
      header["format_version"].get<int>() != kFormatVersion) {
    throw kickgen::FormatError("checkpoint: unsupported format version");
  }

  const std::streampos payload_start = in.tellg();
  in.seekg(0, std::ios::end);
  const std::size_t payload_size =
      static_cast<std::size_t>(in.tellg() - payload_start);

  CheckpointData data;
  data.meta = header.value("meta", nlohmann::json::object());
  std::size_t expected_offset = 0;
  for (const auto& item : header.at("tensors")) {
    NamedTensor t;
    t.name = item.at("name").get<std::string>();
    t.group = item.value("group", std::string());
    const auto shape = item.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 3) {
      throw kickgen::FormatError("checkpoint: tensor rank must be 3");
    }
    if (item.at("dtype").get<std::string>() != "f32") {
      throw kickgen::FormatError("checkpoint: unsupported dtype");
    }
    const std::size_t offset = item.at("offset").get<std::size_t>();
    const std::size_t length = item.at("length").get<std::size_t>();
    t.tensor = TensorF(shape[0], shape[1], shape[2]);
    if (length != t.tensor.size() * sizeof(float)) {
      throw kickgen::FormatError("checkpoint: length does not match shape for " +
                                 t.name);
    }
    if (offset != expected_offset || offset + length > payload_size) {
      throw kickgen::FormatError("checkpoint: bad payload offsets for " +
                                 t.name);
    }
    expected_offset = offset + length;
    in.seekg(payload_start + static_cast<std::streamoff>(offset));
    in.read(reinterpret_cast<char*>(t.tensor.data.data()),
            static_cast<std::streamsize>(length));
    if (!in) throw kickgen::FormatError("checkpoint: truncated payload");
    data.tensors.push_back(std::move(t));
  }
  if (expected_offset != payload_size) {
    throw kickgen::FormatError("checkpoint: payload size mismatch");
  }
  return data;
}

const NamedTensor* CheckpointData::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

std::vector<NamedTensor> snapshot_store(const ParamStore& store) {
  std::vector<NamedTensor> out;
  out.reserve(store.count());
  for (std::size_t i = 0; i < store.count(); ++i) {
    const auto& e = store.entry(static_cast<int>(i));
    out.push_back({e.name, e.group, e.value});
  }
  return out;
}

}  // namespace kickgen::diffnum
