#include "oppi/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "oppi/error.hpp"

namespace oppi::model {

namespace {

constexpr char kMagic[4] = {'O', 'P', 'P', 'I'};
// Guards against absurd allocations from a corrupt length field.
constexpr std::uint32_t kMaxField = 1u << 30;

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

std::uint32_t get_u32(std::istream& in, const char* what) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    throw DataError(std::string("checkpoint truncated while reading ") + what);
  }
  return static_cast<std::uint32_t>(bytes[0]) | static_cast<std::uint32_t>(bytes[1]) << 8 |
         static_cast<std::uint32_t>(bytes[2]) << 16 | static_cast<std::uint32_t>(bytes[3]) << 24;
}

std::string get_bytes(std::istream& in, std::uint32_t n, const char* what) {
  if (n > kMaxField) throw DataError(std::string("checkpoint ") + what + " length " + std::to_string(n) + " is implausible");
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), n)) throw DataError(std::string("checkpoint truncated while reading ") + what);
  return s;
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > kMaxField) throw std::length_error(std::string(what) + " too large for checkpoint");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void save_checkpoint(std::ostream& out, const EncoderWeights<float>& weights,
                     const std::map<std::string, std::string>& metadata) {
  auto header_map = weights.config().to_map();
  for (const auto& [key, value] : metadata) {
    if (key.empty() || key.find_first_of("=\n") != std::string::npos || value.find('\n') != std::string::npos) {
      throw std::invalid_argument("checkpoint metadata '" + key + "' is not a single key=value line");
    }
    if (!header_map.emplace(key, value).second) {
      throw std::invalid_argument("checkpoint metadata key '" + key + "' shadows a hyperparameter");
    }
  }
  std::string header;
  for (const auto& [key, value] : header_map) header += key + "=" + value + "\n";

  out.write(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, checked_u32(header.size(), "header"));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  const auto& params = weights.params();
  put_u32(out, checked_u32(params.size(), "tensor count"));
  for (const auto& p : params) {
    put_u32(out, checked_u32(p.name.size(), "tensor name"));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put_u32(out, checked_u32(p.value.rank(), "rank"));
    for (auto dim : p.value.shape()) put_u32(out, checked_u32(dim, "dimension"));
    for (float v : p.value.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  if (!out) throw DataError("failed writing checkpoint");
}

void save_checkpoint(const std::filesystem::path& path, const EncoderWeights<float>& weights,
                     const std::map<std::string, std::string>& metadata) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  save_checkpoint(out, weights, metadata);
  out.close();
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw DataError("not an OPPI checkpoint (bad magic)");
  const auto version = get_u32(in, "version");
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  }
  const auto header = get_bytes(in, get_u32(in, "header length"), "header");

  std::map<std::string, std::string> kv;
  std::istringstream lines(header);
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) throw DataError("malformed checkpoint header line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  EncoderConfig config;
  try {
    config = EncoderConfig::from_map(kv);
    config.validate();
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint header: ") + e.what());
  }
  std::map<std::string, std::string> metadata;
  const auto config_keys = config.to_map();
  for (auto& [key, value] : kv) {
    if (!config_keys.contains(key)) metadata.emplace(key, std::move(value));
  }

  const auto count = get_u32(in, "tensor count");
  if (count > kMaxField) throw DataError("checkpoint tensor count is implausible");
  std::vector<num::Parameter<float>> params;
  params.reserve(count);
  for (std::uint32_t t = 0; t < count; ++t) {
    auto name = get_bytes(in, get_u32(in, "tensor name length"), "tensor name");
    const auto rank = get_u32(in, "rank");
    if (rank == 0 || rank > 8) throw DataError("tensor " + name + " has unsupported rank " + std::to_string(rank));
    num::Shape shape(rank);
    std::size_t total = 1;
    for (auto& dim : shape) {
      dim = get_u32(in, "dimension");
      if (dim == 0 || dim > kMaxField / 4 / total) throw DataError("tensor " + name + " has invalid dimensions");
      total *= dim;
    }
    num::Tensor<float> value(shape);
    const auto bytes = get_bytes(in, checked_u32(total * 4, "payload"), "tensor payload");
    auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
    for (std::size_t i = 0; i < total; ++i, raw += 4) {
      const std::uint32_t u = static_cast<std::uint32_t>(raw[0]) | static_cast<std::uint32_t>(raw[1]) << 8 |
                              static_cast<std::uint32_t>(raw[2]) << 16 | static_cast<std::uint32_t>(raw[3]) << 24;
      value.data()[i] = std::bit_cast<float>(u);
    }
    params.emplace_back(std::move(name), std::move(value));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("trailing bytes after checkpoint tensors");
  try {
    return Checkpoint{config, std::move(metadata), EncoderWeights<float>(config, std::move(params))};
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("checkpoint tensors do not match header: ") + e.what());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  try {
    return load_checkpoint(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const EncoderConfig& expected) {
  auto ckpt = load_checkpoint(path);
  const auto have = ckpt.config.to_map();
  for (const auto& [key, want] : expected.to_map()) {
    const auto& got = have.at(key);
    if (got != want) {
      throw ConfigError(path.string() + ": checkpoint " + key + "=" + got + " but configuration expects " + key +
                        "=" + want);
    }
  }
  return ckpt;
}

}  // namespace oppi::model
