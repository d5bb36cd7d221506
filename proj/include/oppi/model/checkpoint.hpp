#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "oppi/model/weights.hpp"

namespace oppi::model {

/// Binary layout, all integers little-endian u32:
///   "OPPI" | version | header_len | header ("key=value\n" lines) | tensor_count |
///   per tensor: name_len | name | rank | dims... | f32 payload (little-endian)
/// The header holds the encoder hyperparameters plus free-form metadata.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  EncoderConfig config;
  std::map<std::string, std::string> metadata;  // header keys that are not hyperparameters
  EncoderWeights<float> weights;
};

/// Metadata keys may not contain '=' or newlines, nor shadow a hyperparameter key.
void save_checkpoint(std::ostream& out, const EncoderWeights<float>& weights,
                     const std::map<std::string, std::string>& metadata = {});
void save_checkpoint(const std::filesystem::path& path, const EncoderWeights<float>& weights,
                     const std::map<std::string, std::string>& metadata = {});

/// Throws oppi::DataError on a malformed or truncated file.
Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Loads and requires the stored hyperparameters to equal `expected`; a mismatch names
/// the first differing key with both values.
Checkpoint load_checkpoint(const std::filesystem::path& path, const EncoderConfig& expected);

}  // namespace oppi::model
