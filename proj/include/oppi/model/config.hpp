#pragma once

#include <cstddef>
#include <map>
#include <string>

namespace oppi::model {

struct EncoderConfig {
  std::size_t num_layers = 3;
  std::size_t num_heads = 8;
  std::size_t d_model = 128;
  std::size_t ffn_hidden = 512;
  double dropout = 0.1;
  std::size_t max_len = 1300;
  std::size_t vocab_size = 25;

  std::size_t head_dim() const noexcept { return d_model / num_heads; }

  /// Throws oppi::ConfigError when an invariant does not hold.
  void validate() const;

  /// Small preset for tests and demos: d=32, 2 layers, 2 heads, max_len 64.
  static EncoderConfig toy();

  /// key=value form used in checkpoint headers.
  std::map<std::string, std::string> to_map() const;
  /// Reads the keys written by to_map(); missing keys keep their defaults.
  static EncoderConfig from_map(const std::map<std::string, std::string>& kv);

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

}  // namespace oppi::model
