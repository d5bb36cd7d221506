#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "oppi/model/config.hpp"
#include "oppi/search/search.hpp"
#include "oppi/train/trainer.hpp"

namespace oppi::cli {

/// Every run setting as text keyed by name: model, training, search and evaluation
/// hyperparameters, the seed, worker count and file paths. Values are type-checked when
/// set; unknown keys are rejected with oppi::ConfigError.
class RunConfig {
 public:
  enum class Kind { kCount, kReal, kFlag, kSeed, kText, kAugmentation, kAlgorithm };
  struct Key {
    std::string_view name;
    Kind kind;
    std::string_view default_value;
    std::string_view help;
  };

  /// Defaults; `env_seed` (normally $OPPI_SEED) replaces the seed default when non-empty.
  explicit RunConfig(std::string_view env_seed = {});

  static const std::vector<Key>& schema();

  void set(std::string_view key, std::string value);
  /// `key=value`.
  void apply_override(std::string_view assignment);
  /// `key = value` lines; blank lines and '#' comments ignored. Errors name the line.
  void apply_text(std::string_view text, std::string_view origin);
  void apply_file(const std::filesystem::path& path);
  /// Small model: d_model 32, 2 layers, 2 heads, ffn 128, max_len 64.
  void apply_toy();

  const std::string& get(std::string_view key) const;
  bool has_value(std::string_view key) const { return !get(key).empty(); }

  model::EncoderConfig encoder() const;
  train::TrainConfig training() const;
  search::SearchConfig search() const;
  double threshold() const;
  std::uint64_t seed() const;
  std::size_t threads() const;
  /// Comma-separated list value split into items.
  std::vector<std::string> list(std::string_view key) const;

  /// One `key=value` line per setting, schema order; round-trips through apply_text.
  void echo(std::ostream& out, std::string_view prefix = {}) const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

}  // namespace oppi::cli
