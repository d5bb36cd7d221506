#include "oppi/model/config.hpp"

#include <charconv>
#include <string>
#include <system_error>

#include "oppi/error.hpp"
#include "oppi/seqcore/tokens.hpp"

namespace oppi::model {

namespace {

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

template <typename N>
N parse_number(const std::string& key, const std::string& text) {
  N value{};
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw ConfigError("invalid value '" + text + "' for " + key);
  }
  return value;
}

}  // namespace

void EncoderConfig::validate() const {
  if (num_layers == 0) throw ConfigError("num_layers must be positive");
  if (num_heads == 0) throw ConfigError("num_heads must be positive");
  if (d_model == 0 || d_model % num_heads != 0) {
    throw ConfigError("d_model (" + std::to_string(d_model) + ") must be a positive multiple of num_heads (" +
                      std::to_string(num_heads) + ")");
  }
  if (ffn_hidden == 0) throw ConfigError("ffn_hidden must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
  if (max_len < seq::kReservedTokens + 1) throw ConfigError("max_len must leave room for at least one residue");
  if (vocab_size != seq::TokenVocab::kSize) {
    throw ConfigError("vocab_size must be " + std::to_string(seq::TokenVocab::kSize));
  }
}

EncoderConfig EncoderConfig::toy() {
  EncoderConfig c;
  c.num_layers = 2;
  c.num_heads = 2;
  c.d_model = 32;
  c.ffn_hidden = 128;
  c.max_len = 64;
  return c;
}

std::map<std::string, std::string> EncoderConfig::to_map() const {
  return {
      {"num_layers", std::to_string(num_layers)}, {"num_heads", std::to_string(num_heads)},
      {"d_model", std::to_string(d_model)},       {"ffn_hidden", std::to_string(ffn_hidden)},
      {"dropout", format_double(dropout)},        {"max_len", std::to_string(max_len)},
      {"vocab_size", std::to_string(vocab_size)},
  };
}

EncoderConfig EncoderConfig::from_map(const std::map<std::string, std::string>& kv) {
  EncoderConfig c;
  const auto get = [&](const char* key, auto& field) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    field = parse_number<std::remove_reference_t<decltype(field)>>(key, it->second);
  };
  get("num_layers", c.num_layers);
  get("num_heads", c.num_heads);
  get("d_model", c.d_model);
  get("ffn_hidden", c.ffn_hidden);
  get("dropout", c.dropout);
  get("max_len", c.max_len);
  get("vocab_size", c.vocab_size);
  return c;
}

}  // namespace oppi::model
