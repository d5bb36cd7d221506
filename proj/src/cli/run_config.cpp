#include "oppi/cli/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

#include "oppi/error.hpp"

namespace oppi::cli {

namespace {

using Kind = RunConfig::Kind;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename N>
N parse_as(std::string_view key, const std::string& text) {
  N value{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw ConfigError("invalid value '" + text + "' for " + std::string(key));
  }
  return value;
}

bool parse_flag(std::string_view key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("invalid value '" + text + "' for " + std::string(key) + " (expected true or false)");
}

}  // namespace

const std::vector<RunConfig::Key>& RunConfig::schema() {
  static const std::vector<Key> keys = {
      {"num_layers", Kind::kCount, "3", "encoder layers"},
      {"num_heads", Kind::kCount, "8", "attention heads"},
      {"d_model", Kind::kCount, "128", "embedding width"},
      {"ffn_hidden", Kind::kCount, "512", "feed-forward hidden width"},
      {"dropout", Kind::kReal, "0.1", "dropout rate during training"},
      {"max_len", Kind::kCount, "1300", "token capacity including CLS, SOS and EOS"},
      {"batch_size", Kind::kCount, "8", "training batch size"},
      {"mlm_epochs", Kind::kCount, "50", "pretraining epochs"},
      {"ppi_epochs", Kind::kCount, "15", "fine-tuning epochs"},
      {"learning_rate", Kind::kReal, "0.001", "Adam step size"},
      {"adam_beta1", Kind::kReal, "0.9", "Adam first-moment decay"},
      {"adam_beta2", Kind::kReal, "0.999", "Adam second-moment decay"},
      {"adam_eps", Kind::kReal, "1e-07", "Adam denominator epsilon"},
      {"sam_on_mlm", Kind::kFlag, "false", "sharpness-aware steps during pretraining"},
      {"sam_on_ppi", Kind::kFlag, "true", "sharpness-aware steps during fine-tuning"},
      {"sam_rho", Kind::kReal, "0.05", "SAM neighbourhood radius"},
      {"mask_fraction", Kind::kReal, "0.15", "share of residues masked for MLM"},
      {"augmentation", Kind::kAugmentation, "none", "pretraining augmentation: none, alanine, dict, reverse"},
      {"aug_protein_fraction", Kind::kReal, "0.25", "share of proteins augmented"},
      {"aug_position_fraction", Kind::kReal, "0.2", "share of positions substituted"},
      {"algo", Kind::kAlgorithm, "greedy", "search algorithm: greedy or beam"},
      {"blosum_cap", Kind::kCount, "40", "maximum BLOSUM distance from the seed sequence"},
      {"beamwidth", Kind::kCount, "10", "beam width"},
      {"max_iterations", Kind::kCount, "100", "search iteration bound"},
      {"threshold", Kind::kReal, "0.5", "score at or above which a pair is predicted to bind"},
      {"seed", Kind::kSeed, "0", "random seed (default from OPPI_SEED)"},
      {"threads", Kind::kCount, "1", "scoring workers"},
      {"corpus", Kind::kText, "", "pretraining FASTA"},
      {"pairs", Kind::kText, "", "pairs table: virus_id host_id label"},
      {"fasta", Kind::kText, "", "comma-separated FASTA files resolving pair ids"},
      {"init", Kind::kText, "", "checkpoint to start fine-tuning from"},
      {"model", Kind::kText, "", "checkpoint to score, search or evaluate with"},
      {"out", Kind::kText, "", "checkpoint to write"},
      {"metrics", Kind::kText, "", "per-epoch metrics log to write"},
      {"virus", Kind::kText, "", "virus FASTA to score"},
      {"host", Kind::kText, "", "host FASTA"},
      {"s0", Kind::kText, "", "FASTA whose first record seeds the search"},
      {"report", Kind::kText, "", "search step report to write"},
      {"variants", Kind::kText, "", "FASTA of proposed variants to write"},
  };
  return keys;
}

RunConfig::RunConfig(std::string_view env_seed) {
  for (const auto& k : schema()) values_.emplace(std::string(k.name), std::string(k.default_value));
  if (!env_seed.empty()) set("seed", std::string(env_seed));
}

void RunConfig::set(std::string_view key, std::string value) {
  const auto& keys = schema();
  const auto it = std::find_if(keys.begin(), keys.end(), [&](const Key& k) { return k.name == key; });
  if (it == keys.end()) throw ConfigError("unknown configuration key '" + std::string(key) + "'");
  switch (it->kind) {
    case Kind::kCount:
      parse_as<std::size_t>(key, value);
      break;
    case Kind::kSeed:
      parse_as<std::uint64_t>(key, value);
      break;
    case Kind::kReal:
      parse_as<double>(key, value);
      break;
    case Kind::kFlag:
      value = parse_flag(key, value) ? "true" : "false";
      break;
    case Kind::kAugmentation:
      train::parse_augmentation(value);
      break;
    case Kind::kAlgorithm:
      if (value != "greedy" && value != "beam") {
        throw ConfigError("invalid value '" + value + "' for algo (expected greedy or beam)");
      }
      break;
    case Kind::kText:
      break;
  }
  values_.find(key)->second = std::move(value);
}

void RunConfig::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
  }
  set(trim(assignment.substr(0, eq)), std::string(trim(assignment.substr(eq + 1))));
}

void RunConfig::apply_text(std::string_view text, std::string_view origin) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      apply_override(line);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void RunConfig::apply_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  apply_text(text.str(), path.string());
}

void RunConfig::apply_toy() {
  const auto toy = model::EncoderConfig::toy();
  for (const auto& [key, value] : toy.to_map()) {
    if (key != "vocab_size") set(key, value);
  }
}

const std::string& RunConfig::get(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown configuration key '" + std::string(key) + "'");
  return it->second;
}

model::EncoderConfig RunConfig::encoder() const {
  std::map<std::string, std::string> kv;
  for (const auto* key : {"num_layers", "num_heads", "d_model", "ffn_hidden", "dropout", "max_len"}) kv[key] = get(key);
  auto c = model::EncoderConfig::from_map(kv);
  c.validate();
  return c;
}

train::TrainConfig RunConfig::training() const {
  train::TrainConfig c;
  c.batch_size = parse_as<std::size_t>("batch_size", get("batch_size"));
  c.mlm_epochs = parse_as<std::size_t>("mlm_epochs", get("mlm_epochs"));
  c.ppi_epochs = parse_as<std::size_t>("ppi_epochs", get("ppi_epochs"));
  c.seed = seed();
  c.sam_on_mlm = get("sam_on_mlm") == "true";
  c.sam_on_ppi = get("sam_on_ppi") == "true";
  c.sam.rho = parse_as<double>("sam_rho", get("sam_rho"));
  c.masking.mask_fraction = parse_as<double>("mask_fraction", get("mask_fraction"));
  c.augmentation.technique = train::parse_augmentation(get("augmentation"));
  c.augmentation.protein_fraction = parse_as<double>("aug_protein_fraction", get("aug_protein_fraction"));
  c.augmentation.position_fraction = parse_as<double>("aug_position_fraction", get("aug_position_fraction"));
  c.adam.alpha = parse_as<double>("learning_rate", get("learning_rate"));
  c.adam.beta1 = parse_as<double>("adam_beta1", get("adam_beta1"));
  c.adam.beta2 = parse_as<double>("adam_beta2", get("adam_beta2"));
  c.adam.eps = parse_as<double>("adam_eps", get("adam_eps"));
  c.validate();
  return c;
}

search::SearchConfig RunConfig::search() const {
  search::SearchConfig c;
  const auto cap = parse_as<std::size_t>("blosum_cap", get("blosum_cap"));
  if (cap > 1'000'000) throw ConfigError("blosum_cap is implausibly large");
  c.blosum_cap = static_cast<int>(cap);
  c.beamwidth = parse_as<std::size_t>("beamwidth", get("beamwidth"));
  c.max_iterations = parse_as<std::size_t>("max_iterations", get("max_iterations"));
  c.validate();
  return c;
}

double RunConfig::threshold() const { return parse_as<double>("threshold", get("threshold")); }
std::uint64_t RunConfig::seed() const { return parse_as<std::uint64_t>("seed", get("seed")); }
std::size_t RunConfig::threads() const { return std::max<std::size_t>(1, parse_as<std::size_t>("threads", get("threads"))); }

std::vector<std::string> RunConfig::list(std::string_view key) const {
  std::vector<std::string> out;
  std::string_view rest = get(key);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const auto item = trim(rest.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
  }
  return out;
}

void RunConfig::echo(std::ostream& out, std::string_view prefix) const {
  for (const auto& k : schema()) out << prefix << k.name << '=' << get(k.name) << '\n';
}

}  // namespace oppi::cli
