#include "oppi/search/scorer.hpp"

#include <thread>

#include "oppi/error.hpp"
#include "oppi/model/encoder.hpp"

namespace oppi::search {

namespace {

seq::TokenSequence fitted_tokens(const seq::ProteinSequence& s, const model::EncoderConfig& c) {
  if (s.size() + seq::kReservedTokens > c.max_len) {
    throw DataError("sequence '" + s.id() + "' has " + std::to_string(s.size()) + " residues; the model holds at most " +
                    std::to_string(c.max_len - seq::kReservedTokens));
  }
  return seq::tokenize(s, s.size() + seq::kReservedTokens);
}

}  // namespace

double Scorer::score_one(const seq::ProteinSequence& s) const {
  return score(std::span<const seq::ProteinSequence>(&s, 1)).front();
}

ModelScorer::ModelScorer(const model::EncoderWeights<float>& weights, const seq::ProteinSequence& host,
                         std::size_t threads)
    : weights_(weights),
      host_cls_(model::encode_cls(fitted_tokens(host, weights.config()), weights)),
      threads_(std::max<std::size_t>(1, threads)) {}

std::vector<double> ModelScorer::score(std::span<const seq::ProteinSequence> variants) const {
  std::vector<seq::TokenSequence> tokens;
  tokens.reserve(variants.size());
  for (const auto& v : variants) tokens.push_back(fitted_tokens(v, weights_.config()));

  std::vector<double> out(variants.size());
  const auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = model::ppi_score_from_cls(model::encode_cls(tokens[i], weights_), host_cls_, weights_);
    }
  };
  const std::size_t workers = std::min(threads_, variants.size());
  if (workers <= 1) {
    run(0, variants.size());
    return out;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (variants.size() + workers - 1) / workers;
  for (std::size_t begin = 0; begin < variants.size(); begin += chunk) {
    pool.emplace_back(run, begin, std::min(variants.size(), begin + chunk));
  }
  pool.clear();  // joins
  return out;
}

std::vector<double> FunctionScorer::score(std::span<const seq::ProteinSequence> variants) const {
  std::vector<double> out;
  out.reserve(variants.size());
  for (const auto& v : variants) out.push_back(fn_(v));
  return out;
}

}  // namespace oppi::search
