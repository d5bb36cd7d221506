#include "oppi/train/masking.hpp"

#include <cmath>
#include <numeric>

#include "oppi/error.hpp"

namespace oppi::train {

void MaskingPolicy::validate() const {
  for (double p : {mask_fraction, mask_token_prob, random_token_prob}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("masking probabilities must lie in [0, 1]");
  }
  if (std::abs(mask_token_prob + random_token_prob - 1.0) > 1e-12) {
    throw ConfigError("mask_token_prob and random_token_prob must sum to 1");
  }
}

std::size_t round_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 0.5 + 1e-9));
}

std::size_t masked_count(std::size_t residues, double fraction) {
  return std::min(residues, std::max<std::size_t>(1, round_count(fraction, residues)));
}

MaskedTokens mask_sequence(const seq::TokenSequence& t, const MaskingPolicy& policy, num::CounterRng& rng) {
  MaskedTokens out{t, std::vector<std::int32_t>(t.max_len(), kIgnoreLabel)};
  const std::size_t n = t.residue_count();
  const std::size_t k = masked_count(n, policy.mask_fraction);

  // Partial Fisher-Yates: the first k entries become a uniform k-subset.
  std::vector<std::size_t> slots(n);
  std::iota(slots.begin(), slots.end(), std::size_t{2});
  for (std::size_t i = 0; i < k; ++i) std::swap(slots[i], slots[i + rng.below(n - i)]);

  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t pos = slots[i];
    out.labels[pos] = t[pos];
    const bool use_mask = rng.uniform() < policy.mask_token_prob;
    const auto id = use_mask ? seq::TokenVocab::kMask
                             : static_cast<seq::TokenId>(seq::TokenVocab::kFirstResidue + rng.below(seq::kNumAminoAcids));
    out.tokens.set(pos, id);
  }
  return out;
}

}  // namespace oppi::train
