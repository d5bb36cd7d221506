#pragma once

#include <cstdint>
#include <vector>

#include "oppi/num/rng.hpp"
#include "oppi/seqcore/tokens.hpp"

namespace oppi::train {

/// Label of positions that do not enter the MLM loss.
inline constexpr std::int32_t kIgnoreLabel = -1;

struct MaskingPolicy {
  double mask_fraction = 0.15;
  double mask_token_prob = 0.9;    // selected slot becomes MASK
  double random_token_prob = 0.1;  // selected slot becomes a uniform residue token

  /// Throws oppi::ConfigError unless fractions lie in [0, 1] and the two probabilities sum to 1.
  void validate() const;
};

struct MaskedTokens {
  seq::TokenSequence tokens;
  std::vector<std::int32_t> labels;  // original id at selected slots, kIgnoreLabel elsewhere
};

/// round(fraction * n) with halves rounded up, robust to the product landing a hair
/// below .5 in floating point (0.15 * 30 is 4.4999...).
std::size_t round_count(double fraction, std::size_t n);

/// Slots selected for n residues: max(1, round(fraction * n)).
std::size_t masked_count(std::size_t residues, double fraction);

/// Selects masked_count() residue slots without replacement. Specials and PAD are never
/// touched.
MaskedTokens mask_sequence(const seq::TokenSequence& t, const MaskingPolicy& policy, num::CounterRng& rng);

}  // namespace oppi::train
