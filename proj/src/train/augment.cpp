#include "oppi/train/augment.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "oppi/error.hpp"
#include "oppi/seqcore/blosum.hpp"
#include "oppi/train/masking.hpp"

namespace oppi::train {

namespace {

constexpr std::pair<Augmentation, std::string_view> kNames[] = {{Augmentation::kNone, "none"},
                                                                 {Augmentation::kAlanineSub, "alanine"},
                                                                 {Augmentation::kDictSub, "dict"},
                                                                 {Augmentation::kReverse, "reverse"}};

}  // namespace

std::string_view augmentation_name(Augmentation a) noexcept {
  for (const auto& [value, name] : kNames) {
    if (value == a) return name;
  }
  return "none";
}

Augmentation parse_augmentation(std::string_view name) {
  for (const auto& [value, n] : kNames) {
    if (n == name) return value;
  }
  throw ConfigError("unknown augmentation '" + std::string(name) + "' (expected none, alanine, dict or reverse)");
}

void AugmentationPolicy::validate() const {
  if (!(protein_fraction >= 0.0 && protein_fraction <= 1.0) || !(position_fraction >= 0.0 && position_fraction <= 1.0)) {
    throw ConfigError("augmentation fractions must lie in [0, 1]");
  }
}

seq::ProteinSequence apply_augmentation(const seq::ProteinSequence& s, Augmentation technique,
                                        double position_fraction, num::CounterRng& rng) {
  std::vector<seq::AminoAcid> residues(s.residues().begin(), s.residues().end());
  switch (technique) {
    case Augmentation::kNone:
      return s;
    case Augmentation::kReverse:
      std::reverse(residues.begin(), residues.end());
      break;
    case Augmentation::kAlanineSub:
    case Augmentation::kDictSub: {
      const std::size_t n = residues.size();
      const std::size_t k = std::min(n, round_count(position_fraction, n));
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      for (std::size_t i = 0; i < k; ++i) std::swap(order[i], order[i + rng.below(n - i)]);
      for (std::size_t i = 0; i < k; ++i) {
        auto& r = residues[order[i]];
        r = technique == Augmentation::kAlanineSub ? seq::AminoAcid::parse('A') : seq::most_similar_residue(r);
      }
      break;
    }
  }
  return seq::ProteinSequence(std::move(residues), s.id());
}

seq::ProteinSequence augment(const seq::ProteinSequence& s, const AugmentationPolicy& policy, num::CounterRng& rng) {
  if (policy.technique == Augmentation::kNone || rng.uniform() >= policy.protein_fraction) return s;
  return apply_augmentation(s, policy.technique, policy.position_fraction, rng);
}

}  // namespace oppi::train
