#pragma once

#include <string>
#include <string_view>

#include "oppi/num/rng.hpp"
#include "oppi/seqcore/protein.hpp"

namespace oppi::train {

enum class Augmentation { kNone, kAlanineSub, kDictSub, kReverse };

/// "none", "alanine", "dict", "reverse".
std::string_view augmentation_name(Augmentation a) noexcept;
/// Inverse of augmentation_name; throws oppi::ConfigError listing the valid names.
Augmentation parse_augmentation(std::string_view name);

struct AugmentationPolicy {
  double protein_fraction = 0.25;
  double position_fraction = 0.20;
  Augmentation technique = Augmentation::kNone;

  void validate() const;
};

/// Applies `technique` unconditionally. Substitutions rewrite round(position_fraction * L)
/// distinct random positions: AlanineSub with 'A', DictSub with the residue's closest
/// BLOSUM62 neighbour. Reverse flips the whole chain. The id is kept.
seq::ProteinSequence apply_augmentation(const seq::ProteinSequence& s, Augmentation technique,
                                        double position_fraction, num::CounterRng& rng);

/// With probability protein_fraction applies the policy's technique, else returns s.
seq::ProteinSequence augment(const seq::ProteinSequence& s, const AugmentationPolicy& policy, num::CounterRng& rng);

}  // namespace oppi::train
