#pragma once

#include <cstdint>
#include <vector>

#include "oppi/seqcore/pairs.hpp"

namespace oppi::train {

/// Toy data for smoke runs. Binding viruses lean on K/R/H/W, non-binders on D/E/S/G;
/// every residue still has a uniform background share, so the classes overlap in
/// alphabet but separate cleanly by composition.
struct SyntheticPpi {
  std::vector<seq::ProteinSequence> sequences;  // viruses then hosts, ids unique
  std::vector<seq::PairRecord> pairs;           // labels alternate 1, 0, 1, ...
};

/// `count` unlabelled sequences with lengths in [min_len, max_len], drawn from both
/// classes and the host pool.
std::vector<seq::ProteinSequence> synthetic_corpus(std::size_t count, std::uint64_t seed, std::size_t min_len = 20,
                                                   std::size_t max_len = 40);

/// `count` pairs over `hosts` host proteins, half of them binders.
SyntheticPpi synthetic_pairs(std::size_t count, std::uint64_t seed, std::size_t hosts = 4, std::size_t min_len = 20,
                             std::size_t max_len = 40);

}  // namespace oppi::train
