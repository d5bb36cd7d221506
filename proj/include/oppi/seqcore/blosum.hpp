#pragma once

#include <array>
#include <ostream>

#include "oppi/seqcore/protein.hpp"

namespace oppi::seq {

/// The standard BLOSUM62 similarity matrix, rows and columns in kBlosumOrder.
class Blosum62 {
 public:
  using Table = std::array<std::array<int, kNumAminoAcids>, kNumAminoAcids>;

  static const Table& table() noexcept;
  static int score(AminoAcid a, AminoAcid b) noexcept {
    return table()[a.index()][b.index()];
  }

  /// Tab-separated matrix with a header row, for auditing.
  static void print(std::ostream& out);
};

/// Positional distance: sum over i of B[s_i][s_i] - B[s_i][t_i].
/// Throws std::invalid_argument when lengths differ.
int blosum_distance(const ProteinSequence& s, const ProteinSequence& t);

/// Highest off-diagonal BLOSUM62 entry in a's row; ties go to the alphabetically first residue.
AminoAcid most_similar_residue(AminoAcid a) noexcept;

}  // namespace oppi::seq
