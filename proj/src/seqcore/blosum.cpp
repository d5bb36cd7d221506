#include "oppi/seqcore/blosum.hpp"

#include <stdexcept>
#include <string>

namespace oppi::seq {

namespace {

// clang-format off
constexpr Blosum62::Table kBlosum62 = {{
    //A   R   N   D   C   Q   E   G   H   I   L   K   M   F   P   S   T   W   Y   V
    { 4, -1, -2, -2,  0, -1, -1,  0, -2, -1, -1, -1, -1, -2, -1,  1,  0, -3, -2,  0},  // A
    {-1,  5,  0, -2, -3,  1,  0, -2,  0, -3, -2,  2, -1, -3, -2, -1, -1, -3, -2, -3},  // R
    {-2,  0,  6,  1, -3,  0,  0,  0,  1, -3, -3,  0, -2, -3, -2,  1,  0, -4, -2, -3},  // N
    {-2, -2,  1,  6, -3,  0,  2, -1, -1, -3, -4, -1, -3, -3, -1,  0, -1, -4, -3, -3},  // D
    { 0, -3, -3, -3,  9, -3, -4, -3, -3, -1, -1, -3, -1, -2, -3, -1, -1, -2, -2, -1},  // C
    {-1,  1,  0,  0, -3,  5,  2, -2,  0, -3, -2,  1,  0, -3, -1,  0, -1, -2, -1, -2},  // Q
    {-1,  0,  0,  2, -4,  2,  5, -2,  0, -3, -3,  1, -2, -3, -1,  0, -1, -3, -2, -2},  // E
    { 0, -2,  0, -1, -3, -2, -2,  6, -2, -4, -4, -2, -3, -3, -2,  0, -2, -2, -3, -3},  // G
    {-2,  0,  1, -1, -3,  0,  0, -2,  8, -3, -3, -1, -2, -1, -2, -1, -2, -2,  2, -3},  // H
    {-1, -3, -3, -3, -1, -3, -3, -4, -3,  4,  2, -3,  1,  0, -3, -2, -1, -3, -1,  3},  // I
    {-1, -2, -3, -4, -1, -2, -3, -4, -3,  2,  4, -2,  2,  0, -3, -2, -1, -2, -1,  1},  // L
    {-1,  2,  0, -1, -3,  1,  1, -2, -1, -3, -2,  5, -1, -3, -1,  0, -1, -3, -2, -2},  // K
    {-1, -1, -2, -3, -1,  0, -2, -3, -2,  1,  2, -1,  5,  0, -2, -1, -1, -1, -1,  1},  // M
    {-2, -3, -3, -3, -2, -3, -3, -3, -1,  0,  0, -3,  0,  6, -4, -2, -2,  1,  3, -1},  // F
    {-1, -2, -2, -1, -3, -1, -1, -2, -2, -3, -3, -1, -2, -4,  7, -1, -1, -4, -3, -2},  // P
    { 1, -1,  1,  0, -1,  0,  0,  0, -1, -2, -2,  0, -1, -2, -1,  4,  1, -3, -2, -2},  // S
    { 0, -1,  0, -1, -1, -1, -1, -2, -2, -1, -1, -1, -1, -2, -1,  1,  5, -2, -2,  0},  // T
    {-3, -3, -4, -4, -2, -2, -3, -2, -2, -3, -2, -3, -1,  1, -4, -3, -2, 11,  2, -3},  // W
    {-2, -2, -2, -3, -2, -1, -2, -3,  2, -1, -1, -2, -1,  3, -3, -2, -2,  2,  7, -1},  // Y
    { 0, -3, -3, -3, -1, -2, -2, -3, -3,  3,  1, -2,  1, -1, -2, -2,  0, -3, -1,  4},  // V
}};
// clang-format on

std::array<std::uint8_t, kNumAminoAcids> compute_most_similar() {
  std::array<std::uint8_t, kNumAminoAcids> out{};
  const auto& alpha = alphabetical_residues();
  for (std::size_t a = 0; a < kNumAminoAcids; ++a) {
    int best_score = 0;
    std::size_t best = kNumAminoAcids;
    // Scanning in alphabetical order with strict '>' keeps the first of any tie.
    for (const auto& candidate : alpha) {
      const std::size_t b = candidate.index();
      if (b == a) continue;
      if (best == kNumAminoAcids || kBlosum62[a][b] > best_score) {
        best_score = kBlosum62[a][b];
        best = b;
      }
    }
    out[a] = static_cast<std::uint8_t>(best);
  }
  return out;
}

}  // namespace

const Blosum62::Table& Blosum62::table() noexcept { return kBlosum62; }

void Blosum62::print(std::ostream& out) {
  for (char c : kBlosumOrder) out << '\t' << c;
  out << '\n';
  for (std::size_t i = 0; i < kNumAminoAcids; ++i) {
    out << kBlosumOrder[i];
    for (std::size_t j = 0; j < kNumAminoAcids; ++j) out << '\t' << kBlosum62[i][j];
    out << '\n';
  }
}

int blosum_distance(const ProteinSequence& s, const ProteinSequence& t) {
  if (s.size() != t.size()) {
    throw std::invalid_argument("blosum_distance needs equal lengths, got " +
                                std::to_string(s.size()) + " and " + std::to_string(t.size()));
  }
  int total = 0;
  const auto& a = s.residues();
  const auto& b = t.residues();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& row = kBlosum62[a[i].index()];
    total += row[a[i].index()] - row[b[i].index()];
  }
  return total;
}

AminoAcid most_similar_residue(AminoAcid a) noexcept {
  static const auto table = compute_most_similar();
  return AminoAcid::from_index(table[a.index()]);
}

}  // namespace oppi::seq
