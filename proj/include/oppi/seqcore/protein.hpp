#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace oppi::seq {

inline constexpr std::size_t kNumAminoAcids = 20;

/// Residue letters in BLOSUM62 row order. AminoAcid::index() refers to this order.
inline constexpr std::string_view kBlosumOrder = "ARNDCQEGHILKMFPSTWYV";

/// Residue letters in alphabetical order; used wherever a tie-break is declared "alphabetical".
inline constexpr std::string_view kAlphabeticalOrder = "ACDEFGHIKLMNPQRSTVWY";

/// Longest sequence that still leaves room for CLS, SOS, EOS and one PAD in 1,300 tokens.
inline constexpr std::size_t kMaxResidues = 1296;

/// One of the 20 canonical amino acids.
class AminoAcid {
 public:
  /// Accepts upper- or lower-case letters; returns nullopt for anything non-canonical.
  static std::optional<AminoAcid> from_char(char c) noexcept;
  /// Throws std::invalid_argument for a non-canonical symbol.
  static AminoAcid parse(char c);
  static AminoAcid from_index(std::size_t blosum_index);

  char code() const noexcept { return kBlosumOrder[index_]; }
  std::size_t index() const noexcept { return index_; }
  /// Position in kAlphabeticalOrder.
  std::size_t alpha_rank() const noexcept;

  friend bool operator==(AminoAcid, AminoAcid) = default;

 private:
  explicit AminoAcid(std::uint8_t index) : index_(index) {}
  std::uint8_t index_;
};

/// All 20 residues in alphabetical order.
const std::array<AminoAcid, kNumAminoAcids>& alphabetical_residues();

class ProteinSequence {
 public:
  ProteinSequence(std::vector<AminoAcid> residues, std::string id = {});
  /// Parses letters; throws std::invalid_argument naming the offending symbol.
  static ProteinSequence from_string(std::string_view letters, std::string id = {});

  const std::vector<AminoAcid>& residues() const noexcept { return residues_; }
  std::size_t size() const noexcept { return residues_.size(); }
  AminoAcid operator[](std::size_t i) const { return residues_[i]; }
  const std::string& id() const noexcept { return id_; }
  void set_id(std::string id) { id_ = std::move(id); }

  /// Copy with residue `pos` replaced.
  ProteinSequence with_substitution(std::size_t pos, AminoAcid residue) const;

  std::string to_string() const;

  /// Equality compares residues only.
  friend bool operator==(const ProteinSequence& a, const ProteinSequence& b) {
    return a.residues_ == b.residues_;
  }

 private:
  std::vector<AminoAcid> residues_;
  std::string id_;
};

}  // namespace oppi::seq
