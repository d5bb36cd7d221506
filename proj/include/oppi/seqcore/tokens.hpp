#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "oppi/seqcore/protein.hpp"

namespace oppi::seq {

using TokenId = std::int32_t;

/// Character-level vocabulary: five special tokens followed by the 20 residues in
/// kBlosumOrder. PAD is 0.
struct TokenVocab {
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kCls = 1;
  static constexpr TokenId kSos = 2;
  static constexpr TokenId kEos = 3;
  static constexpr TokenId kMask = 4;
  static constexpr TokenId kFirstResidue = 5;
  static constexpr std::size_t kSize = kFirstResidue + kNumAminoAcids;

  static TokenId residue_token(AminoAcid aa) noexcept {
    return kFirstResidue + static_cast<TokenId>(aa.index());
  }
  static bool is_residue(TokenId id) noexcept {
    return id >= kFirstResidue && id < static_cast<TokenId>(kSize);
  }
  /// nullopt for special or out-of-range ids.
  static std::optional<AminoAcid> residue_of(TokenId id) noexcept;
};

inline constexpr std::size_t kDefaultMaxLen = 1300;
/// CLS, SOS and EOS.
inline constexpr std::size_t kReservedTokens = 3;

/// Fixed-length encoding laid out as [CLS, SOS, residues..., EOS, PAD...].
class TokenSequence {
 public:
  /// Validates the layout; throws std::invalid_argument when malformed.
  explicit TokenSequence(std::vector<TokenId> ids);

  std::span<const TokenId> ids() const noexcept { return ids_; }
  std::size_t max_len() const noexcept { return ids_.size(); }
  /// Count of non-PAD tokens (residues + 3).
  std::size_t content_len() const noexcept { return content_len_; }
  std::size_t residue_count() const noexcept { return content_len_ - kReservedTokens; }
  TokenId operator[](std::size_t i) const { return ids_[i]; }

  /// Replaces a residue slot (1-based after SOS); used by masking. Throws if `pos`
  /// is not a residue slot or `id` is PAD/CLS/SOS/EOS.
  void set(std::size_t pos, TokenId id);

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;

 private:
  std::vector<TokenId> ids_;
  std::size_t content_len_ = 0;
};

/// Throws std::invalid_argument when 3 + length exceeds max_len.
TokenSequence tokenize(const ProteinSequence& s, std::size_t max_len = kDefaultMaxLen);

/// Residues between SOS and EOS. MASK tokens cannot be detokenized.
ProteinSequence detokenize(const TokenSequence& t);

}  // namespace oppi::seq
