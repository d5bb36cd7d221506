#include "oppi/seqcore/tokens.hpp"

#include <stdexcept>
#include <string>

namespace oppi::seq {

std::optional<AminoAcid> TokenVocab::residue_of(TokenId id) noexcept {
  if (!is_residue(id)) return std::nullopt;
  return AminoAcid::from_index(static_cast<std::size_t>(id - kFirstResidue));
}

TokenSequence::TokenSequence(std::vector<TokenId> ids) : ids_(std::move(ids)) {
  const auto fail = [](const std::string& why) {
    throw std::invalid_argument("malformed token sequence: " + why);
  };
  if (ids_.size() < kReservedTokens) fail("shorter than CLS, SOS, EOS");
  if (ids_[0] != TokenVocab::kCls) fail("position 0 is not CLS");
  if (ids_[1] != TokenVocab::kSos) fail("position 1 is not SOS");
  std::size_t i = 2;
  while (i < ids_.size() &&
         (TokenVocab::is_residue(ids_[i]) || ids_[i] == TokenVocab::kMask)) {
    ++i;
  }
  if (i == ids_.size()) fail("missing EOS");
  if (ids_[i] != TokenVocab::kEos) {
    fail("unexpected token " + std::to_string(ids_[i]) + " at position " + std::to_string(i) +
         " before EOS");
  }
  if (i == 2) fail("no residues between SOS and EOS");
  content_len_ = i + 1;
  for (std::size_t j = content_len_; j < ids_.size(); ++j) {
    if (ids_[j] != TokenVocab::kPad) {
      fail("non-PAD token " + std::to_string(ids_[j]) + " at position " + std::to_string(j) +
           " after EOS");
    }
  }
}

void TokenSequence::set(std::size_t pos, TokenId id) {
  if (pos < 2 || pos + 1 >= content_len_) {
    throw std::out_of_range("position " + std::to_string(pos) + " is not a residue slot");
  }
  if (!TokenVocab::is_residue(id) && id != TokenVocab::kMask) {
    throw std::invalid_argument("token " + std::to_string(id) + " cannot occupy a residue slot");
  }
  ids_[pos] = id;
}

TokenSequence tokenize(const ProteinSequence& s, std::size_t max_len) {
  if (max_len < kReservedTokens || s.size() > max_len - kReservedTokens) {
    const std::size_t capacity = max_len < kReservedTokens ? 0 : max_len - kReservedTokens;
    throw std::invalid_argument("sequence" + (s.id().empty() ? "" : " '" + s.id() + "'") +
                                " has " + std::to_string(s.size()) +
                                " residues; max_len " + std::to_string(max_len) +
                                " holds at most " + std::to_string(capacity));
  }
  std::vector<TokenId> ids(max_len, TokenVocab::kPad);
  ids[0] = TokenVocab::kCls;
  ids[1] = TokenVocab::kSos;
  for (std::size_t i = 0; i < s.size(); ++i) ids[2 + i] = TokenVocab::residue_token(s[i]);
  ids[2 + s.size()] = TokenVocab::kEos;
  return TokenSequence(std::move(ids));
}

ProteinSequence detokenize(const TokenSequence& t) {
  std::vector<AminoAcid> residues;
  residues.reserve(t.residue_count());
  for (std::size_t i = 2; i + 1 < t.content_len(); ++i) {
    auto aa = TokenVocab::residue_of(t[i]);
    if (!aa) {
      throw std::invalid_argument("token " + std::to_string(t[i]) + " at position " +
                                  std::to_string(i) + " is not a residue");
    }
    residues.push_back(*aa);
  }
  return ProteinSequence(std::move(residues));
}

}  // namespace oppi::seq
