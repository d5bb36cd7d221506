#include "oppi/seqcore/protein.hpp"

#include <cctype>
#include <stdexcept>
#include <utility>

namespace oppi::seq {

namespace {

constexpr std::array<std::int8_t, 256> make_lookup() {
  std::array<std::int8_t, 256> table{};
  for (auto& v : table) v = -1;
  for (std::size_t i = 0; i < kBlosumOrder.size(); ++i) {
    const auto upper = static_cast<unsigned char>(kBlosumOrder[i]);
    table[upper] = static_cast<std::int8_t>(i);
    table[upper + ('a' - 'A')] = static_cast<std::int8_t>(i);
  }
  return table;
}

constexpr auto kLookup = make_lookup();

constexpr std::array<std::uint8_t, kNumAminoAcids> make_alpha_rank() {
  std::array<std::uint8_t, kNumAminoAcids> rank{};
  for (std::size_t i = 0; i < kBlosumOrder.size(); ++i) {
    for (std::size_t j = 0; j < kAlphabeticalOrder.size(); ++j) {
      if (kAlphabeticalOrder[j] == kBlosumOrder[i]) rank[i] = static_cast<std::uint8_t>(j);
    }
  }
  return rank;
}

constexpr auto kAlphaRank = make_alpha_rank();

std::string describe_symbol(char c) {
  if (std::isprint(static_cast<unsigned char>(c))) return std::string("'") + c + "'";
  return "byte " + std::to_string(static_cast<unsigned char>(c));
}

}  // namespace

std::optional<AminoAcid> AminoAcid::from_char(char c) noexcept {
  const auto idx = kLookup[static_cast<unsigned char>(c)];
  if (idx < 0) return std::nullopt;
  return AminoAcid(static_cast<std::uint8_t>(idx));
}

AminoAcid AminoAcid::parse(char c) {
  if (auto aa = from_char(c)) return *aa;
  throw std::invalid_argument("non-canonical residue symbol " + describe_symbol(c));
}

AminoAcid AminoAcid::from_index(std::size_t blosum_index) {
  if (blosum_index >= kNumAminoAcids) {
    throw std::out_of_range("amino acid index " + std::to_string(blosum_index) + " out of range");
  }
  return AminoAcid(static_cast<std::uint8_t>(blosum_index));
}

std::size_t AminoAcid::alpha_rank() const noexcept { return kAlphaRank[index_]; }

namespace {

template <std::size_t... I>
std::array<AminoAcid, kNumAminoAcids> make_alphabetical(std::index_sequence<I...>) {
  return {AminoAcid::parse(kAlphabeticalOrder[I])...};
}

}  // namespace

const std::array<AminoAcid, kNumAminoAcids>& alphabetical_residues() {
  static const auto residues = make_alphabetical(std::make_index_sequence<kNumAminoAcids>{});
  return residues;
}

ProteinSequence::ProteinSequence(std::vector<AminoAcid> residues, std::string id)
    : residues_(std::move(residues)), id_(std::move(id)) {
  if (residues_.empty()) {
    throw std::invalid_argument("protein sequence" + (id_.empty() ? "" : " '" + id_ + "'") +
                                " is empty");
  }
  if (residues_.size() > kMaxResidues) {
    throw std::invalid_argument("protein sequence" + (id_.empty() ? "" : " '" + id_ + "'") +
                                " has " + std::to_string(residues_.size()) +
                                " residues; at most " + std::to_string(kMaxResidues) +
                                " are supported");
  }
}

ProteinSequence ProteinSequence::from_string(std::string_view letters, std::string id) {
  std::vector<AminoAcid> residues;
  residues.reserve(letters.size());
  for (char c : letters) {
    auto aa = AminoAcid::from_char(c);
    if (!aa) {
      throw std::invalid_argument("non-canonical residue symbol " + describe_symbol(c) +
                                  (id.empty() ? "" : " in '" + id + "'"));
    }
    residues.push_back(*aa);
  }
  return ProteinSequence(std::move(residues), std::move(id));
}

ProteinSequence ProteinSequence::with_substitution(std::size_t pos, AminoAcid residue) const {
  if (pos >= residues_.size()) {
    throw std::out_of_range("substitution position " + std::to_string(pos) +
                            " beyond sequence length " + std::to_string(residues_.size()));
  }
  ProteinSequence out = *this;
  out.residues_[pos] = residue;
  return out;
}

std::string ProteinSequence::to_string() const {
  std::string out;
  out.reserve(residues_.size());
  for (auto aa : residues_) out.push_back(aa.code());
  return out;
}

}  // namespace oppi::seq
