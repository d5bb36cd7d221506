#include "oppi/train/synthetic.hpp"

#include <stdexcept>
#include <string>
#include <string_view>

#include "oppi/num/rng.hpp"

namespace oppi::train {

namespace {

constexpr std::string_view kBinderPool = "KRHW";
constexpr std::string_view kDecoyPool = "DESG";
constexpr std::string_view kHostPool = "LIVFAMC";
constexpr double kPoolShare = 0.6;

seq::ProteinSequence draw(num::CounterRng& rng, std::string_view pool, std::size_t min_len, std::size_t max_len,
                          std::string id) {
  const std::size_t len = min_len + rng.below(max_len - min_len + 1);
  std::string s(len, 'A');
  for (auto& c : s) {
    c = rng.uniform() < kPoolShare ? pool[rng.below(pool.size())] : seq::kBlosumOrder[rng.below(seq::kNumAminoAcids)];
  }
  return seq::ProteinSequence::from_string(s, std::move(id));
}

void check_lengths(std::size_t min_len, std::size_t max_len) {
  if (min_len == 0 || min_len > max_len) throw std::invalid_argument("synthetic lengths need 0 < min_len <= max_len");
}

}  // namespace

std::vector<seq::ProteinSequence> synthetic_corpus(std::size_t count, std::uint64_t seed, std::size_t min_len,
                                                   std::size_t max_len) {
  check_lengths(min_len, max_len);
  num::CounterRng rng(seed, 0x636f72707573ULL);
  const std::string_view pools[] = {kBinderPool, kDecoyPool, kHostPool};
  std::vector<seq::ProteinSequence> out;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(draw(rng, pools[i % 3], min_len, max_len, "seq" + std::to_string(i)));
  }
  return out;
}

SyntheticPpi synthetic_pairs(std::size_t count, std::uint64_t seed, std::size_t hosts, std::size_t min_len,
                             std::size_t max_len) {
  check_lengths(min_len, max_len);
  if (hosts == 0) throw std::invalid_argument("synthetic_pairs needs at least one host");
  num::CounterRng rng(seed, 0x7061697273ULL);
  SyntheticPpi out;
  for (std::size_t h = 0; h < hosts; ++h) {
    out.sequences.push_back(draw(rng, kHostPool, min_len, max_len, "host" + std::to_string(h)));
  }
  for (std::size_t i = 0; i < count; ++i) {
    const int label = i % 2 == 0 ? 1 : 0;
    const std::string id = "virus" + std::to_string(i);
    out.sequences.push_back(draw(rng, label ? kBinderPool : kDecoyPool, min_len, max_len, id));
    out.pairs.push_back({id, "host" + std::to_string(rng.below(hosts)), label});
  }
  return out;
}

}  // namespace oppi::train
