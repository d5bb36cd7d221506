#include "oppi/search/search.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>
#include <stdexcept>

#include "oppi/error.hpp"
#include "oppi/seqcore/blosum.hpp"

namespace oppi::search {

namespace {

// Sequences are materialised this many at a time so a 20L expansion of a long protein
// never sits in memory at once.
constexpr std::size_t kScoreChunk = 1024;

using DiffKey = std::vector<std::pair<std::size_t, std::size_t>>;  // (position, blosum index)

DiffKey key_of(const std::vector<MutationAction>& d) {
  DiffKey k;
  k.reserve(d.size());
  for (const auto& a : d) k.emplace_back(a.position, a.residue.index());
  return k;
}

void check_scores(std::span<const double> scores) {
  for (double s : scores) {
    if (!std::isfinite(s)) throw NumericError("scorer returned a non-finite score");
  }
}

/// Scores base.with_substitution(a) for every action, in chunks.
std::vector<double> score_actions(const seq::ProteinSequence& base, std::span<const MutationAction> actions,
                                  const Scorer& scorer) {
  std::vector<double> scores;
  scores.reserve(actions.size());
  std::vector<seq::ProteinSequence> chunk;
  for (std::size_t begin = 0; begin < actions.size(); begin += kScoreChunk) {
    chunk.clear();
    const std::size_t end = std::min(actions.size(), begin + kScoreChunk);
    for (std::size_t i = begin; i < end; ++i) chunk.push_back(base.with_substitution(actions[i].position, actions[i].residue));
    const auto part = scorer.score(chunk);
    scores.insert(scores.end(), part.begin(), part.end());
  }
  check_scores(scores);
  return scores;
}

std::vector<MutationAction> actions_for(std::span<const std::size_t> positions) {
  std::vector<MutationAction> out;
  out.reserve(positions.size() * seq::kNumAminoAcids);
  for (auto p : positions) {
    for (auto r : seq::alphabetical_residues()) out.push_back({p, r});
  }
  return out;
}

std::vector<std::size_t> all_positions(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  return p;
}

/// diff(s0, parent) with position p rewritten to r.
std::vector<MutationAction> child_diff(const seq::ProteinSequence& s0, const std::vector<MutationAction>& parent,
                                       const MutationAction& a) {
  std::vector<MutationAction> out;
  out.reserve(parent.size() + 1);
  bool placed = false;
  for (const auto& m : parent) {
    if (!placed && m.position >= a.position) {
      if (a.residue != s0[a.position]) out.push_back(a);
      placed = true;
      if (m.position == a.position) continue;
    }
    out.push_back(m);
  }
  if (!placed && a.residue != s0[a.position]) out.push_back(a);
  return out;
}

Candidate verified(Candidate c, const seq::ProteinSequence& s0, int cap) {
  c.blosum_dist = seq::blosum_distance(s0, c.sequence);
  if (c.blosum_dist > cap) {
    throw std::logic_error("search returned a variant at BLOSUM distance " + std::to_string(c.blosum_dist) +
                           " over the cap " + std::to_string(cap));
  }
  return c;
}

std::string fixed(double v, int digits) {
  char buf[64];
  auto end = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits).ptr;
  return std::string(buf, end);
}

}  // namespace

void SearchConfig::validate() const {
  if (blosum_cap < 0) throw ConfigError("blosum_cap must be non-negative");
  if (beamwidth == 0) throw ConfigError("beamwidth must be at least 1");
  if (max_iterations == 0) throw ConfigError("max_iterations must be at least 1");
}

std::vector<Variant> enumerate_variants(const seq::ProteinSequence& s, std::span<const std::size_t> active_positions) {
  std::vector<std::size_t> positions(active_positions.begin(), active_positions.end());
  std::sort(positions.begin(), positions.end());
  positions.erase(std::unique(positions.begin(), positions.end()), positions.end());
  if (!positions.empty() && positions.back() >= s.size()) {
    throw std::out_of_range("active position " + std::to_string(positions.back()) + " outside a sequence of length " +
                            std::to_string(s.size()));
  }
  std::vector<Variant> out;
  out.reserve(positions.size() * seq::kNumAminoAcids);
  for (const auto& a : actions_for(positions)) out.push_back({a, s.with_substitution(a.position, a.residue)});
  return out;
}

std::vector<MutationAction> diff(const seq::ProteinSequence& s0, const seq::ProteinSequence& s) {
  if (s0.size() != s.size()) throw std::invalid_argument("diff needs equal lengths");
  std::vector<MutationAction> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != s0[i]) out.push_back({i, s[i]});
  }
  return out;
}

bool ranks_before(double score_a, const std::vector<MutationAction>& diff_a, double score_b,
                  const std::vector<MutationAction>& diff_b) {
  if (score_a != score_b) return score_a > score_b;
  return std::lexicographical_compare(diff_a.begin(), diff_a.end(), diff_b.begin(), diff_b.end(),
                                      [](const MutationAction& x, const MutationAction& y) {
                                        if (x.position != y.position) return x.position < y.position;
                                        return x.residue.alpha_rank() < y.residue.alpha_rank();
                                      });
}

Candidate greedy_search(const seq::ProteinSequence& s0, const Scorer& scorer, const SearchConfig& config,
                        SearchStats* stats) {
  config.validate();
  SearchStats local;
  SearchStats& st = stats ? *stats : local;
  st = SearchStats{};

  Candidate current{s0, scorer.score_one(s0), 0, {}};
  std::vector<std::size_t> active = all_positions(s0.size());
  st.stop_reason = "max_iterations";
  for (std::size_t it = 1; it <= config.max_iterations; ++it) {
    if (active.empty()) {
      st.stop_reason = "no active positions";
      break;
    }
    st.iterations = it;
    const auto actions = actions_for(active);
    st.batch_sizes.push_back(actions.size());
    const auto scores = score_actions(current.sequence, actions, scorer);

    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
      if (scores[i] > scores[best]) best = i;
    }
    const auto& a = actions[best];
    auto next = current.sequence.with_substitution(a.position, a.residue);
    const int dist = seq::blosum_distance(s0, next);
    if (dist > config.blosum_cap) {
      st.stop_reason = "blosum cap";
      break;
    }
    current.steps.push_back({it, a, current.sequence[a.position], scores[best], dist});
    current.sequence = std::move(next);
    current.score = scores[best];
    current.blosum_dist = dist;
    active.erase(std::find(active.begin(), active.end(), a.position));
  }
  return verified(std::move(current), s0, config.blosum_cap);
}

std::vector<Candidate> beam_search(const seq::ProteinSequence& s0, const Scorer& scorer, const SearchConfig& config,
                                   SearchStats* stats) {
  config.validate();
  SearchStats local;
  SearchStats& st = stats ? *stats : local;
  st = SearchStats{};

  struct Member {
    Candidate candidate;
    std::vector<MutationAction> d;  // canonical diff from s0
  };
  std::vector<Member> beam = {{Candidate{s0, scorer.score_one(s0), 0, {}}, {}}};
  std::vector<Member> last_feasible = beam;
  const auto positions = all_positions(s0.size());
  const auto actions = actions_for(positions);

  std::size_t eta = 0;
  st.stop_reason = "max_iterations";
  for (std::size_t it = 1; it <= config.max_iterations; ++it) {
    st.iterations = it;
    struct Entry {
      std::size_t parent;
      MutationAction action;
      std::vector<MutationAction> d;
      double score = 0;
    };
    std::vector<Entry> pool;
    std::set<DiffKey> seen;
    std::size_t enumerated = 0;
    for (std::size_t m = 0; m < beam.size(); ++m) {
      std::vector<MutationAction> fresh;
      std::vector<std::vector<MutationAction>> fresh_diffs;
      for (const auto& a : actions) {
        auto d = child_diff(s0, beam[m].d, a);
        if (seen.insert(key_of(d)).second) {
          fresh.push_back(a);
          fresh_diffs.push_back(std::move(d));
        }
      }
      enumerated += actions.size();
      const auto scores = score_actions(beam[m].candidate.sequence, fresh, scorer);
      for (std::size_t i = 0; i < fresh.size(); ++i) pool.push_back({m, fresh[i], std::move(fresh_diffs[i]), scores[i]});
    }
    st.batch_sizes.push_back(enumerated);

    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t keep = std::min(config.beamwidth, pool.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                      [&](std::size_t x, std::size_t y) {
                        return ranks_before(pool[x].score, pool[x].d, pool[y].score, pool[y].d);
                      });

    std::vector<Member> next;
    for (std::size_t r = 0; r < keep; ++r) {
      auto& e = pool[order[r]];
      const auto& parent = beam[e.parent].candidate;
      auto sequence = parent.sequence.with_substitution(e.action.position, e.action.residue);
      const int dist = seq::blosum_distance(s0, sequence);
      if (dist > config.blosum_cap) continue;
      Candidate c{std::move(sequence), e.score, dist, parent.steps};
      c.steps.push_back({it, e.action, parent.sequence[e.action.position], e.score, dist});
      next.push_back({std::move(c), std::move(e.d)});
    }
    eta = config.beamwidth - next.size();
    beam = std::move(next);
    if (!beam.empty()) last_feasible = beam;
    if (eta >= config.beamwidth) {
      st.stop_reason = "beam left the BLOSUM budget";
      break;
    }
  }

  std::vector<Candidate> out;
  for (auto& m : last_feasible) out.push_back(verified(std::move(m.candidate), s0, config.blosum_cap));
  return out;
}

std::vector<Candidate> exhaustive_top(const seq::ProteinSequence& s0, const Scorer& scorer, const SearchConfig& config,
                                      std::size_t max_mutations, std::size_t k) {
  config.validate();
  const std::size_t n = s0.size();
  max_mutations = std::min(max_mutations, n);

  // sum_j C(n, j) 19^j, stopping once past the limit.
  std::uint64_t total = 0, term = 1;
  for (std::size_t j = 0; j <= max_mutations; ++j) {
    if (j > 0) {
      const double next = static_cast<double>(term) * static_cast<double>(n - j + 1) / static_cast<double>(j) * 19.0;
      if (next > static_cast<double>(kExhaustiveLimit)) {
        total = kExhaustiveLimit + 1;
        break;
      }
      term = term * (n - j + 1) / j * 19;
    }
    total += term;
    if (total > kExhaustiveLimit) break;
  }
  if (total > kExhaustiveLimit) {
    throw std::length_error("exhaustive search over " + std::to_string(max_mutations) + " mutations of a length-" +
                            std::to_string(n) + " sequence exceeds " + std::to_string(kExhaustiveLimit) + " sequences");
  }

  std::vector<std::vector<MutationAction>> feasible;
  std::vector<MutationAction> current;
  const auto walk = [&](auto&& self, std::size_t from, int dist) -> void {
    feasible.push_back(current);
    if (current.size() == max_mutations) return;
    for (std::size_t p = from; p < n; ++p) {
      for (auto r : seq::alphabetical_residues()) {
        if (r == s0[p]) continue;
        const int d = dist + seq::Blosum62::score(s0[p], s0[p]) - seq::Blosum62::score(s0[p], r);
        if (d > config.blosum_cap) continue;  // off-diagonal costs are positive, so no superset fits either
        current.push_back({p, r});
        self(self, p + 1, d);
        current.pop_back();
      }
    }
  };
  walk(walk, 0, 0);

  std::vector<double> scores;
  scores.reserve(feasible.size());
  std::vector<seq::ProteinSequence> chunk;
  const auto apply = [&](const std::vector<MutationAction>& d) {
    auto residues = s0.residues();
    for (const auto& a : d) residues[a.position] = a.residue;
    return seq::ProteinSequence(std::move(residues), s0.id());
  };
  for (std::size_t begin = 0; begin < feasible.size(); begin += kScoreChunk) {
    chunk.clear();
    for (std::size_t i = begin; i < std::min(feasible.size(), begin + kScoreChunk); ++i) chunk.push_back(apply(feasible[i]));
    const auto part = scorer.score(chunk);
    scores.insert(scores.end(), part.begin(), part.end());
  }
  check_scores(scores);

  std::vector<std::size_t> order(feasible.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t keep = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                    [&](std::size_t x, std::size_t y) { return ranks_before(scores[x], feasible[x], scores[y], feasible[y]); });

  std::vector<Candidate> out;
  for (std::size_t r = 0; r < keep; ++r) {
    const auto& d = feasible[order[r]];
    Candidate c{apply(d), scores[order[r]], 0, {}};
    auto partial = s0;
    for (std::size_t j = 0; j < d.size(); ++j) {
      const auto from = partial[d[j].position];
      partial = partial.with_substitution(d[j].position, d[j].residue);
      c.steps.push_back({j + 1, d[j], from, c.score, seq::blosum_distance(s0, partial)});
    }
    out.push_back(verified(std::move(c), s0, config.blosum_cap));
  }
  return out;
}

Candidate exhaustive_best(const seq::ProteinSequence& s0, const Scorer& scorer, const SearchConfig& config,
                          std::size_t max_mutations) {
  return exhaustive_top(s0, scorer, config, max_mutations, 1).front();
}

std::string mutation_label(seq::AminoAcid from, const MutationAction& action) {
  return std::string(1, from.code()) + std::to_string(action.position + 1) + action.residue.code();
}

void write_report(std::ostream& out, std::span<const Candidate> candidates) {
  out << "# iteration\tposition\tfrom\tto\tscore\tblosum_dist\n";
  for (std::size_t r = 0; r < candidates.size(); ++r) {
    if (candidates.size() > 1) out << "# candidate " << r + 1 << "\n";
    for (const auto& s : candidates[r].steps) {
      out << s.iteration << '\t' << s.action.position << '\t' << s.from.code() << '\t' << s.action.residue.code() << '\t'
          << fixed(s.score, 6) << '\t' << s.blosum_dist << '\n';
    }
  }
}

void write_variants_fasta(std::ostream& out, const seq::ProteinSequence& s0, std::span<const Candidate> candidates,
                          const std::string& prefix) {
  for (std::size_t r = 0; r < candidates.size(); ++r) {
    const auto& c = candidates[r];
    out << '>' << prefix << '_' << r + 1 << " score=" << fixed(c.score, 6) << " blosum_dist=" << c.blosum_dist
        << " mutations=";
    const auto d = diff(s0, c.sequence);
    if (d.empty()) out << "none";
    for (std::size_t i = 0; i < d.size(); ++i) out << (i ? "," : "") << mutation_label(s0[d[i].position], d[i]);
    out << '\n';
    const auto text = c.sequence.to_string();
    for (std::size_t i = 0; i < text.size(); i += 60) out << text.substr(i, 60) << '\n';
  }
}

}  // namespace oppi::search
