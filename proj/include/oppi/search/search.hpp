#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "oppi/search/scorer.hpp"
#include "oppi/seqcore/protein.hpp"

namespace oppi::search {

/// Substitute `residue` at 0-based `position`; the incumbent residue is a valid (identity) action.
struct MutationAction {
  std::size_t position = 0;
  seq::AminoAcid residue = seq::AminoAcid::parse('A');

  friend bool operator==(const MutationAction&, const MutationAction&) = default;
};

struct SearchConfig {
  int blosum_cap = 40;
  std::size_t beamwidth = 10;
  std::size_t max_iterations = 100;  // safety bound on either search loop

  /// Throws oppi::ConfigError on a negative cap, zero beamwidth or zero iterations.
  void validate() const;
};

/// One accepted move in a candidate's lineage.
struct SearchStep {
  std::size_t iteration = 0;  // 1-based
  MutationAction action;
  seq::AminoAcid from = seq::AminoAcid::parse('A');
  double score = 0;     // of the sequence after this step
  int blosum_dist = 0;  // of the sequence after this step, from s0
};

struct Candidate {
  seq::ProteinSequence sequence;
  double score = 0;
  int blosum_dist = 0;  // recomputed from s0, never accumulated
  std::vector<SearchStep> steps;
};

struct SearchStats {
  std::size_t iterations = 0;
  std::vector<std::size_t> batch_sizes;  // variants enumerated per iteration
  std::string stop_reason;
};

struct Variant {
  MutationAction action;
  seq::ProteinSequence sequence;
};

/// All 20 substitutions at each active position, positions ascending and residues in
/// alphabetical order. Duplicate positions are ignored; out-of-range ones throw
/// std::out_of_range.
std::vector<Variant> enumerate_variants(const seq::ProteinSequence& s, std::span<const std::size_t> active_positions);

/// Canonical differences from s0 as (position, residue), positions ascending.
std::vector<MutationAction> diff(const seq::ProteinSequence& s0, const seq::ProteinSequence& s);

/// Total order used by beam and exhaustive search: higher score first, then the diff list
/// against s0 compared lexicographically by (position, alphabetical residue); fewer
/// differences win a common-prefix tie.
bool ranks_before(double score_a, const std::vector<MutationAction>& diff_a, double score_b,
                  const std::vector<MutationAction>& diff_b);

/// Greedy single-substitution ascent. Each iteration scores every variant over the active
/// positions and takes the best (ties: lowest position, then alphabetical residue). The
/// best is committed and its position frozen if it stays within the BLOSUM cap of s0;
/// otherwise the search stops. Also stops when no position is active or after
/// max_iterations. Returns the last committed sequence.
Candidate greedy_search(const seq::ProteinSequence& s0, const Scorer& scorer, const SearchConfig& config,
                        SearchStats* stats = nullptr);

/// Beam search without position freezing. Each iteration expands every member by all 20L
/// substitutions, deduplicates, keeps the top beamwidth, then drops members over the cap;
/// eta = beamwidth - |S|. Runs while eta < beamwidth (and under max_iterations) and
/// returns the last non-empty feasible set, best first.
std::vector<Candidate> beam_search(const seq::ProteinSequence& s0, const Scorer& scorer, const SearchConfig& config,
                                   SearchStats* stats = nullptr);

/// Upper bound on sequences exhaustive search will score.
inline constexpr std::uint64_t kExhaustiveLimit = 2'000'000;

/// Every sequence reachable from s0 by at most `max_mutations` non-identity substitutions
/// and within the cap, ranked by ranks_before; the top `k` are returned. Throws
/// std::length_error when the space exceeds kExhaustiveLimit.
std::vector<Candidate> exhaustive_top(const seq::ProteinSequence& s0, const Scorer& scorer, const SearchConfig& config,
                                      std::size_t max_mutations, std::size_t k);

Candidate exhaustive_best(const seq::ProteinSequence& s0, const Scorer& scorer, const SearchConfig& config,
                          std::size_t max_mutations);

/// One `iteration<TAB>position<TAB>from<TAB>to<TAB>score<TAB>blosum_dist` line per step
/// (position 0-based). With several candidates each block is headed by `# candidate <rank>`.
void write_report(std::ostream& out, std::span<const Candidate> candidates);

/// FASTA records `<prefix>_<rank> score=<s> blosum_dist=<d> mutations=<N501Y,...>`, the
/// mutation list being the net change from s0.
void write_variants_fasta(std::ostream& out, const seq::ProteinSequence& s0, std::span<const Candidate> candidates,
                          const std::string& prefix);

/// Conventional notation: from residue, 1-based position, to residue (e.g. N501Y).
std::string mutation_label(seq::AminoAcid from, const MutationAction& action);

}  // namespace oppi::search
