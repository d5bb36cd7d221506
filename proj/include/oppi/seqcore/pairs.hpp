#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "oppi/seqcore/protein.hpp"

namespace oppi::seq {

/// One labelled (virus, host) interaction; ids refer into a SequenceTable.
struct PairRecord {
  std::string virus_id;
  std::string host_id;
  int label = 0;

  friend bool operator==(const PairRecord&, const PairRecord&) = default;
};

using SequenceTable = std::map<std::string, ProteinSequence, std::less<>>;

/// Whitespace-separated `virus_id host_id label` lines; blank lines and '#' comments are
/// skipped. Throws oppi::DataError naming the line on a bad field count or a label other
/// than 0/1.
std::vector<PairRecord> parse_pairs(std::istream& in);
std::vector<PairRecord> read_pairs_file(const std::filesystem::path& path);

/// Indexes records by id; throws oppi::DataError on a duplicate id.
SequenceTable make_table(const std::vector<ProteinSequence>& records);

/// Throws oppi::DataError naming the first id absent from `table`.
void check_resolvable(const std::vector<PairRecord>& pairs, const SequenceTable& table);

}  // namespace oppi::seq
