#include "oppi/seqcore/pairs.hpp"

#include <fstream>
#include <sstream>

#include "oppi/error.hpp"

namespace oppi::seq {

std::vector<PairRecord> parse_pairs(std::istream& in) {
  std::vector<PairRecord> out;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<std::string> parts;
    for (std::string f; fields >> f;) parts.push_back(std::move(f));
    if (parts.empty()) continue;
    if (parts.size() != 3) {
      throw DataError("pairs line " + std::to_string(line_no) + ": expected 'virus host label', got " +
                      std::to_string(parts.size()) + " fields");
    }
    if (parts[2] != "0" && parts[2] != "1") {
      throw DataError("pairs line " + std::to_string(line_no) + ": label must be 0 or 1, got '" + parts[2] + "'");
    }
    out.push_back({parts[0], parts[1], parts[2] == "1" ? 1 : 0});
  }
  return out;
}

std::vector<PairRecord> read_pairs_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open pairs file " + path.string());
  return parse_pairs(in);
}

SequenceTable make_table(const std::vector<ProteinSequence>& records) {
  SequenceTable table;
  for (const auto& r : records) {
    if (!table.emplace(r.id(), r).second) throw DataError("duplicate sequence id '" + r.id() + "'");
  }
  return table;
}

void check_resolvable(const std::vector<PairRecord>& pairs, const SequenceTable& table) {
  for (const auto& p : pairs) {
    for (const auto* id : {&p.virus_id, &p.host_id}) {
      if (!table.contains(*id)) throw DataError("unknown sequence id '" + *id + "' in pairs");
    }
  }
}

}  // namespace oppi::seq
