#include "oppi/seqcore/fasta.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>

#include "oppi/error.hpp"

namespace oppi::seq {

namespace {

struct PendingRecord {
  std::string id;
  std::string letters;
  std::size_t header_line = 0;
};

ProteinSequence finish_record(PendingRecord& rec) {
  if (rec.letters.empty()) {
    throw DataError("FASTA record '" + rec.id + "' (line " + std::to_string(rec.header_line) +
                    ") has no residues");
  }
  for (char c : rec.letters) {
    if (!AminoAcid::from_char(c)) {
      std::string symbol = std::isprint(static_cast<unsigned char>(c))
                               ? std::string("'") + c + "'"
                               : "byte " + std::to_string(static_cast<unsigned char>(c));
      throw DataError("FASTA record '" + rec.id + "' contains non-canonical residue " + symbol);
    }
  }
  try {
    return ProteinSequence::from_string(rec.letters, rec.id);
  } catch (const std::invalid_argument& e) {
    throw DataError("FASTA record '" + rec.id + "': " + e.what());
  }
}

}  // namespace

std::vector<ProteinSequence> parse_fasta(std::istream& in) {
  std::vector<ProteinSequence> records;
  std::optional<PendingRecord> current;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '>') {
      if (current) records.push_back(finish_record(*current));
      PendingRecord next;
      std::size_t start = 1;
      while (start < line.size() && std::isspace(static_cast<unsigned char>(line[start]))) ++start;
      std::size_t stop = start;
      while (stop < line.size() && !std::isspace(static_cast<unsigned char>(line[stop]))) ++stop;
      next.id = line.substr(start, stop - start);
      next.header_line = line_no;
      current = std::move(next);
      continue;
    }
    if (!current) {
      throw DataError("FASTA line " + std::to_string(line_no) + " precedes the first '>' header");
    }
    for (char c : line) {
      if (std::isspace(static_cast<unsigned char>(c))) continue;
      current->letters.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
  }
  if (current) records.push_back(finish_record(*current));
  return records;
}

std::vector<ProteinSequence> parse_fasta(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_fasta(in);
}

std::vector<ProteinSequence> read_fasta_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open FASTA file '" + path.string() + "'");
  return parse_fasta(in);
}

void write_fasta(std::ostream& out, const std::vector<ProteinSequence>& records,
                 std::size_t line_width) {
  for (const auto& rec : records) {
    out << '>' << rec.id() << '\n';
    const std::string letters = rec.to_string();
    for (std::size_t i = 0; i < letters.size(); i += line_width) {
      out << letters.substr(i, line_width) << '\n';
    }
  }
}

}  // namespace oppi::seq
