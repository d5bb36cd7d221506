#pragma once

#include <filesystem>
#include <istream>
#include <string_view>
#include <vector>

#include "oppi/seqcore/protein.hpp"

namespace oppi::seq {

/// Parses FASTA records. Each record's id is its header up to the first whitespace;
/// sequence lines are concatenated and upper-cased. Throws oppi::DataError on a
/// non-canonical residue (naming record and symbol), an empty record, or text before
/// the first header.
std::vector<ProteinSequence> parse_fasta(std::istream& in);
std::vector<ProteinSequence> parse_fasta(std::string_view text);
std::vector<ProteinSequence> read_fasta_file(const std::filesystem::path& path);

/// Writes records wrapped at `line_width` residues.
void write_fasta(std::ostream& out, const std::vector<ProteinSequence>& records,
                 std::size_t line_width = 60);

}  // namespace oppi::seq
