#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pllbeam/sequence.hpp"

namespace pllbeam::io {

struct FastaRecord {
  std::string id;
  std::string description;
  std::string sequence;
};

std::vector<FastaRecord> read_fasta(std::istream& in);
std::vector<FastaRecord> read_fasta_file(const std::filesystem::path& path);
void write_fasta(std::ostream& out, const std::vector<FastaRecord>& records);

/// Value of a `key=value` token in a FASTA description, if present.
std::optional<std::string> description_field(const std::string& description, const std::string& key);

/// One 1-based position or inclusive range (`10-15`) per line; `#` starts a comment.
PositionMask read_mask(std::istream& in);
PositionMask read_mask_file(const std::filesystem::path& path);

/// A candidate plus the free-form columns that travel with it between subcommands.
struct CandidateRecord {
  std::string id;
  CandidateSequence candidate;
  std::map<std::string, std::string> fields;
};

struct CandidateTable {
  std::vector<std::string> extra_columns;  // in file order, excluding the four key columns
  std::vector<CandidateRecord> rows;
};

/// Seeds become unedited candidates whose seed_id is the record id.
std::vector<CandidateRecord> seeds_from_fasta(const std::vector<FastaRecord>& records);

/// Candidates from FASTA. Edits come from `edits=` in the description when present;
/// otherwise they are derived against the `seed=` record in `seeds` (or the record is
/// treated as an unedited seed when no seed is known).
std::vector<CandidateRecord> candidates_from_fasta(const std::vector<FastaRecord>& records,
                                                   const std::vector<CandidateRecord>& seeds);
std::vector<FastaRecord> candidates_to_fasta(const std::vector<CandidateRecord>& rows);

/// TSV with key columns id, seed_id, sequence, edits followed by any extra columns.
CandidateTable read_candidate_tsv(std::istream& in);
CandidateTable read_candidate_tsv_file(const std::filesystem::path& path);
void write_candidate_tsv(std::ostream& out, const CandidateTable& table);

/// Reads either format, chosen by extension (.fa/.fasta/.faa vs anything else = TSV).
CandidateTable read_candidates_file(const std::filesystem::path& path,
                                    const std::vector<CandidateRecord>& seeds);

/// Round-trip decimal for doubles; "NA" for NaN.
std::string format_double(double value);
/// Parses a double; "NA" or empty maps to NaN.
double parse_double(const std::string& text);

std::vector<std::string> split(const std::string& line, char sep);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace pllbeam::io
