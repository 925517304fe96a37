#include "pllbeam/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "pllbeam/error.hpp"

namespace pllbeam::io {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

std::size_t parse_position(const std::string& text, int line_no) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value == 0) {
    throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": bad position '" + text + "'");
  }
  return value;
}

const std::array<std::string, 4> kKeyColumns = {"id", "seed_id", "sequence", "edits"};

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto end = line.find(sep, start);
    out.push_back(line.substr(start, end == std::string::npos ? std::string::npos : end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "NA";
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

double parse_double(const std::string& text) {
  if (text.empty() || text == "NA" || text == "nan") return std::numeric_limits<double>::quiet_NaN();
  double value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    if (text == "inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    throw Error(ErrorCode::Parse, "not a number: '" + text + "'");
  }
  return value;
}

std::vector<FastaRecord> read_fasta(std::istream& in) {
  std::vector<FastaRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == ';') continue;
    if (line[0] == '>') {
      FastaRecord rec;
      const std::string header = line.substr(1);
      const auto space = header.find_first_of(" \t");
      rec.id = header.substr(0, space);
      if (space != std::string::npos) rec.description = trim(header.substr(space + 1));
      if (rec.id.empty()) throw Error(ErrorCode::Parse, "FASTA record without id");
      records.push_back(std::move(rec));
      continue;
    }
    if (records.empty()) throw Error(ErrorCode::Parse, "sequence data before first FASTA header");
    for (char c : line) {
      if (c != ' ' && c != '\t') records.back().sequence += c;
    }
  }
  return records;
}

std::vector<FastaRecord> read_fasta_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_fasta(in);
}

void write_fasta(std::ostream& out, const std::vector<FastaRecord>& records) {
  for (const auto& rec : records) {
    out << '>' << rec.id;
    if (!rec.description.empty()) out << ' ' << rec.description;
    out << '\n' << rec.sequence << '\n';
  }
}

std::optional<std::string> description_field(const std::string& description, const std::string& key) {
  std::istringstream ss(description);
  std::string token;
  const std::string prefix = key + "=";
  while (ss >> token) {
    if (token.rfind(prefix, 0) == 0) return token.substr(prefix.size());
  }
  return std::nullopt;
}

PositionMask read_mask(std::istream& in) {
  std::set<Position> positions;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto dash = line.find('-');
    if (dash == std::string::npos) {
      positions.insert(parse_position(line, line_no) - 1);
      continue;
    }
    const std::size_t lo = parse_position(trim(line.substr(0, dash)), line_no);
    const std::size_t hi = parse_position(trim(line.substr(dash + 1)), line_no);
    if (hi < lo) throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": empty range");
    for (std::size_t p = lo; p <= hi; ++p) positions.insert(p - 1);
  }
  return PositionMask(std::move(positions));
}

PositionMask read_mask_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_mask(in);
}

std::vector<CandidateRecord> seeds_from_fasta(const std::vector<FastaRecord>& records) {
  std::vector<CandidateRecord> seeds;
  seeds.reserve(records.size());
  for (const auto& rec : records) {
    seeds.push_back({rec.id, CandidateSequence(rec.id, ProteinSequence(rec.sequence)), {}});
  }
  return seeds;
}

std::vector<CandidateRecord> candidates_from_fasta(const std::vector<FastaRecord>& records,
                                                   const std::vector<CandidateRecord>& seeds) {
  std::unordered_map<std::string, const CandidateRecord*> by_id;
  for (const auto& s : seeds) by_id.emplace(s.id, &s);
  std::vector<CandidateRecord> out;
  for (const auto& rec : records) {
    ProteinSequence seq(rec.sequence);
    const auto seed_field = description_field(rec.description, "seed");
    const auto edits_field = description_field(rec.description, "edits");
    const std::string seed_id = seed_field.value_or(rec.id);
    if (edits_field) {
      out.push_back({rec.id, CandidateSequence::from_edits(seed_id, seq, parse_edits(*edits_field)), {}});
      continue;
    }
    auto it = by_id.find(seed_id);
    if (it != by_id.end()) {
      out.push_back({rec.id,
                     CandidateSequence::from_pair(seed_id, it->second->candidate.sequence(), seq),
                     {}});
    } else {
      out.push_back({rec.id, CandidateSequence(seed_id, seq), {}});
    }
  }
  return out;
}

std::vector<FastaRecord> candidates_to_fasta(const std::vector<CandidateRecord>& rows) {
  std::vector<FastaRecord> records;
  records.reserve(rows.size());
  for (const auto& row : rows) {
    FastaRecord rec;
    rec.id = row.id;
    rec.sequence = row.candidate.sequence().str();
    rec.description = "seed=" + row.candidate.seed_id();
    if (row.candidate.edit_count() > 0) rec.description += " edits=" + format_edits(row.candidate.edits());
    records.push_back(std::move(rec));
  }
  return records;
}

CandidateTable read_candidate_tsv(std::istream& in) {
  CandidateTable table;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Parse, "empty candidate TSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line, '\t');
  std::array<int, 4> key_index{-1, -1, -1, -1};
  std::vector<std::pair<std::size_t, std::string>> extras;
  for (std::size_t c = 0; c < header.size(); ++c) {
    bool is_key = false;
    for (std::size_t k = 0; k < kKeyColumns.size(); ++k) {
      if (header[c] == kKeyColumns[k]) {
        key_index[k] = static_cast<int>(c);
        is_key = true;
      }
    }
    if (!is_key) {
      extras.emplace_back(c, header[c]);
      table.extra_columns.push_back(header[c]);
    }
  }
  for (std::size_t k = 0; k < 3; ++k) {
    if (key_index[k] < 0) throw Error(ErrorCode::Parse, "candidate TSV lacks column '" + kKeyColumns[k] + "'");
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line, '\t');
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": expected " +
                                        std::to_string(header.size()) + " columns");
    }
    CandidateRecord rec;
    rec.id = cells[key_index[0]];
    ProteinSequence seq(cells[key_index[2]]);
    const std::string edits = key_index[3] >= 0 ? cells[key_index[3]] : std::string("-");
    rec.candidate = CandidateSequence::from_edits(cells[key_index[1]], std::move(seq), parse_edits(edits));
    for (const auto& [c, name] : extras) rec.fields[name] = cells[c];
    table.rows.push_back(std::move(rec));
  }
  return table;
}

CandidateTable read_candidate_tsv_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_candidate_tsv(in);
}

void write_candidate_tsv(std::ostream& out, const CandidateTable& table) {
  out << "id\tseed_id\tsequence\tedits";
  for (const auto& col : table.extra_columns) out << '\t' << col;
  out << '\n';
  for (const auto& row : table.rows) {
    out << row.id << '\t' << row.candidate.seed_id() << '\t' << row.candidate.sequence().str() << '\t'
        << format_edits(row.candidate.edits());
    for (const auto& col : table.extra_columns) {
      auto it = row.fields.find(col);
      out << '\t' << (it == row.fields.end() ? std::string("NA") : it->second);
    }
    out << '\n';
  }
}

CandidateTable read_candidates_file(const std::filesystem::path& path,
                                    const std::vector<CandidateRecord>& seeds) {
  const auto ext = path.extension().string();
  if (ext == ".fa" || ext == ".fasta" || ext == ".faa") {
    CandidateTable table;
    table.rows = candidates_from_fasta(read_fasta_file(path), seeds);
    return table;
  }
  return read_candidate_tsv_file(path);
}

}  // namespace pllbeam::io
