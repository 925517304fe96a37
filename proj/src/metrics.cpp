#include "pllbeam/metrics.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "pllbeam/error.hpp"
#include "pllbeam/io.hpp"

namespace pllbeam::metrics {

std::vector<std::optional<double>> pairwise_diversity(const std::vector<CandidateSequence>& children,
                                                      DiversityMode mode) {
  std::vector<std::optional<double>> out(children.size());
  for (std::size_t a = 0; a < children.size(); ++a) {
    std::size_t peers = 0;
    std::size_t total = 0;
    for (std::size_t b = 0; b < children.size(); ++b) {
      if (a == b) continue;
      const bool same_seed = children[a].seed_id() == children[b].seed_id();
      if (same_seed != (mode == DiversityMode::IntraSeed)) continue;
      total += hamming(children[a].sequence(), children[b].sequence());
      ++peers;
    }
    if (peers > 0) out[a] = static_cast<double>(total) / static_cast<double>(peers);
  }
  return out;
}

// ---------------------------------------------------------------------------

void FrequencyTable::set(Position position, const Row& row) {
  for (double v : row) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::InvalidArgument, "frequencies must lie in [0, 1]");
  }
  rows_[position] = row;
}

const FrequencyTable::Row* FrequencyTable::find(Position position) const {
  auto it = rows_.find(position);
  return it == rows_.end() ? nullptr : &it->second;
}

FrequencyTable FrequencyTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  FrequencyTable table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#' || line.rfind("position", 0) == 0) continue;
    const auto cells = io::split(line, '\t');
    if (cells.size() != kAlphabetSize + 1) {
      throw Error(ErrorCode::Parse, path.string() + ":" + std::to_string(line_no) + ": expected 21 columns");
    }
    const double pos = io::parse_double(cells[0]);
    if (!(pos >= 1.0) || pos != std::floor(pos)) {
      throw Error(ErrorCode::Parse, path.string() + ":" + std::to_string(line_no) + ": bad position");
    }
    Row row{};
    for (std::size_t r = 0; r < kAlphabetSize; ++r) row[r] = io::parse_double(cells[r + 1]);
    table.set(static_cast<Position>(pos) - 1, row);
  }
  return table;
}

double germline_delta(const CandidateSequence& child, const FrequencyTable& table) {
  double delta = 0.0;
  for (const Edit& e : child.edits()) {
    const auto* row = table.find(e.position);
    if (!row) {
      throw Error(ErrorCode::PositionNotInTable, "position " + std::to_string(e.position + 1) +
                                                     " is not in the germline table");
    }
    delta += (*row)[index_of(e.to)] - (*row)[index_of(e.from)];
  }
  return delta;
}

// ---------------------------------------------------------------------------

PkaSet PkaSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  PkaSet pka;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::string name;
    std::string value_text;
    if (!(ss >> name)) continue;
    if (!(ss >> value_text)) throw Error(ErrorCode::Parse, path.string() + ": missing value for " + name);
    const double value = io::parse_double(value_text);
    if (name == "n_term") pka.n_terminus = value;
    else if (name == "c_term") pka.c_terminus = value;
    else if (name == "C") pka.cys = value;
    else if (name == "D") pka.asp = value;
    else if (name == "E") pka.glu = value;
    else if (name == "Y") pka.tyr = value;
    else if (name == "H") pka.his = value;
    else if (name == "K") pka.lys = value;
    else if (name == "R") pka.arg = value;
    else throw Error(ErrorCode::Parse, path.string() + ": unknown pKa group " + name);
  }
  pka.validate();
  return pka;
}

void PkaSet::validate() const {
  for (double v : {n_terminus, c_terminus, cys, asp, glu, tyr, his, lys, arg}) {
    if (!(v > 0.0 && v < 14.0)) throw Error(ErrorCode::InvalidArgument, "pKa values must lie in (0, 14)");
  }
}

double net_charge(const ProteinSequence& sequence, double ph, const PkaSet& pka) {
  std::size_t n_c = 0, n_d = 0, n_e = 0, n_y = 0, n_h = 0, n_k = 0, n_r = 0;
  for (char c : sequence.str()) {
    switch (c) {
      case 'C': ++n_c; break;
      case 'D': ++n_d; break;
      case 'E': ++n_e; break;
      case 'Y': ++n_y; break;
      case 'H': ++n_h; break;
      case 'K': ++n_k; break;
      case 'R': ++n_r; break;
      default: break;
    }
  }
  auto positive = [ph](double count, double pk) { return count / (1.0 + std::pow(10.0, ph - pk)); };
  auto negative = [ph](double count, double pk) { return count / (1.0 + std::pow(10.0, pk - ph)); };
  const double plus = positive(1, pka.n_terminus) + positive(static_cast<double>(n_h), pka.his) +
                      positive(static_cast<double>(n_k), pka.lys) + positive(static_cast<double>(n_r), pka.arg);
  const double minus = negative(1, pka.c_terminus) + negative(static_cast<double>(n_c), pka.cys) +
                       negative(static_cast<double>(n_d), pka.asp) + negative(static_cast<double>(n_e), pka.glu) +
                       negative(static_cast<double>(n_y), pka.tyr);
  return plus - minus;
}

double isoelectric_point(const ProteinSequence& sequence, const PkaSet& pka) {
  double lo = 0.0;
  double hi = 14.0;
  if (net_charge(sequence, lo, pka) <= 0.0) return lo;
  if (net_charge(sequence, hi, pka) >= 0.0) return hi;
  while (hi - lo > 1e-3) {
    const double mid = 0.5 * (lo + hi);
    if (net_charge(sequence, mid, pka) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------

namespace {

bool in(char c, std::string_view set) { return set.find(c) != std::string_view::npos; }

struct MotifPattern {
  LiabilityClass motif_class;
  std::size_t width;
  bool (*matches)(std::string_view s, std::size_t p);
};

constexpr MotifPattern kPatterns[] = {
    {LiabilityClass::AspPro, 2, [](std::string_view s, std::size_t p) { return s[p] == 'D' && s[p + 1] == 'P'; }},
    {LiabilityClass::Deamidation, 2,
     [](std::string_view s, std::size_t p) { return s[p] == 'N' && in(s[p + 1], "GHNST"); }},
    {LiabilityClass::Isomerization, 2,
     [](std::string_view s, std::size_t p) { return s[p] == 'D' && in(s[p + 1], "GDHST"); }},
    {LiabilityClass::NGlycosylation, 3,
     [](std::string_view s, std::size_t p) { return s[p] == 'N' && s[p + 1] != 'P' && in(s[p + 2], "ST"); }},
};

std::size_t count_of(std::string_view s, char c) {
  std::size_t n = 0;
  for (char x : s) n += x == c ? 1 : 0;
  return n;
}

}  // namespace

std::string_view liability_name(LiabilityClass c) {
  switch (c) {
    case LiabilityClass::AspPro: return "asp_pro";
    case LiabilityClass::Deamidation: return "deamidation";
    case LiabilityClass::Isomerization: return "isomerization";
    case LiabilityClass::NGlycosylation: return "n_glycosylation";
    case LiabilityClass::OxidationMetTrp: return "oxidation_met_trp";
    case LiabilityClass::UnpairedCysteine: return "unpaired_cysteine";
  }
  return "unknown";
}

LiabilityReport liability_scan(const ProteinSequence& seed, const ProteinSequence& child) {
  if (seed.size() != child.size()) throw Error(ErrorCode::LengthMismatch, "seed and child lengths differ");
  const std::string_view s = seed.str();
  const std::string_view c = child.str();
  LiabilityReport report;
  for (const auto& pattern : kPatterns) {
    for (std::size_t p = 0; p + pattern.width <= c.size(); ++p) {
      if (pattern.matches(c, p) && !pattern.matches(s, p)) {
        report.introduced.push_back({pattern.motif_class, p + 1, p + pattern.width,
                                     std::string(c.substr(p, pattern.width)), {}});
      }
    }
  }
  for (std::size_t p = 0; p < c.size(); ++p) {
    if (in(c[p], "MW") && !in(s[p], "MW")) {
      report.introduced.push_back({LiabilityClass::OxidationMetTrp, p + 1, p + 1, std::string(1, c[p]),
                                   "introduced_met_trp"});
    }
  }
  for (std::size_t p = 0; p < c.size(); ++p) {
    if (c[p] == 'C' && s[p] != 'C') {
      report.introduced.push_back({LiabilityClass::UnpairedCysteine, p + 1, p + 1, "C", "introduced_cysteine"});
    }
  }
  const std::size_t child_cys = count_of(c, 'C');
  if (child_cys % 2 == 1 && count_of(s, 'C') % 2 == 0) {
    report.introduced.push_back({LiabilityClass::UnpairedCysteine, 1, c.size(), std::to_string(child_cys),
                                 "odd_cysteine_count"});
  }
  return report;
}

std::size_t liability_count(const ProteinSequence& sequence) {
  const std::string_view s = sequence.str();
  std::size_t n = 0;
  for (const auto& pattern : kPatterns) {
    for (std::size_t p = 0; p + pattern.width <= s.size(); ++p) n += pattern.matches(s, p) ? 1 : 0;
  }
  n += count_of(s, 'M') + count_of(s, 'W');
  n += count_of(s, 'C') % 2;
  return n;
}

RegionCounts region_mutation_count(const CandidateSequence& child, const PositionMask& mask) {
  RegionCounts counts;
  for (const Edit& e : child.edits()) {
    if (mask.contains(e.position)) {
      ++counts.in_mask;
    } else {
      ++counts.out_mask;
    }
  }
  return counts;
}

}  // namespace pllbeam::metrics
