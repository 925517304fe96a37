#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pllbeam/alphabet.hpp"
#include "pllbeam/sequence.hpp"

namespace pllbeam::metrics {

enum class DiversityMode { IntraSeed, InterSeed };

/// Per child, mean Hamming distance to every peer: children of the same seed (intra) or
/// of other seeds (inter). A child without peers gets std::nullopt.
std::vector<std::optional<double>> pairwise_diversity(const std::vector<CandidateSequence>& children,
                                                      DiversityMode mode);

/// Germline residue frequencies per 0-based position, aligned to kAlphabetCodes.
class FrequencyTable {
 public:
  using Row = std::array<double, kAlphabetSize>;

  void set(Position position, const Row& row);
  const Row* find(Position position) const;
  std::size_t size() const noexcept { return rows_.size(); }

  /// TSV: 1-based position, then 20 frequency columns. A header row starting with
  /// "position" and `#` comment lines are skipped.
  static FrequencyTable load(const std::filesystem::path& path);

 private:
  std::map<Position, Row> rows_;
};

/// Sum over edits of freq[pos][to] - freq[pos][from]. Throws PositionNotInTable.
double germline_delta(const CandidateSequence& child, const FrequencyTable& table);

/// pKa constants for Henderson-Hasselbalch charge. Defaults are the EMBOSS iep table.
struct PkaSet {
  double n_terminus = 8.6;
  double c_terminus = 3.6;
  double cys = 8.5;
  double asp = 3.9;
  double glu = 4.1;
  double tyr = 10.1;
  double his = 6.5;
  double lys = 10.8;
  double arg = 12.5;

  /// `name<TAB>value` lines (n_term, c_term, C, D, E, Y, H, K, R); `#` comments.
  static PkaSet load(const std::filesystem::path& path);
  /// Throws InvalidArgument unless every value lies in (0, 14).
  void validate() const;
};

double net_charge(const ProteinSequence& sequence, double ph, const PkaSet& pka = {});

/// pH of zero net charge, by bisection on [0, 14] to 1e-3 absolute.
double isoelectric_point(const ProteinSequence& sequence, const PkaSet& pka = {});

enum class LiabilityClass {
  AspPro,
  Deamidation,
  Isomerization,
  NGlycosylation,
  OxidationMetTrp,
  UnpairedCysteine,
};

std::string_view liability_name(LiabilityClass c);

struct LiabilityHit {
  LiabilityClass motif_class;
  Position start = 0;  // 1-based, inclusive
  Position end = 0;    // 1-based, inclusive
  std::string text;
  std::string detail;  // which proxy fired, for the cysteine and oxidation classes
};

struct LiabilityReport {
  std::vector<LiabilityHit> introduced;
  bool empty() const noexcept { return introduced.empty(); }
};

/// Motifs present in the child at a span where the seed does not carry the same class.
/// Throws LengthMismatch.
LiabilityReport liability_scan(const ProteinSequence& seed, const ProteinSequence& child);

/// Liability motif occurrences in a single sequence (no seed), used as a scorer objective.
std::size_t liability_count(const ProteinSequence& sequence);

struct RegionCounts {
  std::size_t in_mask = 0;
  std::size_t out_mask = 0;
};

RegionCounts region_mutation_count(const CandidateSequence& child, const PositionMask& mask);

}  // namespace pllbeam::metrics
