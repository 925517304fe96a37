#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pllbeam/alphabet.hpp"

namespace pllbeam {

using Position = std::size_t;

/// A substitution-only protein sequence over the canonical alphabet. Immutable.
class ProteinSequence {
 public:
  ProteinSequence() = default;
  /// Throws InvalidResidue on any symbol outside the alphabet, InvalidArgument if empty.
  explicit ProteinSequence(std::string residues);

  std::size_t size() const noexcept { return residues_.size(); }
  char operator[](Position i) const { return residues_[i]; }
  std::size_t index_at(Position i) const { return index_of(residues_[i]); }
  const std::string& str() const noexcept { return residues_; }

  /// Copy with position i replaced. Validates `to`.
  ProteinSequence with(Position i, char to) const;

  friend bool operator==(const ProteinSequence&, const ProteinSequence&) = default;
  friend auto operator<=>(const ProteinSequence& a, const ProteinSequence& b) {
    return a.residues_ <=> b.residues_;
  }

 private:
  std::string residues_;
};

/// Editable-region constraint, 0-based.
class PositionMask {
 public:
  PositionMask() = default;
  explicit PositionMask(std::set<Position> eligible) : eligible_(std::move(eligible)) {}

  static PositionMask full(std::size_t length);

  const std::set<Position>& positions() const noexcept { return eligible_; }
  bool contains(Position p) const { return eligible_.count(p) != 0; }
  std::size_t size() const noexcept { return eligible_.size(); }
  bool empty() const noexcept { return eligible_.empty(); }

  /// Throws PositionOutOfRange if any position >= length.
  void check_fits(std::size_t length) const;

 private:
  std::set<Position> eligible_;
};

struct Edit {
  Position position = 0;
  char from = 'A';
  char to = 'A';

  friend bool operator==(const Edit&, const Edit&) = default;
};

/// A sequence plus its substitution trace relative to a named seed.
/// Edits are kept sorted by position; applying them to the seed reproduces `sequence`.
class CandidateSequence {
 public:
  CandidateSequence() = default;
  /// Candidate equal to its seed.
  CandidateSequence(std::string seed_id, ProteinSequence seed);
  /// Reconstruct from a seed and an edited sequence (edits derived by comparison).
  static CandidateSequence from_pair(std::string seed_id, const ProteinSequence& seed,
                                     const ProteinSequence& child);
  /// Reconstruct from a child and its edit trace; validates `from`/`to` against `child`.
  static CandidateSequence from_edits(std::string seed_id, ProteinSequence child,
                                      std::vector<Edit> edits);

  const std::string& seed_id() const noexcept { return seed_id_; }
  const ProteinSequence& sequence() const noexcept { return sequence_; }
  const std::vector<Edit>& edits() const noexcept { return edits_; }
  std::size_t edit_count() const noexcept { return edits_.size(); }
  std::size_t size() const noexcept { return sequence_.size(); }
  bool is_edited(Position p) const;

  /// The seed, recovered by undoing every edit.
  ProteinSequence seed_sequence() const;

 private:
  friend CandidateSequence apply_edit(const CandidateSequence&, Position, char);

  std::string seed_id_;
  ProteinSequence sequence_;
  std::vector<Edit> edits_;
};

/// Returns a new candidate with one more substitution. Errors: PositionOutOfRange,
/// PositionAlreadyEdited, IdentitySubstitution, InvalidResidue.
CandidateSequence apply_edit(const CandidateSequence& candidate, Position position, char to);

/// Number of differing positions. Throws LengthMismatch.
std::size_t hamming(const ProteinSequence& a, const ProteinSequence& b);

/// `POS:FROM>TO;...` with 1-based positions; "-" when there are no edits.
std::string format_edits(const std::vector<Edit>& edits);
/// Inverse of format_edits. Positions come back 0-based.
std::vector<Edit> parse_edits(std::string_view text);

}  // namespace pllbeam
