#include "pllbeam/sequence.hpp"

#include <algorithm>
#include <charconv>

#include "pllbeam/error.hpp"

namespace pllbeam {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidResidue: return "InvalidResidue";
    case ErrorCode::PositionOutOfRange: return "PositionOutOfRange";
    case ErrorCode::PositionAlreadyEdited: return "PositionAlreadyEdited";
    case ErrorCode::IdentitySubstitution: return "IdentitySubstitution";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::AlphabetMismatch: return "AlphabetMismatch";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::NotSingleSubstitution: return "NotSingleSubstitution";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::EditBudgetExceedsMask: return "EditBudgetExceedsMask";
    case ErrorCode::ScorerFailure: return "ScorerFailure";
    case ErrorCode::PositionNotInTable: return "PositionNotInTable";
    case ErrorCode::InsufficientPeers: return "InsufficientPeers";
    case ErrorCode::RetryBudgetExhausted: return "RetryBudgetExhausted";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

ProteinSequence::ProteinSequence(std::string residues) : residues_(std::move(residues)) {
  if (residues_.empty()) throw Error(ErrorCode::InvalidArgument, "empty sequence");
  for (std::size_t i = 0; i < residues_.size(); ++i) {
    if (!is_residue(residues_[i])) {
      throw Error(ErrorCode::InvalidResidue, "symbol '" + std::string(1, residues_[i]) +
                                                 "' at position " + std::to_string(i + 1));
    }
  }
}

ProteinSequence ProteinSequence::with(Position i, char to) const {
  if (i >= residues_.size()) {
    throw Error(ErrorCode::PositionOutOfRange, "position " + std::to_string(i));
  }
  if (!is_residue(to)) throw Error(ErrorCode::InvalidResidue, std::string(1, to));
  ProteinSequence out = *this;
  out.residues_[i] = to;
  return out;
}

PositionMask PositionMask::full(std::size_t length) {
  std::set<Position> all;
  for (Position i = 0; i < length; ++i) all.insert(all.end(), i);
  return PositionMask(std::move(all));
}

void PositionMask::check_fits(std::size_t length) const {
  if (!eligible_.empty() && *eligible_.rbegin() >= length) {
    throw Error(ErrorCode::PositionOutOfRange,
                "mask position " + std::to_string(*eligible_.rbegin() + 1) +
                    " beyond sequence length " + std::to_string(length));
  }
}

CandidateSequence::CandidateSequence(std::string seed_id, ProteinSequence seed)
    : seed_id_(std::move(seed_id)), sequence_(std::move(seed)) {}

CandidateSequence CandidateSequence::from_pair(std::string seed_id, const ProteinSequence& seed,
                                               const ProteinSequence& child) {
  if (seed.size() != child.size()) {
    throw Error(ErrorCode::LengthMismatch, "seed and child lengths differ");
  }
  CandidateSequence out(std::move(seed_id), child);
  for (Position i = 0; i < seed.size(); ++i) {
    if (seed[i] != child[i]) out.edits_.push_back({i, seed[i], child[i]});
  }
  return out;
}

CandidateSequence CandidateSequence::from_edits(std::string seed_id, ProteinSequence child,
                                                std::vector<Edit> edits) {
  std::sort(edits.begin(), edits.end(),
            [](const Edit& a, const Edit& b) { return a.position < b.position; });
  for (std::size_t e = 0; e < edits.size(); ++e) {
    const Edit& edit = edits[e];
    if (edit.position >= child.size()) {
      throw Error(ErrorCode::PositionOutOfRange, "edit position " + std::to_string(edit.position + 1));
    }
    if (e > 0 && edits[e - 1].position == edit.position) {
      throw Error(ErrorCode::PositionAlreadyEdited, "edit position " + std::to_string(edit.position + 1));
    }
    if (edit.from == edit.to) {
      throw Error(ErrorCode::IdentitySubstitution, "edit position " + std::to_string(edit.position + 1));
    }
    if (!is_residue(edit.from) || !is_residue(edit.to)) {
      throw Error(ErrorCode::InvalidResidue, "edit position " + std::to_string(edit.position + 1));
    }
    if (child[edit.position] != edit.to) {
      throw Error(ErrorCode::InvalidArgument, "edit at position " + std::to_string(edit.position + 1) +
                                                  " disagrees with the sequence");
    }
  }
  CandidateSequence out(std::move(seed_id), std::move(child));
  out.edits_ = std::move(edits);
  return out;
}

bool CandidateSequence::is_edited(Position p) const {
  auto it = std::lower_bound(edits_.begin(), edits_.end(), p,
                             [](const Edit& e, Position q) { return e.position < q; });
  return it != edits_.end() && it->position == p;
}

ProteinSequence CandidateSequence::seed_sequence() const {
  std::string s = sequence_.str();
  for (const Edit& e : edits_) s[e.position] = e.from;
  return ProteinSequence(std::move(s));
}

CandidateSequence apply_edit(const CandidateSequence& candidate, Position position, char to) {
  if (position >= candidate.size()) {
    throw Error(ErrorCode::PositionOutOfRange, "position " + std::to_string(position + 1) +
                                                   " beyond length " + std::to_string(candidate.size()));
  }
  if (candidate.is_edited(position)) {
    throw Error(ErrorCode::PositionAlreadyEdited, "position " + std::to_string(position + 1));
  }
  const char from = candidate.sequence()[position];
  if (from == to) {
    throw Error(ErrorCode::IdentitySubstitution, "position " + std::to_string(position + 1));
  }
  CandidateSequence out = candidate;
  out.sequence_ = candidate.sequence_.with(position, to);
  auto it = std::lower_bound(out.edits_.begin(), out.edits_.end(), position,
                             [](const Edit& e, Position q) { return e.position < q; });
  out.edits_.insert(it, Edit{position, from, to});
  return out;
}

std::size_t hamming(const ProteinSequence& a, const ProteinSequence& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  std::size_t d = 0;
  for (Position i = 0; i < a.size(); ++i) d += a[i] != b[i] ? 1 : 0;
  return d;
}

std::string format_edits(const std::vector<Edit>& edits) {
  if (edits.empty()) return "-";
  std::string out;
  for (const Edit& e : edits) {
    if (!out.empty()) out += ';';
    out += std::to_string(e.position + 1);
    out += ':';
    out += e.from;
    out += '>';
    out += e.to;
  }
  return out;
}

std::vector<Edit> parse_edits(std::string_view text) {
  std::vector<Edit> edits;
  if (text.empty() || text == "-") return edits;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(';', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view item = text.substr(start, end - start);
    if (!item.empty()) {
      const auto colon = item.find(':');
      if (colon == std::string_view::npos || item.size() != colon + 4 || item[colon + 2] != '>') {
        throw Error(ErrorCode::Parse, "malformed edit '" + std::string(item) + "'");
      }
      std::size_t pos1 = 0;
      auto [ptr, ec] = std::from_chars(item.data(), item.data() + colon, pos1);
      if (ec != std::errc() || ptr != item.data() + colon || pos1 == 0) {
        throw Error(ErrorCode::Parse, "malformed edit position '" + std::string(item) + "'");
      }
      edits.push_back({pos1 - 1, item[colon + 1], item[colon + 3]});
    }
    start = end + 1;
  }
  return edits;
}

}  // namespace pllbeam
