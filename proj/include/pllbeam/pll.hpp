#pragma once

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <string_view>
#include <vector>

#include "pllbeam/provider.hpp"
#include "pllbeam/sequence.hpp"

namespace pllbeam {

/// Probabilities below this are clamped before taking logs.
inline constexpr double kProbabilityFloor = 1e-300;

using ProbRow = std::array<double, kAlphabetSize>;

/// softmax(row / tau) and its log, with the probability floor applied.
ProbRow softmax(const LogitRow& row, double tau);
ProbRow log_softmax(const LogitRow& row, double tau);

/// Pseudo-log-likelihood in three equivalent forms. Search uses `sum_log`.
struct PllScore {
  double sum_log = 0.0;
  double per_residue = 0.0;
  double pseudo_perplexity = 1.0;

  static PllScore from_sum(double sum_log, std::size_t length);
};

/// Single-mask conditionals of a template at temperature tau: row i is
/// softmax_tau of the logits obtained with only position i masked.
class ConditionalProfile {
 public:
  ConditionalProfile(ProteinSequence templ, double tau, const std::vector<LogitRow>& single_mask_logits);

  const ProteinSequence& templ() const noexcept { return template_; }
  double tau() const noexcept { return tau_; }
  std::size_t size() const noexcept { return probs_.size(); }
  const ProbRow& row(Position i) const { return probs_[i]; }
  double log_prob(Position i, std::size_t residue) const { return log_probs_[i][residue]; }

  /// The template's own PLL read off the profile (equals exact_pll of the template).
  PllScore template_score() const;

 private:
  ProteinSequence template_;
  double tau_;
  std::vector<ProbRow> probs_;
  std::vector<ProbRow> log_probs_;
};

/// L single-mask queries, issued concurrently up to `threads`.
ConditionalProfile build_profile(MaskedLogitProvider& provider, const ProteinSequence& templ, double tau,
                                 std::size_t threads = 1);
/// Builds several profiles, flattening all single-mask queries into one parallel pass.
std::vector<ConditionalProfile> build_profiles(MaskedLogitProvider& provider,
                                               const std::vector<ProteinSequence>& templates, double tau,
                                               std::size_t threads = 1);

/// Memo of profiles per (template, tau) for the duration of a run.
class ProfileCache {
 public:
  std::shared_ptr<const ConditionalProfile> get(MaskedLogitProvider& provider, const ProteinSequence& templ,
                                                double tau, std::size_t threads = 1);
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, double>, std::shared_ptr<const ConditionalProfile>> profiles_;
};

/// Exact PLL: one single-mask query per position of `sequence` itself.
PllScore exact_pll(MaskedLogitProvider& provider, const ProteinSequence& sequence, double tau,
                   std::size_t threads = 1);

/// Wild-type marginal: every term from the template profile, the substituted position
/// scored at its new residue. No provider queries. Throws NotSingleSubstitution.
PllScore approx_pll_wt(const ConditionalProfile& profile, const ProteinSequence& child);

/// Double-mask terms for one substitution site k: for each i != k, the log-probability of
/// the template residue at i with both i and k masked. Costs L-1 queries and serves all
/// 19 children at k.
class DoubleMaskTerms {
 public:
  DoubleMaskTerms(MaskedLogitProvider& provider, const ConditionalProfile& profile, Position k,
                  std::size_t threads = 1);

  Position site() const noexcept { return k_; }
  double term(Position i) const { return terms_[i]; }
  /// Score of a child that differs from the profile's template exactly at site().
  PllScore score(const ConditionalProfile& profile, const ProteinSequence& child) const;

 private:
  Position k_;
  std::vector<double> terms_;
};

/// All-pairs double-mask table: C(L,2) queries, each masking {i,j} and reporting both rows,
/// after which every single-substitution child of the template can be scored.
class DoubleMaskTable {
 public:
  DoubleMaskTable(MaskedLogitProvider& provider, const ConditionalProfile& profile, std::size_t threads = 1);

  PllScore score(const ConditionalProfile& profile, const ProteinSequence& child) const;

 private:
  std::size_t length_;
  std::vector<double> terms_;  // terms_[i * L + k]
};

/// Double-mask score of one child; convenience wrapper over DoubleMaskTerms.
PllScore approx_pll_double_mask(MaskedLogitProvider& provider, const ConditionalProfile& profile,
                                const ProteinSequence& child, std::size_t threads = 1);

/// One unmasked pass over the child; each position scored while seeing its own residue.
PllScore approx_pll_nomask_child(MaskedLogitProvider& provider, const ProteinSequence& child, double tau);

/// One unmasked pass over the template, shared by all of its single-substitution children.
class NoMaskTemplate {
 public:
  NoMaskTemplate(MaskedLogitProvider& provider, const ProteinSequence& templ, double tau);

  /// Throws NotSingleSubstitution when the child differs from the template at >1 position.
  PllScore score(const ProteinSequence& child) const;
  const ProteinSequence& templ() const noexcept { return template_; }

 private:
  ProteinSequence template_;
  std::vector<ProbRow> log_probs_;
};

PllScore approx_pll_nomask_template(const NoMaskTemplate& rows, const ProteinSequence& child);

enum class Approximation { Exact, DoubleMask, WildTypeMarginal, NoMaskChild, NoMaskTemplate };

std::string_view approximation_name(Approximation a);
Approximation parse_approximation(std::string_view name);

struct ScoredNeighbor {
  CandidateSequence candidate;
  PllScore score;
  Position position = 0;
  std::size_t residue = 0;
};

/// Every single substitution of `candidate` at eligible positions (mask minus already-edited
/// positions), scored with the wild-type marginal against the profile. Ordered by
/// (position, residue index). Throws EmptyMask when nothing is eligible.
std::vector<ScoredNeighbor> expand_neighborhood(const ConditionalProfile& profile,
                                                const CandidateSequence& candidate, const PositionMask& mask);

/// Position of the single difference between template and child, if any.
/// Throws NotSingleSubstitution for two or more differences.
std::optional<Position> substitution_site(const ProteinSequence& templ, const ProteinSequence& child);

}  // namespace pllbeam
