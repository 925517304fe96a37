#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pllbeam/sequence.hpp"

namespace pllbeam {

enum class Direction { Minimize, Maximize };
enum class Aggregation { Sts, Nds };

std::string_view direction_name(Direction d);
Direction parse_direction(std::string_view name);
std::string_view aggregation_name(Aggregation a);
Aggregation parse_aggregation(std::string_view name);

/// Black-box objective over clean sequences. Batch-shaped so remote scorers can answer a
/// whole neighbourhood in one request; implementations must be pure per sequence.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::string describe() const = 0;
  virtual std::vector<double> score(std::span<const ProteinSequence> sequences) = 0;
};

/// Run-wide memo in front of another scorer; each unique sequence is scored once.
class CachedScorer final : public Scorer {
 public:
  explicit CachedScorer(std::shared_ptr<Scorer> inner) : inner_(std::move(inner)) {}
  std::string describe() const override { return inner_->describe(); }
  std::vector<double> score(std::span<const ProteinSequence> sequences) override;
  std::size_t cached() const;

 private:
  std::shared_ptr<Scorer> inner_;
  mutable std::mutex mutex_;
  std::map<std::string, double> memo_;
};

/// Name reserved for the model's own objective, computed from PLLs rather than a scorer.
inline constexpr std::string_view kPseudoPerplexity = "pseudo_perplexity";

struct ObjectiveSpec {
  std::string name;
  Direction direction = Direction::Minimize;
  double weight = 1.0;
  std::shared_ptr<Scorer> scorer;  // null only for pseudo_perplexity
};

struct ObjectiveSet {
  std::vector<ObjectiveSpec> objectives;
  Aggregation aggregation = Aggregation::Sts;
  std::string tie_break = std::string(kPseudoPerplexity);

  /// Throws InvalidArgument on duplicate names, non-positive weights, a missing scorer or
  /// an unknown tie-break objective.
  void validate() const;
  /// Same objectives with every scorer wrapped in a CachedScorer.
  ObjectiveSet memoized() const;
};

/// N candidates by M objectives, row-major. `oriented` is minimize-oriented raw values;
/// `standardized` holds per-column z-scores (population sigma, constant column -> 0).
struct ScoreMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::string> names;
  std::vector<double> raw;
  std::vector<double> oriented;
  std::vector<double> standardized;

  double z(std::size_t row, std::size_t col) const { return standardized[row * cols + col]; }
  double value(std::size_t row, std::size_t col) const { return oriented[row * cols + col]; }
};

/// From already-evaluated columns (columns[m][n]).
ScoreMatrix orient_and_zscore(const std::vector<std::vector<double>>& columns,
                              const std::vector<Direction>& directions,
                              std::vector<std::string> names = {});
/// Evaluates every objective's scorer over the candidates. Throws ScorerFailure naming the
/// objective (and candidate when known); never drops a candidate.
ScoreMatrix orient_and_zscore(std::span<const ProteinSequence> candidates,
                              const std::vector<ObjectiveSpec>& objectives);

/// log sum_i c_i exp(z_i) per candidate; lower is better.
std::vector<double> sts_scalarize(const ScoreMatrix& matrix, std::span<const double> weights);

struct NdsRank {
  std::size_t front = 0;
  std::size_t within = 0;
};

/// Non-dominated fronts over the oriented values; inside a front, ascending by the
/// tie-break column with input order breaking remaining ties.
std::vector<NdsRank> nds_rank(const ScoreMatrix& matrix, std::size_t tie_break_column);

struct GuidedRanking {
  std::vector<std::size_t> order;  // candidate indices, best first
  ScoreMatrix matrix;
  std::vector<double> sts;    // per candidate, STS only
  std::vector<NdsRank> nds;   // per candidate, NDS only
};

/// Ranks candidates by the objective set. `sum_logs` are the candidates' PLLs (already
/// Gumbel-perturbed when used inside the beam); they become the pseudo_perplexity
/// objective, which is injected with weight 1 when the set does not list it.
/// Final tie key everywhere is the sequence string.
GuidedRanking guided_rank(std::span<const ProteinSequence> candidates, std::span<const double> sum_logs,
                          const ObjectiveSet& objectives);

/// Indices of candidates whose score passes the strict threshold (greater for Maximize,
/// less for Minimize), in input order.
std::vector<std::size_t> threshold_filter(std::span<const ProteinSequence> candidates, Scorer& scorer,
                                          double threshold, Direction direction);

}  // namespace pllbeam
