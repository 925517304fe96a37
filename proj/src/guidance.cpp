#include "pllbeam/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "pllbeam/error.hpp"

namespace pllbeam {

std::string_view direction_name(Direction d) { return d == Direction::Minimize ? "minimize" : "maximize"; }

Direction parse_direction(std::string_view name) {
  if (name == "minimize" || name == "min") return Direction::Minimize;
  if (name == "maximize" || name == "max") return Direction::Maximize;
  throw Error(ErrorCode::InvalidArgument, "direction must be minimize or maximize, got '" + std::string(name) + "'");
}

std::string_view aggregation_name(Aggregation a) { return a == Aggregation::Sts ? "sts" : "nds"; }

Aggregation parse_aggregation(std::string_view name) {
  if (name == "sts") return Aggregation::Sts;
  if (name == "nds") return Aggregation::Nds;
  throw Error(ErrorCode::InvalidArgument, "aggregation must be sts or nds, got '" + std::string(name) + "'");
}

std::vector<double> CachedScorer::score(std::span<const ProteinSequence> sequences) {
  std::vector<double> out(sequences.size());
  std::vector<ProteinSequence> pending;
  std::vector<std::size_t> pending_index;
  {
    std::lock_guard lock(mutex_);
    std::set<std::string> queued;
    for (std::size_t i = 0; i < sequences.size(); ++i) {
      if (auto it = memo_.find(sequences[i].str()); it != memo_.end()) {
        out[i] = it->second;
      } else {
        pending_index.push_back(i);
        if (queued.insert(sequences[i].str()).second) pending.push_back(sequences[i]);
      }
    }
  }
  if (pending.empty()) return out;
  const auto fresh = inner_->score(pending);
  if (fresh.size() != pending.size()) {
    throw Error(ErrorCode::ScorerFailure, inner_->describe() + " returned " + std::to_string(fresh.size()) +
                                              " scores for " + std::to_string(pending.size()) + " sequences");
  }
  std::lock_guard lock(mutex_);
  for (std::size_t p = 0; p < pending.size(); ++p) memo_.emplace(pending[p].str(), fresh[p]);
  for (std::size_t i : pending_index) out[i] = memo_.at(sequences[i].str());
  return out;
}

std::size_t CachedScorer::cached() const {
  std::lock_guard lock(mutex_);
  return memo_.size();
}

void ObjectiveSet::validate() const {
  if (objectives.empty()) throw Error(ErrorCode::InvalidArgument, "objective set is empty");
  std::set<std::string> names;
  for (const auto& o : objectives) {
    if (!names.insert(o.name).second) throw Error(ErrorCode::InvalidArgument, "duplicate objective '" + o.name + "'");
    if (!(o.weight > 0.0) || !std::isfinite(o.weight)) {
      throw Error(ErrorCode::InvalidArgument, "objective '" + o.name + "' needs a positive weight");
    }
    if (o.name == kPseudoPerplexity) {
      if (o.direction != Direction::Minimize) {
        throw Error(ErrorCode::InvalidArgument, "pseudo_perplexity is always minimized");
      }
    } else if (!o.scorer) {
      throw Error(ErrorCode::InvalidArgument, "objective '" + o.name + "' has no scorer");
    }
  }
  if (aggregation == Aggregation::Nds && tie_break != kPseudoPerplexity && !names.count(tie_break)) {
    throw Error(ErrorCode::InvalidArgument, "tie-break objective '" + tie_break + "' is not in the set");
  }
}

ObjectiveSet ObjectiveSet::memoized() const {
  ObjectiveSet out = *this;
  for (auto& o : out.objectives) {
    if (o.scorer && !dynamic_cast<CachedScorer*>(o.scorer.get())) {
      o.scorer = std::make_shared<CachedScorer>(o.scorer);
    }
  }
  return out;
}

ScoreMatrix orient_and_zscore(const std::vector<std::vector<double>>& columns,
                              const std::vector<Direction>& directions, std::vector<std::string> names) {
  if (columns.size() != directions.size()) {
    throw Error(ErrorCode::InvalidArgument, "one direction per objective column is required");
  }
  if (columns.empty() || columns.front().empty()) {
    throw Error(ErrorCode::InvalidArgument, "score matrix needs at least one candidate and one objective");
  }
  ScoreMatrix m;
  m.rows = columns.front().size();
  m.cols = columns.size();
  m.names = std::move(names);
  m.names.resize(m.cols);
  m.raw.resize(m.rows * m.cols);
  m.oriented.resize(m.rows * m.cols);
  m.standardized.assign(m.rows * m.cols, 0.0);
  for (std::size_t c = 0; c < m.cols; ++c) {
    if (columns[c].size() != m.rows) throw Error(ErrorCode::InvalidArgument, "ragged score columns");
    const double sign = directions[c] == Direction::Maximize ? -1.0 : 1.0;
    double mean = 0.0;
    bool constant = true;
    for (std::size_t r = 0; r < m.rows; ++r) {
      const double v = columns[c][r];
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::ScorerFailure, "objective '" + m.names[c] + "' is not finite for candidate " +
                                                  std::to_string(r));
      }
      m.raw[r * m.cols + c] = v;
      m.oriented[r * m.cols + c] = sign * v;
      mean += sign * v;
      constant = constant && v == columns[c][0];
    }
    if (constant) continue;
    mean /= static_cast<double>(m.rows);
    double var = 0.0;
    for (std::size_t r = 0; r < m.rows; ++r) {
      const double d = m.oriented[r * m.cols + c] - mean;
      var += d * d;
    }
    const double sigma = std::sqrt(var / static_cast<double>(m.rows));
    if (sigma == 0.0) continue;
    for (std::size_t r = 0; r < m.rows; ++r) {
      m.standardized[r * m.cols + c] = (m.oriented[r * m.cols + c] - mean) / sigma;
    }
  }
  return m;
}

ScoreMatrix orient_and_zscore(std::span<const ProteinSequence> candidates,
                              const std::vector<ObjectiveSpec>& objectives) {
  std::vector<std::vector<double>> columns;
  std::vector<Direction> directions;
  std::vector<std::string> names;
  for (const auto& o : objectives) {
    if (!o.scorer) throw Error(ErrorCode::ScorerFailure, "objective '" + o.name + "' has no scorer");
    std::vector<double> values;
    try {
      values = o.scorer->score(candidates);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::ScorerFailure, "objective '" + o.name + "': " + e.what());
    }
    if (values.size() != candidates.size()) {
      throw Error(ErrorCode::ScorerFailure, "objective '" + o.name + "' returned " + std::to_string(values.size()) +
                                                " scores for " + std::to_string(candidates.size()) + " candidates");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values[i])) {
        throw Error(ErrorCode::ScorerFailure,
                    "objective '" + o.name + "' is not finite for " + candidates[i].str());
      }
    }
    columns.push_back(std::move(values));
    directions.push_back(o.direction);
    names.push_back(o.name);
  }
  return orient_and_zscore(columns, directions, std::move(names));
}

std::vector<double> sts_scalarize(const ScoreMatrix& matrix, std::span<const double> weights) {
  if (weights.size() != matrix.cols) throw Error(ErrorCode::InvalidArgument, "one weight per objective is required");
  std::vector<double> log_w(weights.size());
  for (std::size_t c = 0; c < weights.size(); ++c) {
    if (!(weights[c] > 0.0)) throw Error(ErrorCode::InvalidArgument, "weights must be positive");
    log_w[c] = std::log(weights[c]);
  }
  std::vector<double> out(matrix.rows);
  for (std::size_t r = 0; r < matrix.rows; ++r) {
    std::vector<double> terms(matrix.cols);
    for (std::size_t c = 0; c < matrix.cols; ++c) terms[c] = matrix.z(r, c) + log_w[c];
    // Summed in sorted order so candidates whose terms are permutations of each other tie exactly.
    std::sort(terms.begin(), terms.end());
    const double shift = terms.back();
    double total = 0.0;
    for (double t : terms) total += std::exp(t - shift);
    out[r] = shift + std::log(total);
  }
  return out;
}

std::vector<NdsRank> nds_rank(const ScoreMatrix& matrix, std::size_t tie_break_column) {
  if (tie_break_column >= matrix.cols) throw Error(ErrorCode::InvalidArgument, "tie-break column out of range");
  const std::size_t n = matrix.rows;
  auto dominates = [&](std::size_t a, std::size_t b) {
    bool strict = false;
    for (std::size_t c = 0; c < matrix.cols; ++c) {
      const double va = matrix.value(a, c);
      const double vb = matrix.value(b, c);
      if (va > vb) return false;
      strict = strict || va < vb;
    }
    return strict;
  };
  std::vector<std::vector<std::size_t>> dominated(n);
  std::vector<std::size_t> dominators(n, 0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (dominates(a, b)) {
        dominated[a].push_back(b);
        ++dominators[b];
      } else if (dominates(b, a)) {
        dominated[b].push_back(a);
        ++dominators[a];
      }
    }
  }
  std::vector<NdsRank> ranks(n);
  std::vector<std::size_t> current;
  for (std::size_t a = 0; a < n; ++a) {
    if (dominators[a] == 0) current.push_back(a);
  }
  std::size_t front = 0;
  while (!current.empty()) {
    std::stable_sort(current.begin(), current.end(), [&](std::size_t a, std::size_t b) {
      return matrix.value(a, tie_break_column) < matrix.value(b, tie_break_column);
    });
    std::vector<std::size_t> next;
    for (std::size_t w = 0; w < current.size(); ++w) {
      ranks[current[w]] = {front, w};
      for (std::size_t b : dominated[current[w]]) {
        if (--dominators[b] == 0) next.push_back(b);
      }
    }
    std::sort(next.begin(), next.end());
    current = std::move(next);
    ++front;
  }
  return ranks;
}

GuidedRanking guided_rank(std::span<const ProteinSequence> candidates, std::span<const double> sum_logs,
                          const ObjectiveSet& objectives) {
  objectives.validate();
  if (sum_logs.size() != candidates.size()) throw Error(ErrorCode::InvalidArgument, "one PLL per candidate is required");
  GuidedRanking out;
  if (candidates.empty()) return out;

  std::vector<std::vector<double>> columns;
  std::vector<Direction> directions;
  std::vector<std::string> names;
  std::vector<double> weights;
  std::vector<double> perplexity(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    perplexity[i] = std::exp(-sum_logs[i] / static_cast<double>(candidates[i].size()));
  }
  const bool lists_pll = std::any_of(objectives.objectives.begin(), objectives.objectives.end(),
                                     [](const ObjectiveSpec& o) { return o.name == kPseudoPerplexity; });
  if (!lists_pll) {
    columns.push_back(perplexity);
    directions.push_back(Direction::Minimize);
    names.emplace_back(kPseudoPerplexity);
    weights.push_back(1.0);
  }
  for (const auto& o : objectives.objectives) {
    if (o.name == kPseudoPerplexity) {
      columns.push_back(perplexity);
    } else {
      const ObjectiveSpec single[1] = {o};
      auto evaluated = orient_and_zscore(candidates, std::vector<ObjectiveSpec>(single, single + 1));
      columns.push_back(std::move(evaluated.raw));
    }
    directions.push_back(o.direction);
    names.push_back(o.name);
    weights.push_back(o.weight);
  }
  out.matrix = orient_and_zscore(columns, directions, names);

  out.order.resize(candidates.size());
  std::iota(out.order.begin(), out.order.end(), std::size_t{0});
  auto by_sequence = [&](std::size_t a, std::size_t b) { return candidates[a].str() < candidates[b].str(); };
  if (objectives.aggregation == Aggregation::Sts) {
    out.sts = sts_scalarize(out.matrix, weights);
    std::sort(out.order.begin(), out.order.end(), [&](std::size_t a, std::size_t b) {
      if (out.sts[a] != out.sts[b]) return out.sts[a] < out.sts[b];
      return by_sequence(a, b);
    });
  } else {
    const auto tie = static_cast<std::size_t>(std::find(names.begin(), names.end(), objectives.tie_break) - names.begin());
    out.nds = nds_rank(out.matrix, tie);
    std::sort(out.order.begin(), out.order.end(), [&](std::size_t a, std::size_t b) {
      if (out.nds[a].front != out.nds[b].front) return out.nds[a].front < out.nds[b].front;
      const double ta = out.matrix.value(a, tie);
      const double tb = out.matrix.value(b, tie);
      if (ta != tb) return ta < tb;
      return by_sequence(a, b);
    });
  }
  return out;
}

std::vector<std::size_t> threshold_filter(std::span<const ProteinSequence> candidates, Scorer& scorer,
                                          double threshold, Direction direction) {
  if (candidates.empty()) return {};
  std::vector<double> scores;
  try {
    scores = scorer.score(candidates);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::ScorerFailure, scorer.describe() + ": " + e.what());
  }
  if (scores.size() != candidates.size()) throw Error(ErrorCode::ScorerFailure, scorer.describe() + ": short response");
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i])) throw Error(ErrorCode::ScorerFailure, scorer.describe() + ": NaN for " + candidates[i].str());
    const bool pass = direction == Direction::Maximize ? scores[i] > threshold : scores[i] < threshold;
    if (pass) kept.push_back(i);
  }
  return kept;
}

}  // namespace pllbeam
