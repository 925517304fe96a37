#include "pllbeam/pll.hpp"

#include <algorithm>
#include <cmath>

#include "pllbeam/error.hpp"
#include "pllbeam/parallel.hpp"

namespace pllbeam {

namespace {

const double kLogFloor = std::log(kProbabilityFloor);

void check_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw Error(ErrorCode::InvalidArgument, "temperature must be positive and finite");
  }
}

void check_same_length(const ProteinSequence& a, const ProteinSequence& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "template and child lengths differ");
}

}  // namespace

ProbRow log_softmax(const LogitRow& row, double tau) {
  ProbRow out{};
  double max = -INFINITY;
  for (std::size_t r = 0; r < kAlphabetSize; ++r) {
    out[r] = row[r] / tau;
    max = std::max(max, out[r]);
  }
  double total = 0.0;
  for (double v : out) total += std::exp(v - max);
  const double log_total = max + std::log(total);
  for (double& v : out) v = std::max(v - log_total, kLogFloor);
  return out;
}

ProbRow softmax(const LogitRow& row, double tau) {
  ProbRow out = log_softmax(row, tau);
  for (double& v : out) v = std::max(std::exp(v), kProbabilityFloor);
  return out;
}

PllScore PllScore::from_sum(double sum_log, std::size_t length) {
  PllScore s;
  s.sum_log = sum_log;
  s.per_residue = sum_log / static_cast<double>(length);
  s.pseudo_perplexity = std::exp(-s.per_residue);
  return s;
}

std::optional<Position> substitution_site(const ProteinSequence& templ, const ProteinSequence& child) {
  check_same_length(templ, child);
  std::optional<Position> site;
  for (Position i = 0; i < templ.size(); ++i) {
    if (templ[i] == child[i]) continue;
    if (site) {
      throw Error(ErrorCode::NotSingleSubstitution,
                  "child differs from template at positions " + std::to_string(*site + 1) + " and " +
                      std::to_string(i + 1));
    }
    site = i;
  }
  return site;
}

// ---------------------------------------------------------------------------

ConditionalProfile::ConditionalProfile(ProteinSequence templ, double tau,
                                       const std::vector<LogitRow>& single_mask_logits)
    : template_(std::move(templ)), tau_(tau) {
  check_tau(tau);
  if (single_mask_logits.size() != template_.size()) {
    throw Error(ErrorCode::LengthMismatch, "profile needs one logit row per template position");
  }
  probs_.reserve(template_.size());
  log_probs_.reserve(template_.size());
  for (const auto& row : single_mask_logits) {
    log_probs_.push_back(log_softmax(row, tau));
    probs_.push_back(softmax(row, tau));
  }
}

PllScore ConditionalProfile::template_score() const {
  double sum = 0.0;
  for (Position i = 0; i < template_.size(); ++i) sum += log_probs_[i][template_.index_at(i)];
  return PllScore::from_sum(sum, template_.size());
}

std::vector<ConditionalProfile> build_profiles(MaskedLogitProvider& provider,
                                               const std::vector<ProteinSequence>& templates, double tau,
                                               std::size_t threads) {
  check_tau(tau);
  std::vector<std::size_t> offsets(templates.size() + 1, 0);
  for (std::size_t t = 0; t < templates.size(); ++t) offsets[t + 1] = offsets[t] + templates[t].size();
  std::vector<LogitRow> rows(offsets.back());
  parallel_for(rows.size(), threads, [&](std::size_t flat) {
    const auto t = static_cast<std::size_t>(
        std::upper_bound(offsets.begin(), offsets.end(), flat) - offsets.begin() - 1);
    const Position i = flat - offsets[t];
    const Position masked[1] = {i};
    rows[flat] = provider.query(templates[t], masked).front();
  });
  std::vector<ConditionalProfile> out;
  out.reserve(templates.size());
  for (std::size_t t = 0; t < templates.size(); ++t) {
    std::vector<LogitRow> slice(rows.begin() + static_cast<std::ptrdiff_t>(offsets[t]),
                                rows.begin() + static_cast<std::ptrdiff_t>(offsets[t + 1]));
    out.emplace_back(templates[t], tau, slice);
  }
  return out;
}

ConditionalProfile build_profile(MaskedLogitProvider& provider, const ProteinSequence& templ, double tau,
                                 std::size_t threads) {
  return std::move(build_profiles(provider, {templ}, tau, threads).front());
}

std::shared_ptr<const ConditionalProfile> ProfileCache::get(MaskedLogitProvider& provider,
                                                            const ProteinSequence& templ, double tau,
                                                            std::size_t threads) {
  const auto key = std::make_pair(templ.str(), tau);
  {
    std::lock_guard lock(mutex_);
    if (auto it = profiles_.find(key); it != profiles_.end()) return it->second;
  }
  auto profile = std::make_shared<const ConditionalProfile>(build_profile(provider, templ, tau, threads));
  std::lock_guard lock(mutex_);
  return profiles_.emplace(key, std::move(profile)).first->second;
}

std::size_t ProfileCache::size() const {
  std::lock_guard lock(mutex_);
  return profiles_.size();
}

PllScore exact_pll(MaskedLogitProvider& provider, const ProteinSequence& sequence, double tau,
                   std::size_t threads) {
  return build_profile(provider, sequence, tau, threads).template_score();
}

// ---------------------------------------------------------------------------

PllScore approx_pll_wt(const ConditionalProfile& profile, const ProteinSequence& child) {
  substitution_site(profile.templ(), child);
  double sum = 0.0;
  for (Position i = 0; i < child.size(); ++i) sum += profile.log_prob(i, child.index_at(i));
  return PllScore::from_sum(sum, child.size());
}

DoubleMaskTerms::DoubleMaskTerms(MaskedLogitProvider& provider, const ConditionalProfile& profile, Position k,
                                 std::size_t threads)
    : k_(k), terms_(profile.size(), 0.0) {
  const auto& templ = profile.templ();
  if (k >= templ.size()) throw Error(ErrorCode::PositionOutOfRange, "double-mask site");
  const std::size_t n = templ.size();
  parallel_for(n, threads, [&](std::size_t i) {
    if (i == k) return;
    const Position masked[2] = {std::min(i, k), std::max(i, k)};
    const Position report[1] = {i};
    const auto row = provider.query(templ, masked, report).front();
    terms_[i] = log_softmax(row, profile.tau())[templ.index_at(i)];
  });
}

PllScore DoubleMaskTerms::score(const ConditionalProfile& profile, const ProteinSequence& child) const {
  const auto site = substitution_site(profile.templ(), child);
  if (!site || *site != k_) {
    throw Error(ErrorCode::NotSingleSubstitution, "child is not a substitution at site " + std::to_string(k_ + 1));
  }
  double sum = 0.0;
  for (Position i = 0; i < child.size(); ++i) {
    sum += i == k_ ? profile.log_prob(k_, child.index_at(k_)) : terms_[i];
  }
  return PllScore::from_sum(sum, child.size());
}

DoubleMaskTable::DoubleMaskTable(MaskedLogitProvider& provider, const ConditionalProfile& profile,
                                 std::size_t threads)
    : length_(profile.size()), terms_(length_ * length_, 0.0) {
  const auto& templ = profile.templ();
  std::vector<std::pair<Position, Position>> pairs;
  for (Position i = 0; i < length_; ++i) {
    for (Position j = i + 1; j < length_; ++j) pairs.emplace_back(i, j);
  }
  parallel_for(pairs.size(), threads, [&](std::size_t p) {
    const auto [i, j] = pairs[p];
    const Position masked[2] = {i, j};
    const auto rows = provider.query(templ, masked, masked);
    terms_[i * length_ + j] = log_softmax(rows[0], profile.tau())[templ.index_at(i)];
    terms_[j * length_ + i] = log_softmax(rows[1], profile.tau())[templ.index_at(j)];
  });
}

PllScore DoubleMaskTable::score(const ConditionalProfile& profile, const ProteinSequence& child) const {
  const auto site = substitution_site(profile.templ(), child);
  if (!site) throw Error(ErrorCode::NotSingleSubstitution, "child equals the template");
  const Position k = *site;
  double sum = 0.0;
  for (Position i = 0; i < child.size(); ++i) {
    sum += i == k ? profile.log_prob(k, child.index_at(k)) : terms_[i * length_ + k];
  }
  return PllScore::from_sum(sum, child.size());
}

PllScore approx_pll_double_mask(MaskedLogitProvider& provider, const ConditionalProfile& profile,
                                const ProteinSequence& child, std::size_t threads) {
  const auto site = substitution_site(profile.templ(), child);
  if (!site) throw Error(ErrorCode::NotSingleSubstitution, "child equals the template");
  return DoubleMaskTerms(provider, profile, *site, threads).score(profile, child);
}

PllScore approx_pll_nomask_child(MaskedLogitProvider& provider, const ProteinSequence& child, double tau) {
  check_tau(tau);
  std::vector<Position> all(child.size());
  for (Position i = 0; i < child.size(); ++i) all[i] = i;
  const auto rows = provider.query(child, {}, all);
  double sum = 0.0;
  for (Position i = 0; i < child.size(); ++i) sum += log_softmax(rows[i], tau)[child.index_at(i)];
  return PllScore::from_sum(sum, child.size());
}

NoMaskTemplate::NoMaskTemplate(MaskedLogitProvider& provider, const ProteinSequence& templ, double tau)
    : template_(templ) {
  check_tau(tau);
  std::vector<Position> all(templ.size());
  for (Position i = 0; i < templ.size(); ++i) all[i] = i;
  const auto rows = provider.query(templ, {}, all);
  log_probs_.reserve(rows.size());
  for (const auto& row : rows) log_probs_.push_back(log_softmax(row, tau));
}

PllScore NoMaskTemplate::score(const ProteinSequence& child) const {
  substitution_site(template_, child);
  double sum = 0.0;
  for (Position i = 0; i < child.size(); ++i) sum += log_probs_[i][child.index_at(i)];
  return PllScore::from_sum(sum, child.size());
}

PllScore approx_pll_nomask_template(const NoMaskTemplate& rows, const ProteinSequence& child) {
  return rows.score(child);
}

std::string_view approximation_name(Approximation a) {
  switch (a) {
    case Approximation::Exact: return "exact";
    case Approximation::DoubleMask: return "double-mask";
    case Approximation::WildTypeMarginal: return "wt";
    case Approximation::NoMaskChild: return "nomask-child";
    case Approximation::NoMaskTemplate: return "nomask-template";
  }
  return "unknown";
}

Approximation parse_approximation(std::string_view name) {
  for (auto a : {Approximation::Exact, Approximation::DoubleMask, Approximation::WildTypeMarginal,
                 Approximation::NoMaskChild, Approximation::NoMaskTemplate}) {
    if (approximation_name(a) == name) return a;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown approximation '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

std::vector<ScoredNeighbor> expand_neighborhood(const ConditionalProfile& profile,
                                                const CandidateSequence& candidate, const PositionMask& mask) {
  const auto& templ = candidate.sequence();
  if (templ != profile.templ()) {
    throw Error(ErrorCode::InvalidArgument, "profile was built for a different template");
  }
  mask.check_fits(templ.size());
  std::vector<Position> eligible;
  for (Position p : mask.positions()) {
    if (!candidate.is_edited(p)) eligible.push_back(p);
  }
  if (eligible.empty()) throw Error(ErrorCode::EmptyMask, "no eligible positions left to edit");

  // Summed in index order so each score is bitwise equal to approx_pll_wt of the child.
  std::vector<ScoredNeighbor> out;
  out.reserve(eligible.size() * (kAlphabetSize - 1));
  for (Position k : eligible) {
    const std::size_t current = templ.index_at(k);
    for (std::size_t r = 0; r < kAlphabetSize; ++r) {
      if (r == current) continue;
      double sum = 0.0;
      for (Position i = 0; i < templ.size(); ++i) {
        sum += i == k ? profile.log_prob(k, r) : profile.log_prob(i, templ.index_at(i));
      }
      out.push_back({apply_edit(candidate, k, residue_code(r)), PllScore::from_sum(sum, templ.size()), k, r});
    }
  }
  return out;
}

}  // namespace pllbeam
