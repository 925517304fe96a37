#include "pllbeam/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include "pllbeam/error.hpp"
#include "pllbeam/parallel.hpp"
#include "pllbeam/rng.hpp"

namespace pllbeam {

namespace {

void check_budget(std::size_t edit_budget, const PositionMask& mask, std::size_t length) {
  mask.check_fits(length);
  if (edit_budget == 0) throw Error(ErrorCode::InvalidArgument, "edit budget must be at least 1");
  if (edit_budget > mask.size()) {
    throw Error(ErrorCode::EditBudgetExceedsMask, "edit budget " + std::to_string(edit_budget) +
                                                      " exceeds the " + std::to_string(mask.size()) +
                                                      " editable positions");
  }
}

// Unbiased-enough index in [0, n) via the high half of a 128-bit product.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  const unsigned __int128 wide = static_cast<unsigned __int128>(rng()) * n;
  return static_cast<std::size_t>(wide >> 64);
}

double unit(std::mt19937_64& rng) { return rng::open_unit(rng()); }

std::size_t draw(const ProbRow& probs, std::optional<std::size_t> exclude, std::mt19937_64& rng) {
  double total = 0.0;
  for (std::size_t r = 0; r < kAlphabetSize; ++r) {
    if (r != exclude) total += probs[r];
  }
  double u = unit(rng) * total;
  std::size_t last = 0;
  for (std::size_t r = 0; r < kAlphabetSize; ++r) {
    if (r == exclude) continue;
    last = r;
    if (u < probs[r]) return r;
    u -= probs[r];
  }
  return last;
}

std::size_t decode_residue(const LogitRow& logits, double tau, std::size_t current, Decode decode,
                           std::mt19937_64& rng) {
  const ProbRow probs = softmax(logits, tau);
  if (decode == Decode::Argmax) {
    std::size_t best = current == 0 ? 1 : 0;
    for (std::size_t r = 0; r < kAlphabetSize; ++r) {
      if (r != current && probs[r] > probs[best]) best = r;
    }
    return best;
  }
  const std::size_t first = draw(probs, std::nullopt, rng);
  if (first != current) return first;
  return draw(probs, current, rng);
}

// Strategies read model confidence at tau = 1 whatever the sampling temperature.
double entropy(const LogitRow& logits) {
  const ProbRow p = softmax(logits, 1.0);
  double h = 0.0;
  for (double v : p) h -= v * std::log(v);
  return h;
}

double max_probability(const LogitRow& logits) {
  const ProbRow p = softmax(logits, 1.0);
  return *std::max_element(p.begin(), p.end());
}

/// Index into `rows` of the position to act on next.
std::size_t pick_by_strategy(PositionStrategy strategy, const std::vector<LogitRow>& rows, std::mt19937_64& rng) {
  if (rows.size() == 1) return 0;
  switch (strategy) {
    case PositionStrategy::Random: return uniform_index(rng, rows.size());
    case PositionStrategy::LowestEntropy: {
      std::size_t best = 0;
      double best_h = entropy(rows[0]);
      for (std::size_t i = 1; i < rows.size(); ++i) {
        const double h = entropy(rows[i]);
        if (h < best_h) {
          best = i;
          best_h = h;
        }
      }
      return best;
    }
    case PositionStrategy::MaxProbability: {
      std::size_t best = 0;
      double best_p = max_probability(rows[0]);
      for (std::size_t i = 1; i < rows.size(); ++i) {
        const double p = max_probability(rows[i]);
        if (p > best_p) {
          best = i;
          best_p = p;
        }
      }
      return best;
    }
  }
  return 0;
}

bool better_unguided(const BeamEntry& a, const BeamEntry& b) {
  if (a.perturbed_score != b.perturbed_score) return a.perturbed_score > b.perturbed_score;
  return a.candidate.sequence().str() < b.candidate.sequence().str();
}

bool better_clean(const BeamEntry& a, const BeamEntry& b) {
  if (a.clean.sum_log != b.clean.sum_log) return a.clean.sum_log > b.clean.sum_log;
  return a.candidate.sequence().str() < b.candidate.sequence().str();
}

/// Orders entries best-first, either by perturbed score or by the objective set.
void rank_entries(std::vector<BeamEntry>& entries, const ObjectiveSet* objectives, bool use_clean) {
  if (!objectives) {
    std::sort(entries.begin(), entries.end(), use_clean ? better_clean : better_unguided);
    return;
  }
  std::vector<ProteinSequence> seqs;
  std::vector<double> plls;
  seqs.reserve(entries.size());
  plls.reserve(entries.size());
  for (const auto& e : entries) {
    seqs.push_back(e.candidate.sequence());
    plls.push_back(use_clean ? e.clean.sum_log : e.perturbed_score);
  }
  const auto ranking = guided_rank(seqs, plls, *objectives);
  std::vector<BeamEntry> ordered;
  ordered.reserve(entries.size());
  for (std::size_t idx : ranking.order) {
    BeamEntry e = entries[idx];
    e.guidance_score = objectives->aggregation == Aggregation::Sts ? ranking.sts[idx]
                                                                   : static_cast<double>(ranking.nds[idx].front);
    ordered.push_back(std::move(e));
  }
  entries = std::move(ordered);
}

}  // namespace

double candidate_gumbel(std::uint64_t rng_seed, std::size_t step, const ProteinSequence& child) {
  return rng::gumbel(rng::derive({rng_seed, step, rng::hash_string(child.str())}));
}

std::uint64_t chain_seed(std::uint64_t rng_seed, std::size_t seed_index, std::size_t chain) {
  return rng::derive({rng_seed, 0x636861696eULL, seed_index, chain});
}

BeamResult beam_search(MaskedLogitProvider& provider, const CandidateSequence& seed, const BeamConfig& config,
                       const ObjectiveSet* objectives) {
  check_budget(config.edit_budget, config.mask, seed.size());
  if (config.beam_size == 0) throw Error(ErrorCode::InvalidArgument, "beam size must be at least 1");
  if (!(config.gumbel_scale >= 0.0)) throw Error(ErrorCode::InvalidArgument, "gumbel scale must be non-negative");
  if (objectives) objectives->validate();

  BeamResult result;
  std::vector<CandidateSequence> templates = {seed};
  for (std::size_t step = 1; step <= config.edit_budget; ++step) {
    std::vector<ProteinSequence> template_seqs;
    template_seqs.reserve(templates.size());
    for (const auto& t : templates) template_seqs.push_back(t.sequence());
    const auto profiles = build_profiles(provider, template_seqs, config.tau, config.threads);

    std::vector<BeamEntry> scored;
    std::unordered_map<std::string, std::size_t> seen;
    for (std::size_t t = 0; t < templates.size(); ++t) {
      for (auto& n : expand_neighborhood(profiles[t], templates[t], config.mask)) {
        BeamEntry entry;
        entry.perturbed_score = n.score.sum_log;
        if (config.gumbel_scale > 0.0) {
          entry.perturbed_score += config.gumbel_scale * candidate_gumbel(config.rng_seed, step, n.candidate.sequence());
        }
        entry.clean = n.score;
        entry.step = step;
        entry.candidate = std::move(n.candidate);
        if (config.dedup) {
          const auto [it, fresh] = seen.emplace(entry.candidate.sequence().str(), scored.size());
          if (!fresh) {
            // Reached from two templates: keep the better-scored copy.
            if (entry.perturbed_score > scored[it->second].perturbed_score) scored[it->second] = std::move(entry);
            continue;
          }
        }
        scored.push_back(std::move(entry));
      }
    }

    rank_entries(scored, objectives, false);
    result.pool.insert(result.pool.end(), scored.begin(), scored.end());
    std::vector<BeamEntry> beam(scored.begin(),
                                scored.begin() + static_cast<std::ptrdiff_t>(std::min(config.beam_size, scored.size())));
    templates.clear();
    for (const auto& e : beam) templates.push_back(e.candidate);
    result.beams.push_back(std::move(beam));
    if (step == config.edit_budget) {
      result.outputs = std::move(scored);
      rank_entries(result.outputs, objectives, true);
    }
  }
  return result;
}

CandidateSequence gibbs_sample(MaskedLogitProvider& provider, const CandidateSequence& seed,
                               const MutationSamplerConfig& config) {
  check_budget(config.edit_budget, config.mask, seed.size());
  std::mt19937_64 rng(config.rng_seed);
  CandidateSequence current = seed;
  std::vector<Position> eligible;
  for (Position p : config.mask.positions()) {
    if (!seed.is_edited(p)) eligible.push_back(p);
  }
  if (eligible.size() < config.edit_budget) {
    throw Error(ErrorCode::EditBudgetExceedsMask, "too few unedited positions in the mask");
  }
  for (std::size_t t = 0; t < config.edit_budget; ++t) {
    std::size_t pick = 0;
    if (config.strategy == PositionStrategy::Random) {
      pick = uniform_index(rng, eligible.size());
    } else {
      const auto scan = provider.query(current.sequence(), {}, eligible);
      pick = pick_by_strategy(config.strategy, scan, rng);
    }
    const Position pos = eligible[pick];
    const Position masked[1] = {pos};
    const auto row = provider.query(current.sequence(), masked).front();
    const std::size_t residue =
        decode_residue(row, config.tau, current.sequence().index_at(pos), config.decode, rng);
    current = apply_edit(current, pos, residue_code(residue));
    eligible.erase(eligible.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return current;
}

CandidateSequence denoise_sample(MaskedLogitProvider& provider, const CandidateSequence& seed,
                                 const MutationSamplerConfig& config) {
  check_budget(config.edit_budget, config.mask, seed.size());
  std::mt19937_64 rng(config.rng_seed);
  std::vector<Position> pool;
  for (Position p : config.mask.positions()) {
    if (!seed.is_edited(p)) pool.push_back(p);
  }
  if (pool.size() < config.edit_budget) {
    throw Error(ErrorCode::EditBudgetExceedsMask, "too few unedited positions in the mask");
  }
  // Partial Fisher-Yates: the first E slots are a uniform draw without replacement.
  for (std::size_t t = 0; t < config.edit_budget; ++t) {
    const std::size_t j = t + uniform_index(rng, pool.size() - t);
    std::swap(pool[t], pool[j]);
  }
  std::vector<Position> masked(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(config.edit_budget));
  std::sort(masked.begin(), masked.end());

  CandidateSequence current = seed;
  while (!masked.empty()) {
    const auto rows = provider.query(current.sequence(), masked);
    const std::size_t pick = pick_by_strategy(config.strategy, rows, rng);
    const Position pos = masked[pick];
    const std::size_t residue =
        decode_residue(rows[pick], config.tau, current.sequence().index_at(pos), config.decode, rng);
    current = apply_edit(current, pos, residue_code(residue));
    masked.erase(masked.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return current;
}

std::string_view strategy_name(PositionStrategy s) {
  switch (s) {
    case PositionStrategy::Random: return "random";
    case PositionStrategy::LowestEntropy: return "lowest_entropy";
    case PositionStrategy::MaxProbability: return "max_probability";
  }
  return "random";
}

PositionStrategy parse_strategy(std::string_view name) {
  for (auto s : {PositionStrategy::Random, PositionStrategy::LowestEntropy, PositionStrategy::MaxProbability}) {
    if (strategy_name(s) == name) return s;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown position strategy '" + std::string(name) + "'");
}

std::string_view sampler_name(SamplerKind k) {
  switch (k) {
    case SamplerKind::Beam: return "beam";
    case SamplerKind::Gibbs: return "gibbs";
    case SamplerKind::GibbsArgmax: return "gibbs-argmax";
    case SamplerKind::Denoise: return "denoise";
  }
  return "beam";
}

SamplerKind parse_sampler(std::string_view name) {
  for (auto k : {SamplerKind::Beam, SamplerKind::Gibbs, SamplerKind::GibbsArgmax, SamplerKind::Denoise}) {
    if (sampler_name(k) == name) return k;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown sampler '" + std::string(name) + "'");
}

bool GenerationRun::shortfall() const {
  return std::any_of(seeds.begin(), seeds.end(), [](const SeedReport& s) { return s.achieved < s.requested; });
}

GenerationRun batch_generate(MaskedLogitProvider& provider, const std::vector<CandidateSequence>& seeds,
                             const GenerationConfig& config, const ObjectiveSet* objectives) {
  if (config.per_seed_count == 0) throw Error(ErrorCode::InvalidArgument, "count must be at least 1");
  if (objectives && config.kind != SamplerKind::Beam) {
    throw Error(ErrorCode::InvalidArgument, "objective guidance applies to the beam sampler only");
  }
  std::optional<ObjectiveSet> memo;
  if (objectives) memo = objectives->memoized();

  GenerationRun run;
  run.config = config;
  run.provider_name = provider.name();
  const Ledger before = provider.ledger();

  for (std::size_t s = 0; s < seeds.size(); ++s) {
    const auto& seed = seeds[s];
    const PositionMask mask = config.mask.value_or(PositionMask::full(seed.size()));
    run.seed_ids.push_back(seed.seed_id());
    SeedReport report;
    report.seed_id = seed.seed_id();
    report.requested = config.per_seed_count;

    if (config.kind == SamplerKind::Beam) {
      BeamConfig bc;
      bc.beam_size = config.beam_size;
      bc.edit_budget = config.edit_budget;
      bc.tau = config.tau;
      bc.gumbel_scale = config.gumbel_scale;
      bc.rng_seed = rng::derive({config.rng_seed, s});
      bc.mask = mask;
      bc.dedup = config.dedup;
      bc.threads = config.threads;
      auto result = beam_search(provider, seed, bc, memo ? &*memo : nullptr);
      report.attempts = 1;
      report.pool_size = result.pool.size();
      const std::size_t n = std::min(config.per_seed_count, result.outputs.size());
      for (std::size_t i = 0; i < n; ++i) {
        auto& e = result.outputs[i];
        run.outputs.push_back({std::move(e.candidate), e.clean, e.perturbed_score,
                               memo ? std::optional<double>(e.guidance_score) : std::nullopt});
      }
      report.achieved = n;
      run.seeds.push_back(report);
      continue;
    }

    MutationSamplerConfig mc;
    mc.edit_budget = config.edit_budget;
    mc.tau = config.tau;
    mc.mask = mask;
    mc.strategy = config.strategy;
    mc.decode = config.kind == SamplerKind::GibbsArgmax ? Decode::Argmax : config.decode;
    check_budget(mc.edit_budget, mc.mask, seed.size());

    const std::size_t budget = config.retry_factor * config.per_seed_count;
    std::set<std::string> unique;
    std::vector<CandidateSequence> kept;
    std::size_t attempts = 0;
    // Blocks are sized by what is still missing, never by thread count, so the set of
    // chains run (and the ledger) is the same for any parallelism.
    while (kept.size() < config.per_seed_count && attempts < budget) {
      const std::size_t block = std::min(config.per_seed_count - kept.size(), budget - attempts);
      std::vector<CandidateSequence> drawn(block);
      parallel_for(block, config.threads, [&](std::size_t b) {
        MutationSamplerConfig chain = mc;
        chain.rng_seed = chain_seed(config.rng_seed, s, attempts + b);
        drawn[b] = config.kind == SamplerKind::Denoise ? denoise_sample(provider, seed, chain)
                                                       : gibbs_sample(provider, seed, chain);
      });
      for (auto& c : drawn) {
        if (unique.insert(c.sequence().str()).second) kept.push_back(std::move(c));
      }
      attempts += block;
    }
    report.attempts = attempts;
    report.pool_size = kept.size();
    report.achieved = kept.size();
    report.retry_exhausted = kept.size() < config.per_seed_count;
    for (auto& c : kept) run.outputs.push_back({std::move(c), std::nullopt, std::nullopt, std::nullopt});
    run.seeds.push_back(report);
  }

  const Ledger after = provider.ledger();
  run.ledger = {after.logical - before.logical, after.physical - before.physical};
  return run;
}

}  // namespace pllbeam
