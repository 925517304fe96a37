#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "pllbeam/guidance.hpp"
#include "pllbeam/pll.hpp"
#include "pllbeam/provider.hpp"
#include "pllbeam/sequence.hpp"

namespace pllbeam {

struct BeamConfig {
  std::size_t beam_size = 5;
  std::size_t edit_budget = 3;
  double tau = 1.5;
  double gumbel_scale = 1.0;  // 0 disables the noise
  std::uint64_t rng_seed = 0;
  PositionMask mask;
  bool dedup = true;
  std::size_t threads = 1;
};

struct BeamEntry {
  CandidateSequence candidate;
  double perturbed_score = 0.0;  // sum_log + gumbel_scale * g
  PllScore clean;
  std::size_t step = 0;
  double guidance_score = 0.0;   // STS score or NDS front, guided runs only
};

struct BeamResult {
  std::vector<BeamEntry> pool;                 // every candidate scored at any step
  std::vector<std::vector<BeamEntry>> beams;   // surviving beam after each step
  std::vector<BeamEntry> outputs;              // pool members with exactly E edits, delivery order
};

/// Gumbel variate for one candidate; keyed by (rng_seed, step, child sequence) so the draw
/// never depends on scheduling.
double candidate_gumbel(std::uint64_t rng_seed, std::size_t step, const ProteinSequence& child);

/// Temperature-annealed stochastic beam search over exactly-E substitution variants.
/// Each step builds the profile of every surviving template (L passes each) and scores its
/// whole 1-edit neighbourhood with the wild-type marginal approximation. With objectives,
/// survivors are chosen by guided_rank on the Gumbel-perturbed PLLs instead.
BeamResult beam_search(MaskedLogitProvider& provider, const CandidateSequence& seed, const BeamConfig& config,
                       const ObjectiveSet* objectives = nullptr);

enum class PositionStrategy { Random, LowestEntropy, MaxProbability };
enum class Decode { Sample, Argmax };

std::string_view strategy_name(PositionStrategy s);
PositionStrategy parse_strategy(std::string_view name);

struct MutationSamplerConfig {
  std::size_t edit_budget = 3;
  double tau = 1.0;
  std::uint64_t rng_seed = 0;
  PositionMask mask;
  PositionStrategy strategy = PositionStrategy::Random;
  Decode decode = Decode::Sample;
};

/// Mask-one, resample-one for E iterations. Identity decodes are redrawn from the 19 other
/// residues and visited positions retire, so the result carries exactly E edits.
/// Random position choice costs E passes; the confidence-based strategies add one
/// unmasked scan per iteration to rank the eligible positions (2E passes).
CandidateSequence gibbs_sample(MaskedLogitProvider& provider, const CandidateSequence& seed,
                               const MutationSamplerConfig& config);

/// Masks E random positions at once, then unmasks one per iteration (E passes), choosing
/// which to decode next from the returned rows by the position strategy.
CandidateSequence denoise_sample(MaskedLogitProvider& provider, const CandidateSequence& seed,
                                 const MutationSamplerConfig& config);

enum class SamplerKind { Beam, Gibbs, GibbsArgmax, Denoise };

std::string_view sampler_name(SamplerKind k);
SamplerKind parse_sampler(std::string_view name);

struct GenerationConfig {
  SamplerKind kind = SamplerKind::Beam;
  std::size_t edit_budget = 3;
  std::size_t beam_size = 5;
  double tau = 1.5;
  double gumbel_scale = 1.0;
  std::uint64_t rng_seed = 0;
  std::optional<PositionMask> mask;  // full sequence when unset
  PositionStrategy strategy = PositionStrategy::Random;
  Decode decode = Decode::Sample;    // forced to Argmax for GibbsArgmax
  std::size_t per_seed_count = 100;
  std::size_t retry_factor = 10;
  bool dedup = true;
  std::size_t threads = 1;
};

struct GenerationOutput {
  CandidateSequence candidate;
  std::optional<PllScore> clean;
  std::optional<double> perturbed;
  std::optional<double> guidance_score;
};

struct SeedReport {
  std::string seed_id;
  std::size_t requested = 0;
  std::size_t achieved = 0;
  std::size_t attempts = 0;
  std::size_t pool_size = 0;
  bool retry_exhausted = false;
};

struct GenerationRun {
  GenerationConfig config;
  std::string provider_name;
  std::vector<std::string> seed_ids;
  std::vector<GenerationOutput> outputs;  // grouped by seed in input order, ranked within seed
  std::vector<SeedReport> seeds;
  Ledger ledger;  // forward passes spent by this run

  bool shortfall() const;
};

/// Runs the configured sampler for every seed. Mutation samplers repeat with derived RNG
/// streams until `per_seed_count` unique variants exist or `retry_factor * per_seed_count`
/// attempts are spent; beam runs deliver the top of their E-edit pool.
GenerationRun batch_generate(MaskedLogitProvider& provider, const std::vector<CandidateSequence>& seeds,
                             const GenerationConfig& config, const ObjectiveSet* objectives = nullptr);

/// Stream seed for chain `chain` of seed number `seed_index`.
std::uint64_t chain_seed(std::uint64_t rng_seed, std::size_t seed_index, std::size_t chain);

}  // namespace pllbeam
