#include "pllbeam/pllbeam.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <new>

#include <json.hpp>

#include "pllbeam/error.hpp"
#include "pllbeam/io.hpp"
#include "pllbeam/metrics.hpp"
#include "pllbeam/parallel.hpp"
#include "pllbeam/pll.hpp"
#include "pllbeam/provider.hpp"
#include "pllbeam/remote.hpp"
#include "pllbeam/samplers.hpp"
#include "pllbeam/scorers.hpp"

using namespace pllbeam;
using nlohmann::json;

struct pb_provider {
  std::unique_ptr<MaskedLogitProvider> impl;
  std::string spec;
  std::string name;
};

struct pb_candidates {
  io::CandidateTable table;
  std::vector<std::string> edits_text;
  std::vector<std::string> seed_text;

  void refresh() {
    edits_text.clear();
    seed_text.clear();
    for (const auto& row : table.rows) {
      edits_text.push_back(format_edits(row.candidate.edits()));
      seed_text.push_back(row.candidate.seed_sequence().str());
    }
  }
};

struct pb_mask {
  PositionMask mask;
};

struct pb_objectives {
  ObjectiveSet set;
};

struct pb_run {
  GenerationRun run;
  pb_candidates outputs;
  bool guided = false;
};

struct pb_freqtable {
  metrics::FrequencyTable table;
};

struct pb_pka {
  metrics::PkaSet pka;
};

namespace {

thread_local std::string last_error;

template <class F>
pb_status guard(F&& fn) {
  try {
    fn();
    last_error.clear();
    return PB_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return static_cast<pb_status>(static_cast<int>(e.code()));
  } catch (const json::exception& e) {
    last_error = std::string("Parse: ") + e.what();
    return PB_ERR_PARSE;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return PB_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return PB_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw Error(ErrorCode::InvalidArgument, std::string(what) + " is null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

const io::CandidateRecord& row_at(const pb_candidates* c, size_t index) {
  require(c, "candidates");
  if (index >= c->table.rows.size()) throw Error(ErrorCode::InvalidArgument, "candidate index out of range");
  return c->table.rows[index];
}

std::vector<ProteinSequence> sequences_of(const pb_candidates* c) {
  std::vector<ProteinSequence> out;
  out.reserve(c->table.rows.size());
  for (const auto& row : c->table.rows) out.push_back(row.candidate.sequence());
  return out;
}

std::vector<CandidateSequence> candidates_of(const pb_candidates* c) {
  std::vector<CandidateSequence> out;
  out.reserve(c->table.rows.size());
  for (const auto& row : c->table.rows) out.push_back(row.candidate);
  return out;
}

const ObjectiveSpec* find_objective(const pb_objectives* o, const char* name) {
  for (const auto& spec : o->set.objectives) {
    if (spec.name == name) return &spec;
  }
  return nullptr;
}

std::vector<double> objective_scores(const pb_objectives* objectives, const char* name,
                                     const pb_candidates* candidates) {
  require(objectives, "objectives");
  require(name, "name");
  require(candidates, "candidates");
  const auto* spec = find_objective(objectives, name);
  if (!spec) throw Error(ErrorCode::InvalidArgument, std::string("unknown objective '") + name + "'");
  if (!spec->scorer) throw Error(ErrorCode::InvalidArgument, std::string("objective '") + name + "' has no scorer");
  if (candidates->table.rows.empty()) return {};
  const auto seqs = sequences_of(candidates);
  const auto values = spec->scorer->score(seqs);
  if (values.size() != seqs.size()) {
    throw Error(ErrorCode::ScorerFailure, spec->name + " returned the wrong number of scores");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(ErrorCode::ScorerFailure,
                  spec->name + " returned a non-finite score for " + candidates->table.rows[i].id);
    }
  }
  return values;
}

std::size_t resolve_threads(std::size_t threads) { return threads == 0 ? default_thread_count() : threads; }

}  // namespace

extern "C" {

const char* pb_version(void) { return "1.0.0"; }

const char* pb_last_error(void) { return last_error.c_str(); }

const char* pb_status_name(pb_status status) {
  switch (status) {
    case PB_OK: return "Ok";
    case PB_ERR_INTERNAL: return "Internal";
    default: break;
  }
  const int code = static_cast<int>(status);
  if (code >= 1 && code <= static_cast<int>(ErrorCode::Parse)) {
    return error_code_name(static_cast<ErrorCode>(code)).data();
  }
  return "Unknown";
}

void pb_string_free(char* s) { std::free(s); }

// ---- providers ---------------------------------------------------------------

pb_status pb_provider_open(const char* spec, pb_provider** out) {
  return guard([&] {
    require(spec, "spec");
    require(out, "out");
    auto handle = std::make_unique<pb_provider>();
    handle->impl = open_provider(spec);
    handle->spec = spec;
    handle->name = handle->impl->name();
    *out = handle.release();
  });
}

void pb_provider_free(pb_provider* provider) { delete provider; }

const char* pb_provider_name(const pb_provider* provider) { return provider ? provider->name.c_str() : ""; }

pb_status pb_provider_info_json(const pb_provider* provider, char** out) {
  return guard([&] {
    require(provider, "provider");
    require(out, "out");
    json info;
    info["name"] = provider->name;
    info["spec"] = provider->spec;
    info["alphabet"] = provider->impl->alphabet_order();
    if (auto len = provider->impl->max_length()) {
      info["max_length"] = *len;
    } else {
      info["max_length"] = nullptr;
    }
    if (const auto* remote = dynamic_cast<const RemoteProvider*>(provider->impl.get())) {
      info["remote_info"] = json::parse(remote->info_json());
    }
    *out = dup_string(info.dump());
  });
}

void pb_provider_ledger(const pb_provider* provider, uint64_t* logical, uint64_t* physical) {
  if (!provider) return;
  const Ledger l = provider->impl->ledger();
  if (logical) *logical = l.logical;
  if (physical) *physical = l.physical;
}

void pb_provider_reset_ledger(pb_provider* provider) {
  if (provider) provider->impl->reset_ledger();
}

void pb_provider_set_memoize(pb_provider* provider, int enabled) {
  if (provider) provider->impl->set_memoize(enabled != 0);
}

pb_status pb_provider_write_random(const char* kind, size_t length, uint64_t seed, double field_scale,
                                   double coupling_scale, double self_weight, const char* path) {
  return guard([&] {
    require(kind, "kind");
    require(path, "path");
    if (length == 0) throw Error(ErrorCode::InvalidArgument, "length must be positive");
    const std::string k = kind;
    if (k == "pssm") {
      PssmProvider::random(length, seed, field_scale)->save(path);
    } else if (k == "coupled") {
      CoupledProvider::random(length, seed, field_scale, coupling_scale, self_weight)->save(path);
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown provider kind '" + k + "'");
    }
  });
}

// ---- candidates ----------------------------------------------------------------

pb_status pb_seeds_read_fasta(const char* path, pb_candidates** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    auto handle = std::make_unique<pb_candidates>();
    handle->table.rows = io::seeds_from_fasta(io::read_fasta_file(path));
    if (handle->table.rows.empty()) throw Error(ErrorCode::InvalidArgument, std::string(path) + " holds no sequences");
    handle->refresh();
    *out = handle.release();
  });
}

pb_status pb_candidates_read(const char* path, const pb_candidates* seeds, pb_candidates** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    auto handle = std::make_unique<pb_candidates>();
    static const std::vector<io::CandidateRecord> none;
    handle->table = io::read_candidates_file(path, seeds ? seeds->table.rows : none);
    handle->refresh();
    *out = handle.release();
  });
}

pb_status pb_candidates_write_tsv(const pb_candidates* candidates, const char* path) {
  return guard([&] {
    require(candidates, "candidates");
    require(path, "path");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::Io, std::string("cannot write ") + path);
    io::write_candidate_tsv(f, candidates->table);
    if (!f.flush()) throw Error(ErrorCode::Io, std::string("cannot write ") + path);
  });
}

pb_status pb_candidates_write_fasta(const pb_candidates* candidates, const char* path) {
  return guard([&] {
    require(candidates, "candidates");
    require(path, "path");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::Io, std::string("cannot write ") + path);
    io::write_fasta(f, io::candidates_to_fasta(candidates->table.rows));
    if (!f.flush()) throw Error(ErrorCode::Io, std::string("cannot write ") + path);
  });
}

void pb_candidates_free(pb_candidates* candidates) { delete candidates; }

size_t pb_candidates_size(const pb_candidates* candidates) {
  return candidates ? candidates->table.rows.size() : 0;
}

const char* pb_candidates_id(const pb_candidates* candidates, size_t index) {
  if (!candidates || index >= candidates->table.rows.size()) return nullptr;
  return candidates->table.rows[index].id.c_str();
}

const char* pb_candidates_seed_id(const pb_candidates* candidates, size_t index) {
  if (!candidates || index >= candidates->table.rows.size()) return nullptr;
  return candidates->table.rows[index].candidate.seed_id().c_str();
}

const char* pb_candidates_sequence(const pb_candidates* candidates, size_t index) {
  if (!candidates || index >= candidates->table.rows.size()) return nullptr;
  return candidates->table.rows[index].candidate.sequence().str().c_str();
}

const char* pb_candidates_seed_sequence(const pb_candidates* candidates, size_t index) {
  if (!candidates || index >= candidates->seed_text.size()) return nullptr;
  return candidates->seed_text[index].c_str();
}

const char* pb_candidates_edits(const pb_candidates* candidates, size_t index) {
  if (!candidates || index >= candidates->edits_text.size()) return nullptr;
  return candidates->edits_text[index].c_str();
}

size_t pb_candidates_edit_count(const pb_candidates* candidates, size_t index) {
  if (!candidates || index >= candidates->table.rows.size()) return 0;
  return candidates->table.rows[index].candidate.edit_count();
}

const char* pb_candidates_field(const pb_candidates* candidates, size_t index, const char* column) {
  if (!candidates || !column || index >= candidates->table.rows.size()) return nullptr;
  const auto& fields = candidates->table.rows[index].fields;
  auto it = fields.find(column);
  return it == fields.end() ? nullptr : it->second.c_str();
}

pb_status pb_candidates_set_field(pb_candidates* candidates, size_t index, const char* column, const char* value) {
  return guard([&] {
    require(column, "column");
    require(value, "value");
    row_at(candidates, index);
    const std::string name = column;
    if (name.empty() || name == "id" || name == "seed_id" || name == "sequence" || name == "edits" ||
        name.find_first_of("\t\n") != std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, "invalid column name '" + name + "'");
    }
    if (std::string_view(value).find_first_of("\t\n") != std::string_view::npos) {
      throw Error(ErrorCode::InvalidArgument, "field values may not contain tabs or newlines");
    }
    auto& cols = candidates->table.extra_columns;
    if (std::find(cols.begin(), cols.end(), name) == cols.end()) cols.push_back(name);
    candidates->table.rows[index].fields[name] = value;
  });
}

pb_status pb_candidates_select(const pb_candidates* candidates, const size_t* indices, size_t n,
                               pb_candidates** out) {
  return guard([&] {
    require(candidates, "candidates");
    require(out, "out");
    if (n > 0) require(indices, "indices");
    auto handle = std::make_unique<pb_candidates>();
    handle->table.extra_columns = candidates->table.extra_columns;
    for (size_t k = 0; k < n; ++k) handle->table.rows.push_back(row_at(candidates, indices[k]));
    handle->refresh();
    *out = handle.release();
  });
}

pb_status pb_mask_read(const char* path, pb_mask** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    auto handle = std::make_unique<pb_mask>();
    handle->mask = io::read_mask_file(path);
    *out = handle.release();
  });
}

void pb_mask_free(pb_mask* mask) { delete mask; }

size_t pb_mask_size(const pb_mask* mask) { return mask ? mask->mask.size() : 0; }

// ---- scoring ----------------------------------------------------------------------

pb_status pb_score(pb_provider* provider, const pb_candidates* candidates, const char* approximation, double tau,
                   size_t threads, double* sum_log, double* per_residue, double* pseudo_perplexity,
                   uint64_t* forward_passes) {
  return guard([&] {
    require(provider, "provider");
    require(candidates, "candidates");
    require(approximation, "approximation");
    const auto approx = parse_approximation(approximation);
    threads = resolve_threads(threads);
    auto& model = *provider->impl;
    const auto& rows = candidates->table.rows;
    const std::size_t n = rows.size();
    const Ledger before = model.ledger();
    std::vector<PllScore> scores(n);

    // Templates in first-appearance order so query issue order is input-determined.
    std::vector<ProteinSequence> templates;
    std::map<std::string, std::size_t> template_index;
    std::vector<std::size_t> template_of(n);
    for (std::size_t c = 0; c < n; ++c) {
      const auto seed = rows[c].candidate.seed_sequence();
      auto [it, fresh] = template_index.try_emplace(seed.str(), templates.size());
      if (fresh) templates.push_back(seed);
      template_of[c] = it->second;
    }

    switch (approx) {
      case Approximation::Exact:
        for (std::size_t c = 0; c < n; ++c) scores[c] = exact_pll(model, rows[c].candidate.sequence(), tau, threads);
        break;
      case Approximation::NoMaskChild:
        parallel_for(n, threads, [&](std::size_t c) {
          scores[c] = approx_pll_nomask_child(model, rows[c].candidate.sequence(), tau);
        });
        break;
      case Approximation::NoMaskTemplate: {
        std::vector<std::unique_ptr<NoMaskTemplate>> passes(templates.size());
        parallel_for(templates.size(), threads,
                     [&](std::size_t t) { passes[t] = std::make_unique<NoMaskTemplate>(model, templates[t], tau); });
        for (std::size_t c = 0; c < n; ++c) scores[c] = passes[template_of[c]]->score(rows[c].candidate.sequence());
        break;
      }
      case Approximation::WildTypeMarginal:
      case Approximation::DoubleMask: {
        const auto profiles = build_profiles(model, templates, tau, threads);
        if (approx == Approximation::WildTypeMarginal) {
          for (std::size_t c = 0; c < n; ++c) {
            scores[c] = approx_pll_wt(profiles[template_of[c]], rows[c].candidate.sequence());
          }
          break;
        }
        // One set of L-1 pair queries per (template, site), shared by all children there.
        std::map<std::pair<std::size_t, Position>, std::unique_ptr<DoubleMaskTerms>> terms;
        for (std::size_t c = 0; c < n; ++c) {
          const auto& profile = profiles[template_of[c]];
          const auto site = substitution_site(profile.templ(), rows[c].candidate.sequence());
          if (!site) {
            throw Error(ErrorCode::NotSingleSubstitution,
                        "candidate " + rows[c].id + " has no substitution to double-mask");
          }
          auto& slot = terms[{template_of[c], *site}];
          if (!slot) slot = std::make_unique<DoubleMaskTerms>(model, profile, *site, threads);
          scores[c] = slot->score(profile, rows[c].candidate.sequence());
        }
        break;
      }
    }

    for (std::size_t c = 0; c < n; ++c) {
      if (sum_log) sum_log[c] = scores[c].sum_log;
      if (per_residue) per_residue[c] = scores[c].per_residue;
      if (pseudo_perplexity) pseudo_perplexity[c] = scores[c].pseudo_perplexity;
    }
    if (forward_passes) *forward_passes = model.ledger().logical - before.logical;
  });
}

// ---- generation ---------------------------------------------------------------------

void pb_generate_config_default(pb_generate_config* config) {
  if (!config) return;
  const GenerationConfig d;
  config->sampler = "beam";
  config->edits = d.edit_budget;
  config->beam_size = d.beam_size;
  config->tau = d.tau;
  config->gumbel_scale = d.gumbel_scale;
  config->rng_seed = d.rng_seed;
  config->count = d.per_seed_count;
  config->retry_factor = d.retry_factor;
  config->strategy = "random";
  config->argmax = 0;
  config->dedup = d.dedup ? 1 : 0;
  config->threads = 0;
}

pb_status pb_generate(pb_provider* provider, const pb_candidates* seeds, const pb_mask* mask,
                      const pb_generate_config* config, const pb_objectives* objectives, pb_run** out) {
  return guard([&] {
    require(provider, "provider");
    require(seeds, "seeds");
    require(config, "config");
    require(out, "out");
    GenerationConfig cfg;
    cfg.kind = parse_sampler(config->sampler ? config->sampler : "beam");
    cfg.edit_budget = config->edits;
    cfg.beam_size = config->beam_size;
    cfg.tau = config->tau;
    cfg.gumbel_scale = config->gumbel_scale;
    cfg.rng_seed = config->rng_seed;
    cfg.per_seed_count = config->count;
    cfg.retry_factor = config->retry_factor;
    cfg.strategy = parse_strategy(config->strategy ? config->strategy : "random");
    cfg.decode = config->argmax ? Decode::Argmax : Decode::Sample;
    cfg.dedup = config->dedup != 0;
    cfg.threads = resolve_threads(config->threads);
    if (mask) cfg.mask = mask->mask;

    auto handle = std::make_unique<pb_run>();
    handle->guided = objectives != nullptr;
    handle->run = batch_generate(*provider->impl, candidates_of(seeds), cfg, objectives ? &objectives->set : nullptr);

    auto& table = handle->outputs.table;
    table.extra_columns = {"rank", "sum_log", "per_residue", "pseudo_perplexity", "perturbed_score"};
    if (handle->guided) table.extra_columns.push_back("guidance_score");
    std::map<std::string, std::size_t> rank_in_seed;
    for (const auto& o : handle->run.outputs) {
      const std::size_t rank = ++rank_in_seed[o.candidate.seed_id()];
      io::CandidateRecord rec{o.candidate.seed_id() + "." + std::to_string(rank), o.candidate, {}};
      const double nan = std::nan("");
      rec.fields["rank"] = std::to_string(rank);
      rec.fields["sum_log"] = io::format_double(o.clean ? o.clean->sum_log : nan);
      rec.fields["per_residue"] = io::format_double(o.clean ? o.clean->per_residue : nan);
      rec.fields["pseudo_perplexity"] = io::format_double(o.clean ? o.clean->pseudo_perplexity : nan);
      rec.fields["perturbed_score"] = io::format_double(o.perturbed.value_or(nan));
      if (handle->guided) rec.fields["guidance_score"] = io::format_double(o.guidance_score.value_or(nan));
      table.rows.push_back(std::move(rec));
    }
    handle->outputs.refresh();
    *out = handle.release();
  });
}

void pb_run_free(pb_run* run) { delete run; }

const pb_candidates* pb_run_outputs(const pb_run* run) { return run ? &run->outputs : nullptr; }

int pb_run_shortfall(const pb_run* run) { return run && run->run.shortfall() ? 1 : 0; }

pb_status pb_run_summary_json(const pb_run* run, char** out) {
  return guard([&] {
    require(run, "run");
    require(out, "out");
    const auto& r = run->run;
    const auto& c = r.config;
    json doc;
    doc["sampler"] = sampler_name(c.kind);
    doc["provider"] = r.provider_name;
    doc["config"] = {{"edits", c.edit_budget},
                     {"beam_size", c.beam_size},
                     {"tau", c.tau},
                     {"gumbel_scale", c.gumbel_scale},
                     {"rng_seed", c.rng_seed},
                     {"count", c.per_seed_count},
                     {"retry_factor", c.retry_factor},
                     {"strategy", strategy_name(c.strategy)},
                     {"decode", c.decode == Decode::Argmax ? "argmax" : "sample"},
                     {"dedup", c.dedup},
                     {"guided", run->guided}};
    if (c.mask) {
      std::vector<std::size_t> one_based;
      for (Position p : c.mask->positions()) one_based.push_back(p + 1);
      doc["config"]["mask"] = one_based;
    } else {
      doc["config"]["mask"] = nullptr;
    }
    doc["ledger"] = {{"logical_forward_passes", r.ledger.logical}, {"physical_forward_passes", r.ledger.physical}};
    json seeds = json::array();
    for (const auto& s : r.seeds) {
      seeds.push_back({{"seed_id", s.seed_id},
                       {"requested", s.requested},
                       {"achieved", s.achieved},
                       {"attempts", s.attempts},
                       {"pool_size", s.pool_size},
                       {"retry_exhausted", s.retry_exhausted}});
    }
    doc["seeds"] = seeds;
    doc["shortfall"] = r.shortfall();
    *out = dup_string(doc.dump());
  });
}

// ---- guidance ----------------------------------------------------------------------------

pb_status pb_objectives_load(const char* path, pb_objectives** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    auto handle = std::make_unique<pb_objectives>();
    handle->set = load_objective_config(path).memoized();
    *out = handle.release();
  });
}

void pb_objectives_free(pb_objectives* objectives) { delete objectives; }

pb_status pb_objectives_set_aggregation(pb_objectives* objectives, const char* aggregation) {
  return guard([&] {
    require(objectives, "objectives");
    require(aggregation, "aggregation");
    auto set = objectives->set;
    set.aggregation = parse_aggregation(aggregation);
    set.validate();
    objectives->set = std::move(set);
  });
}

pb_status pb_objectives_set_tie_break(pb_objectives* objectives, const char* name) {
  return guard([&] {
    require(objectives, "objectives");
    require(name, "name");
    auto set = objectives->set;
    set.tie_break = name;
    set.validate();
    objectives->set = std::move(set);
  });
}

size_t pb_objectives_count(const pb_objectives* objectives) {
  return objectives ? objectives->set.objectives.size() : 0;
}

const char* pb_objectives_name(const pb_objectives* objectives, size_t index) {
  if (!objectives || index >= objectives->set.objectives.size()) return nullptr;
  return objectives->set.objectives[index].name.c_str();
}

int pb_objectives_maximize(const pb_objectives* objectives, const char* name) {
  if (!objectives || !name) return -1;
  const auto* spec = find_objective(objectives, name);
  if (!spec) return -1;
  return spec->direction == Direction::Maximize ? 1 : 0;
}

pb_status pb_objectives_score(const pb_objectives* objectives, const char* name, const pb_candidates* candidates,
                              double* out) {
  return guard([&] {
    const auto values = objective_scores(objectives, name, candidates);
    if (values.empty()) return;
    require(out, "out");
    std::copy(values.begin(), values.end(), out);
  });
}

pb_status pb_rank(const pb_objectives* objectives, const pb_candidates* candidates, const double* sum_logs,
                  size_t* order, double* rank_score) {
  return guard([&] {
    require(objectives, "objectives");
    require(candidates, "candidates");
    const std::size_t n = candidates->table.rows.size();
    if (n == 0) return;
    require(sum_logs, "sum_logs");
    require(order, "order");
    const auto seqs = sequences_of(candidates);
    const auto ranking = guided_rank(seqs, std::span<const double>(sum_logs, n), objectives->set);
    for (std::size_t k = 0; k < n; ++k) order[k] = ranking.order[k];
    if (rank_score) {
      for (std::size_t i = 0; i < n; ++i) {
        rank_score[i] = objectives->set.aggregation == Aggregation::Sts ? ranking.sts[i]
                                                                        : static_cast<double>(ranking.nds[i].front);
      }
    }
  });
}

pb_status pb_rank_by(const pb_objectives* objectives, const char* name, const pb_candidates* candidates,
                     size_t* order, double* scores) {
  return guard([&] {
    const auto values = objective_scores(objectives, name, candidates);
    const std::size_t n = values.size();
    if (n == 0) return;
    require(order, "order");
    const bool maximize = pb_objectives_maximize(objectives, name) == 1;
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    const auto& rows = candidates->table.rows;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      const double va = maximize ? -values[a] : values[a];
      const double vb = maximize ? -values[b] : values[b];
      if (va != vb) return va < vb;
      return rows[a].candidate.sequence().str() < rows[b].candidate.sequence().str();
    });
    std::copy(idx.begin(), idx.end(), order);
    if (scores) std::copy(values.begin(), values.end(), scores);
  });
}

// ---- metrics ---------------------------------------------------------------------------------

pb_status pb_pka_load(const char* path, pb_pka** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    auto handle = std::make_unique<pb_pka>();
    handle->pka = metrics::PkaSet::load(path);
    *out = handle.release();
  });
}

void pb_pka_free(pb_pka* pka) { delete pka; }

pb_status pb_isoelectric_point(const pb_pka* pka, const char* sequence, double* out) {
  return guard([&] {
    require(sequence, "sequence");
    require(out, "out");
    *out = metrics::isoelectric_point(ProteinSequence(sequence), pka ? pka->pka : metrics::PkaSet{});
  });
}

pb_status pb_pairwise_diversity(const pb_candidates* candidates, const char* mode, double* out, int* has_value) {
  return guard([&] {
    require(candidates, "candidates");
    require(mode, "mode");
    const std::string m = mode;
    metrics::DiversityMode dm;
    if (m == "intra") {
      dm = metrics::DiversityMode::IntraSeed;
    } else if (m == "inter") {
      dm = metrics::DiversityMode::InterSeed;
    } else {
      throw Error(ErrorCode::InvalidArgument, "diversity mode must be intra or inter");
    }
    const auto values = metrics::pairwise_diversity(candidates_of(candidates), dm);
    if (values.empty()) return;
    require(out, "out");
    for (std::size_t i = 0; i < values.size(); ++i) {
      out[i] = values[i].value_or(std::nan(""));
      if (has_value) has_value[i] = values[i] ? 1 : 0;
    }
  });
}

pb_status pb_freqtable_read(const char* path, pb_freqtable** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    auto handle = std::make_unique<pb_freqtable>();
    handle->table = metrics::FrequencyTable::load(path);
    *out = handle.release();
  });
}

void pb_freqtable_free(pb_freqtable* table) { delete table; }

pb_status pb_germline_delta(const pb_candidates* candidates, size_t index, const pb_freqtable* table, double* out) {
  return guard([&] {
    require(table, "table");
    require(out, "out");
    *out = metrics::germline_delta(row_at(candidates, index).candidate, table->table);
  });
}

pb_status pb_liability_scan(const char* seed, const char* child, size_t* count, char** json_out) {
  return guard([&] {
    require(seed, "seed");
    require(child, "child");
    const auto report = metrics::liability_scan(ProteinSequence(seed), ProteinSequence(child));
    if (count) *count = report.introduced.size();
    if (json_out) {
      json hits = json::array();
      for (const auto& h : report.introduced) {
        hits.push_back({{"class", metrics::liability_name(h.motif_class)},
                        {"start", h.start},
                        {"end", h.end},
                        {"text", h.text},
                        {"detail", h.detail}});
      }
      *json_out = dup_string(hits.dump());
    }
  });
}

pb_status pb_region_mutation_count(const pb_candidates* candidates, size_t index, const pb_mask* mask,
                                   size_t* in_mask, size_t* out_mask) {
  return guard([&] {
    require(mask, "mask");
    const auto counts = metrics::region_mutation_count(row_at(candidates, index).candidate, mask->mask);
    if (in_mask) *in_mask = counts.in_mask;
    if (out_mask) *out_mask = counts.out_mask;
  });
}

}  // extern "C"
