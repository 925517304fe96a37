// pllbeam command-line driver: generate / score / rank / filter / metrics / make-provider.
#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "pllbeam/pllbeam.h"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr int kFormatVersion = 1;

enum ExitCode { kOk = 0, kInternal = 1, kConfig = 2, kProviderError = 3, kShortfall = 4, kScorerError = 5 };

struct Failure : std::runtime_error {
  Failure(int code, const std::string& message) : std::runtime_error(message), exit_code(code) {}
  int exit_code;
};

int exit_for(pb_status status) {
  switch (status) {
    case PB_OK: return kOk;
    case PB_ERR_PROVIDER_UNAVAILABLE:
    case PB_ERR_ALPHABET_MISMATCH: return kProviderError;
    case PB_ERR_SCORER_FAILURE: return kScorerError;
    case PB_ERR_RETRY_BUDGET_EXHAUSTED: return kShortfall;
    case PB_ERR_INTERNAL: return kInternal;
    default: return kConfig;
  }
}

void check(pb_status status) {
  if (status != PB_OK) throw Failure(exit_for(status), pb_last_error());
}

struct Free {
  void operator()(pb_provider* p) const { pb_provider_free(p); }
  void operator()(pb_candidates* p) const { pb_candidates_free(p); }
  void operator()(pb_mask* p) const { pb_mask_free(p); }
  void operator()(pb_objectives* p) const { pb_objectives_free(p); }
  void operator()(pb_run* p) const { pb_run_free(p); }
  void operator()(pb_freqtable* p) const { pb_freqtable_free(p); }
  void operator()(pb_pka* p) const { pb_pka_free(p); }
  void operator()(char* p) const { pb_string_free(p); }
};
template <class T>
using Handle = std::unique_ptr<T, Free>;

std::string take_string(char* raw) {
  Handle<char> owned(raw);
  return owned ? std::string(owned.get()) : std::string();
}

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure(kInternal, "cannot read " + path.string() + " for digest");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<size_t>(in.gcount()));
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    static const char* digits = "0123456789abcdef";
    hex << digits[digest[i] >> 4] << digits[digest[i] & 15];
  }
  return hex.str();
}

/// `<dir>/<stem>` of an output path, so siblings share a prefix.
fs::path output_stem(const fs::path& out) {
  fs::path stem = out;
  const auto ext = out.extension().string();
  if (ext == ".tsv" || ext == ".fa" || ext == ".fasta" || ext == ".faa") stem.replace_extension();
  return stem;
}

fs::path with_suffix(const fs::path& stem, const std::string& suffix) { return fs::path(stem.string() + suffix); }

// ---------------------------------------------------------------------------

struct Manifest {
  std::vector<std::string> argv;
  std::string subcommand;
  json config = json::object();
  json provider = nullptr;
  json extra = json::object();
  std::vector<fs::path> outputs;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  void write(const fs::path& path, const pb_provider* model) const {
    json doc;
    doc["format_version"] = kFormatVersion;
    doc["tool_version"] = pb_version();
    doc["subcommand"] = subcommand;
    doc["command"] = argv;
    doc["config"] = config;
    doc["provider"] = provider;
    if (model) {
      uint64_t logical = 0, physical = 0;
      pb_provider_ledger(model, &logical, &physical);
      doc["ledger"] = {{"logical_forward_passes", logical}, {"physical_forward_passes", physical}};
    }
    for (auto it = extra.begin(); it != extra.end(); ++it) doc[it.key()] = it.value();
    json files = json::array();
    for (const auto& p : outputs) files.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
    doc["outputs"] = files;
    doc["wall_time_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::ofstream f(path);
    if (!f) throw Failure(kConfig, "cannot write " + path.string());
    f << doc.dump(2) << "\n";
  }
};

Handle<pb_provider> open_provider(const std::string& spec, bool memo, Manifest& manifest) {
  if (spec.empty()) throw Failure(kConfig, "--provider is required");
  pb_provider* raw = nullptr;
  const pb_status st = pb_provider_open(spec.c_str(), &raw);
  if (st != PB_OK) {
    // A provider that cannot be reached or spoken to is a provider error; a missing or
    // malformed provider file is a configuration error.
    throw Failure(exit_for(st), pb_last_error());
  }
  Handle<pb_provider> p(raw);
  pb_provider_set_memoize(p.get(), memo ? 1 : 0);
  manifest.provider = json::parse(take_string([&] {
    char* info = nullptr;
    check(pb_provider_info_json(p.get(), &info));
    return info;
  }()));
  return p;
}

Handle<pb_candidates> read_seeds(const std::string& path) {
  if (path.empty()) return nullptr;
  pb_candidates* raw = nullptr;
  check(pb_seeds_read_fasta(path.c_str(), &raw));
  return Handle<pb_candidates>(raw);
}

Handle<pb_candidates> read_candidates(const std::string& path, const pb_candidates* seeds) {
  pb_candidates* raw = nullptr;
  check(pb_candidates_read(path.c_str(), seeds, &raw));
  return Handle<pb_candidates>(raw);
}

Handle<pb_mask> read_mask(const std::string& path) {
  if (path.empty()) return nullptr;
  pb_mask* raw = nullptr;
  check(pb_mask_read(path.c_str(), &raw));
  return Handle<pb_mask>(raw);
}

Handle<pb_objectives> load_objectives(const std::string& path) {
  if (path.empty()) return nullptr;
  pb_objectives* raw = nullptr;
  check(pb_objectives_load(path.c_str(), &raw));
  return Handle<pb_objectives>(raw);
}

Handle<pb_candidates> select(const pb_candidates* c, const std::vector<size_t>& idx) {
  pb_candidates* raw = nullptr;
  check(pb_candidates_select(c, idx.data(), idx.size(), &raw));
  return Handle<pb_candidates>(raw);
}

void set_field(pb_candidates* c, size_t i, const std::string& column, const std::string& value) {
  check(pb_candidates_set_field(c, i, column.c_str(), value.c_str()));
}

std::optional<double> field_double(const pb_candidates* c, size_t i, const char* column) {
  const char* v = pb_candidates_field(c, i, column);
  if (!v || std::string_view(v).empty() || std::string_view(v) == "NA") return std::nullopt;
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v, v + std::strlen(v), out);
  if (ec != std::errc() || *ptr != '\0') throw Failure(kConfig, std::string("bad ") + column + " value '" + v + "'");
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Failure(kConfig, "cannot write " + path.string());
  f << text;
  if (!f.flush()) throw Failure(kConfig, "cannot write " + path.string());
}

// ---------------------------------------------------------------------------

struct Common {
  std::string provider;
  std::size_t threads = 0;
  bool memo = false;
  std::string manifest;
};

void add_threads(CLI::App* sub, Common& c) {
  sub->add_option("--threads", c.threads, "Worker threads (0 = available parallelism)");
}

void add_manifest(CLI::App* sub, Common& c) {
  sub->add_option("--manifest", c.manifest, "Run manifest path (default: <out stem>.manifest.json)");
}

fs::path manifest_path(const Common& c, const fs::path& stem) {
  return c.manifest.empty() ? with_suffix(stem, ".manifest.json") : fs::path(c.manifest);
}

// ---- generate ---------------------------------------------------------------

struct GenerateArgs {
  Common common;
  std::string sampler = "beam";
  std::string seeds;
  std::string mask;
  std::string out;
  std::string strategy = "random";
  std::string objectives;
  std::string aggregation;
  std::string tie_break;
  std::size_t edits = 3;
  std::size_t beam = 5;
  std::size_t count = 100;
  std::size_t retry_factor = 10;
  double tau = 1.5;
  double gumbel_scale = 1.0;
  std::uint64_t rng_seed = 0;
  bool argmax = false;
  bool no_dedup = false;
};

void configure_objectives(pb_objectives* o, const std::string& aggregation, const std::string& tie_break) {
  if (!o) {
    if (!aggregation.empty() || !tie_break.empty()) {
      throw Failure(kConfig, "--aggregation/--tie-break need --objectives");
    }
    return;
  }
  if (!aggregation.empty()) check(pb_objectives_set_aggregation(o, aggregation.c_str()));
  if (!tie_break.empty()) check(pb_objectives_set_tie_break(o, tie_break.c_str()));
}

int cmd_generate(const GenerateArgs& a, Manifest& m) {
  m.config = {{"sampler", a.sampler},     {"seeds", a.seeds},
              {"mask", a.mask},           {"edits", a.edits},
              {"beam", a.beam},           {"tau", a.tau},
              {"gumbel_scale", a.gumbel_scale}, {"rng_seed", a.rng_seed},
              {"count", a.count},         {"retry_factor", a.retry_factor},
              {"strategy", a.strategy},   {"argmax", a.argmax},
              {"dedup", !a.no_dedup},     {"objectives", a.objectives},
              {"aggregation", a.aggregation}, {"tie_break", a.tie_break},
              {"provider", a.common.provider}, {"threads", a.common.threads},
              {"memo", a.common.memo},    {"out", a.out}};
  m.extra["rng_seed"] = a.rng_seed;
  auto seeds = read_seeds(a.seeds);
  auto mask = read_mask(a.mask);
  auto objectives = load_objectives(a.objectives);
  configure_objectives(objectives.get(), a.aggregation, a.tie_break);
  auto provider = open_provider(a.common.provider, a.common.memo, m);

  pb_generate_config cfg;
  pb_generate_config_default(&cfg);
  cfg.sampler = a.sampler.c_str();
  cfg.edits = a.edits;
  cfg.beam_size = a.beam;
  cfg.tau = a.tau;
  cfg.gumbel_scale = a.gumbel_scale;
  cfg.rng_seed = a.rng_seed;
  cfg.count = a.count;
  cfg.retry_factor = a.retry_factor;
  cfg.strategy = a.strategy.c_str();
  cfg.argmax = a.argmax ? 1 : 0;
  cfg.dedup = a.no_dedup ? 0 : 1;
  cfg.threads = a.common.threads;

  pb_run* raw = nullptr;
  check(pb_generate(provider.get(), seeds.get(), mask.get(), &cfg, objectives.get(), &raw));
  Handle<pb_run> run(raw);

  const fs::path stem = output_stem(a.out);
  const fs::path tsv = with_suffix(stem, ".tsv");
  const fs::path fasta = with_suffix(stem, ".fasta");
  check(pb_candidates_write_tsv(pb_run_outputs(run.get()), tsv.string().c_str()));
  check(pb_candidates_write_fasta(pb_run_outputs(run.get()), fasta.string().c_str()));
  m.outputs = {tsv, fasta};
  char* summary = nullptr;
  check(pb_run_summary_json(run.get(), &summary));
  m.extra["run"] = json::parse(take_string(summary));
  m.write(manifest_path(a.common, stem), provider.get());

  if (pb_run_shortfall(run.get())) {
    std::cerr << "pllbeam: some seeds received fewer unique variants than requested; see the manifest\n";
    return kShortfall;
  }
  return kOk;
}

// ---- score --------------------------------------------------------------------

struct ScoreArgs {
  Common common;
  std::string candidates;
  std::string seeds;
  std::string out;
  std::vector<std::string> approximations;
  double tau = 1.0;
};

int cmd_score(const ScoreArgs& a, Manifest& m) {
  std::vector<std::string> ladder = a.approximations;
  if (ladder.empty()) ladder = {"exact"};
  if (std::find(ladder.begin(), ladder.end(), "all") != ladder.end()) {
    ladder = {"exact", "double-mask", "wt", "nomask-child", "nomask-template"};
  }
  m.config = {{"candidates", a.candidates}, {"seeds", a.seeds}, {"approximation", ladder},
              {"tau", a.tau},               {"provider", a.common.provider}, {"threads", a.common.threads},
              {"memo", a.common.memo},      {"out", a.out}};
  auto seeds = read_seeds(a.seeds);
  auto cands = read_candidates(a.candidates, seeds.get());
  auto provider = open_provider(a.common.provider, a.common.memo, m);
  const size_t n = pb_candidates_size(cands.get());

  std::ostringstream out;
  out << "id\tedits\tsum_log\tper_residue\tpseudo_perplexity\tapproximation_name\tforward_passes\n";
  json passes = json::object();
  for (const auto& name : ladder) {
    std::vector<double> sum(n), per(n), ppl(n);
    uint64_t spent = 0;
    check(pb_score(provider.get(), cands.get(), name.c_str(), a.tau, a.common.threads, sum.data(), per.data(),
                   ppl.data(), &spent));
    passes[name] = spent;
    for (size_t i = 0; i < n; ++i) {
      out << pb_candidates_id(cands.get(), i) << '\t' << pb_candidates_edits(cands.get(), i) << '\t'
          << format_double(sum[i]) << '\t' << format_double(per[i]) << '\t' << format_double(ppl[i]) << '\t'
          << name << '\t' << spent << '\n';
    }
  }
  const fs::path tsv = with_suffix(output_stem(a.out), ".tsv");
  write_text(tsv, out.str());
  m.outputs = {tsv};
  m.extra["forward_passes"] = passes;
  m.write(manifest_path(a.common, output_stem(a.out)), provider.get());
  return kOk;
}

// ---- rank ------------------------------------------------------------------------

struct RankArgs {
  Common common;
  std::string candidates;
  std::string seeds;
  std::string objectives;
  std::string aggregation;
  std::string tie_break;
  std::string by;
  std::string out;
  std::size_t top_k = 1000;
  double tau = 1.0;
};

std::string objective_column(const std::string& name) {
  static const std::vector<std::string> reserved = {"id", "seed_id", "sequence", "edits", "rank_score", "guided_rank"};
  return std::find(reserved.begin(), reserved.end(), name) != reserved.end() ? "objective_" + name : name;
}

int cmd_rank(const RankArgs& a, Manifest& m) {
  m.config = {{"candidates", a.candidates}, {"seeds", a.seeds},   {"objectives", a.objectives},
              {"aggregation", a.aggregation}, {"tie_break", a.tie_break}, {"by", a.by},
              {"top_k", a.top_k},           {"tau", a.tau},       {"provider", a.common.provider},
              {"threads", a.common.threads}, {"out", a.out}};
  auto seeds = read_seeds(a.seeds);
  auto all = read_candidates(a.candidates, seeds.get());
  auto objectives = load_objectives(a.objectives);
  if (!objectives) throw Failure(kConfig, "--objectives is required");
  configure_objectives(objectives.get(), a.aggregation, a.tie_break);

  const size_t k = std::min(a.top_k, pb_candidates_size(all.get()));
  std::vector<size_t> head(k);
  for (size_t i = 0; i < k; ++i) head[i] = i;
  auto top = select(all.get(), head);

  Handle<pb_provider> provider;
  std::vector<size_t> order(k);
  std::vector<double> rank_score(k);
  if (!a.by.empty()) {
    if (pb_objectives_maximize(objectives.get(), a.by.c_str()) < 0) throw Failure(kConfig, "unknown objective " + a.by);
    check(pb_rank_by(objectives.get(), a.by.c_str(), top.get(), order.data(), rank_score.data()));
  } else {
    std::vector<double> sum_logs(k);
    bool complete = true;
    for (size_t i = 0; i < k; ++i) {
      auto v = field_double(top.get(), i, "sum_log");
      complete = complete && v.has_value();
      sum_logs[i] = v.value_or(0.0);
    }
    if (!complete && k > 0) {
      if (a.common.provider.empty()) {
        throw Failure(kConfig, "input lacks sum_log values; pass --provider to score them");
      }
      provider = open_provider(a.common.provider, a.common.memo, m);
      check(pb_score(provider.get(), top.get(), "exact", a.tau, a.common.threads, sum_logs.data(), nullptr, nullptr,
                     nullptr));
      for (size_t i = 0; i < k; ++i) set_field(top.get(), i, "sum_log", format_double(sum_logs[i]));
    }
    check(pb_rank(objectives.get(), top.get(), sum_logs.data(), order.data(), rank_score.data()));
  }

  // Per-objective raw scores travel with the ranked rows.
  std::vector<std::pair<std::string, std::vector<double>>> columns;
  for (size_t o = 0; o < pb_objectives_count(objectives.get()); ++o) {
    const std::string name = pb_objectives_name(objectives.get(), o);
    if (name == "pseudo_perplexity") continue;
    std::vector<double> values(k);
    check(pb_objectives_score(objectives.get(), name.c_str(), top.get(), values.data()));
    columns.emplace_back(name, std::move(values));
  }
  auto ranked = select(top.get(), order);
  for (size_t r = 0; r < k; ++r) {
    const size_t src = order[r];
    for (const auto& [name, values] : columns) set_field(ranked.get(), r, objective_column(name), format_double(values[src]));
    set_field(ranked.get(), r, "rank_score", format_double(rank_score[src]));
    set_field(ranked.get(), r, "guided_rank", std::to_string(r + 1));
  }
  const fs::path stem = output_stem(a.out);
  const fs::path tsv = with_suffix(stem, ".tsv");
  check(pb_candidates_write_tsv(ranked.get(), tsv.string().c_str()));
  m.outputs = {tsv};
  m.extra["ranked"] = k;
  m.write(manifest_path(a.common, stem), provider.get());
  return kOk;
}

// ---- filter ------------------------------------------------------------------------

struct FilterArgs {
  Common common;
  std::string candidates;
  std::string seeds;
  std::string out;
  std::string rejections;
  std::string pka;
  double max_pi = 9.0;
  bool no_pi = false;
  bool no_liability = false;
  std::vector<std::string> allow_liability;
  std::string objectives;
  std::string threshold_objective;
  std::optional<double> threshold;
};

int cmd_filter(const FilterArgs& a, Manifest& m) {
  m.config = {{"candidates", a.candidates},     {"seeds", a.seeds},
              {"max_pi", a.no_pi ? json(nullptr) : json(a.max_pi)},
              {"pka", a.pka},                   {"liability_filter", !a.no_liability},
              {"allow_liability", a.allow_liability}, {"objectives", a.objectives},
              {"threshold_objective", a.threshold_objective},
              {"threshold", a.threshold ? json(*a.threshold) : json(nullptr)},
              {"threads", a.common.threads},    {"out", a.out}};
  auto seeds = read_seeds(a.seeds);
  auto cands = read_candidates(a.candidates, seeds.get());
  Handle<pb_pka> pka;
  if (!a.pka.empty()) {
    pb_pka* raw = nullptr;
    check(pb_pka_load(a.pka.c_str(), &raw));
    pka.reset(raw);
  }
  auto objectives = load_objectives(a.objectives);
  if (a.threshold.has_value() != !a.threshold_objective.empty()) {
    throw Failure(kConfig, "--threshold and --threshold-objective go together");
  }
  int maximize = -1;
  if (a.threshold) {
    if (!objectives) throw Failure(kConfig, "--threshold-objective needs --objectives");
    maximize = pb_objectives_maximize(objectives.get(), a.threshold_objective.c_str());
    if (maximize < 0) throw Failure(kConfig, "unknown objective " + a.threshold_objective);
  }

  const size_t n = pb_candidates_size(cands.get());
  std::vector<size_t> alive(n);
  for (size_t i = 0; i < n; ++i) alive[i] = i;
  std::ostringstream log;
  log << "id\tstage\treason\n";
  std::vector<double> pis(n, std::nan(""));

  if (!a.no_pi) {
    std::vector<size_t> kept;
    for (size_t i : alive) {
      check(pb_isoelectric_point(pka.get(), pb_candidates_sequence(cands.get(), i), &pis[i]));
      if (pis[i] <= a.max_pi) {
        kept.push_back(i);
      } else {
        log << pb_candidates_id(cands.get(), i) << "\tpi\tpi=" << format_double(pis[i]) << ">"
            << format_double(a.max_pi) << '\n';
      }
    }
    alive = std::move(kept);
  }
  if (!a.no_liability) {
    std::vector<size_t> kept;
    for (size_t i : alive) {
      char* hits_raw = nullptr;
      check(pb_liability_scan(pb_candidates_seed_sequence(cands.get(), i), pb_candidates_sequence(cands.get(), i),
                              nullptr, &hits_raw));
      const json hits = json::parse(take_string(hits_raw));
      std::vector<std::string> reasons;
      for (const auto& h : hits) {
        const auto cls = h["class"].get<std::string>();
        if (std::find(a.allow_liability.begin(), a.allow_liability.end(), cls) != a.allow_liability.end()) continue;
        if (std::find(reasons.begin(), reasons.end(), cls) == reasons.end()) reasons.push_back(cls);
      }
      if (reasons.empty()) {
        kept.push_back(i);
      } else {
        std::string joined;
        for (const auto& r : reasons) joined += (joined.empty() ? "" : ",") + r;
        log << pb_candidates_id(cands.get(), i) << "\tliability\t" << joined << '\n';
      }
    }
    alive = std::move(kept);
  }
  std::vector<double> scores;
  if (a.threshold) {
    auto subset = select(cands.get(), alive);
    scores.resize(alive.size());
    check(pb_objectives_score(objectives.get(), a.threshold_objective.c_str(), subset.get(), scores.data()));
    std::vector<size_t> kept;
    std::vector<double> kept_scores;
    for (size_t k = 0; k < alive.size(); ++k) {
      const bool pass = maximize == 1 ? scores[k] > *a.threshold : scores[k] < *a.threshold;
      if (pass) {
        kept.push_back(alive[k]);
        kept_scores.push_back(scores[k]);
      } else {
        log << pb_candidates_id(cands.get(), alive[k]) << "\tscorer\t" << a.threshold_objective << '='
            << format_double(scores[k]) << (maximize == 1 ? "<=" : ">=") << format_double(*a.threshold) << '\n';
      }
    }
    alive = std::move(kept);
    scores = std::move(kept_scores);
  }

  auto survivors = select(cands.get(), alive);
  for (size_t k = 0; k < alive.size(); ++k) {
    if (!a.no_pi) set_field(survivors.get(), k, "pi", format_double(pis[alive[k]]));
    if (a.threshold) set_field(survivors.get(), k, objective_column(a.threshold_objective), format_double(scores[k]));
  }
  const fs::path stem = output_stem(a.out);
  const fs::path tsv = with_suffix(stem, ".tsv");
  const fs::path rejected = a.rejections.empty() ? with_suffix(stem, ".rejections.tsv") : fs::path(a.rejections);
  check(pb_candidates_write_tsv(survivors.get(), tsv.string().c_str()));
  write_text(rejected, log.str());
  m.outputs = {tsv, rejected};
  m.extra["kept"] = alive.size();
  m.extra["rejected"] = n - alive.size();
  m.write(manifest_path(a.common, stem), nullptr);
  return kOk;
}

// ---- metrics -------------------------------------------------------------------------

struct MetricsArgs {
  Common common;
  std::string candidates;
  std::string seeds;
  std::string germline;
  std::string mask;
  std::string pka;
  std::string out;
  std::string liabilities;
};

int cmd_metrics(const MetricsArgs& a, Manifest& m) {
  m.config = {{"candidates", a.candidates}, {"seeds", a.seeds}, {"germline", a.germline}, {"mask", a.mask},
              {"pka", a.pka},               {"threads", a.common.threads}, {"out", a.out}};
  auto seeds = read_seeds(a.seeds);
  auto cands = read_candidates(a.candidates, seeds.get());
  auto mask = read_mask(a.mask);
  Handle<pb_freqtable> table;
  if (!a.germline.empty()) {
    pb_freqtable* raw = nullptr;
    check(pb_freqtable_read(a.germline.c_str(), &raw));
    table.reset(raw);
  }
  Handle<pb_pka> pka;
  if (!a.pka.empty()) {
    pb_pka* raw = nullptr;
    check(pb_pka_load(a.pka.c_str(), &raw));
    pka.reset(raw);
  }
  const size_t n = pb_candidates_size(cands.get());
  std::vector<double> intra(n), inter(n);
  std::vector<int> has_intra(n), has_inter(n);
  if (n > 0) {
    check(pb_pairwise_diversity(cands.get(), "intra", intra.data(), has_intra.data()));
    check(pb_pairwise_diversity(cands.get(), "inter", inter.data(), has_inter.data()));
  }

  std::ostringstream out;
  out << "id\tseed_id\tedits\tedit_count\tpi\tliabilities\tintra_diversity\tinter_diversity";
  if (table) out << "\tgermline_delta";
  if (mask) out << "\tin_mask\tout_mask";
  out << '\n';
  json sidecar = {{"format_version", kFormatVersion}, {"candidates", json::array()}};
  for (size_t i = 0; i < n; ++i) {
    double pi = 0.0;
    check(pb_isoelectric_point(pka.get(), pb_candidates_sequence(cands.get(), i), &pi));
    char* hits_raw = nullptr;
    size_t hit_count = 0;
    check(pb_liability_scan(pb_candidates_seed_sequence(cands.get(), i), pb_candidates_sequence(cands.get(), i),
                            &hit_count, &hits_raw));
    sidecar["candidates"].push_back(
        {{"id", pb_candidates_id(cands.get(), i)}, {"liabilities", json::parse(take_string(hits_raw))}});
    out << pb_candidates_id(cands.get(), i) << '\t' << pb_candidates_seed_id(cands.get(), i) << '\t'
        << pb_candidates_edits(cands.get(), i) << '\t' << pb_candidates_edit_count(cands.get(), i) << '\t'
        << format_double(pi) << '\t' << hit_count << '\t' << (has_intra[i] ? format_double(intra[i]) : "NA") << '\t'
        << (has_inter[i] ? format_double(inter[i]) : "NA");
    if (table) {
      double delta = 0.0;
      check(pb_germline_delta(cands.get(), i, table.get(), &delta));
      out << '\t' << format_double(delta);
    }
    if (mask) {
      size_t in = 0, outside = 0;
      check(pb_region_mutation_count(cands.get(), i, mask.get(), &in, &outside));
      out << '\t' << in << '\t' << outside;
    }
    out << '\n';
  }
  const fs::path stem = output_stem(a.out);
  const fs::path tsv = with_suffix(stem, ".tsv");
  const fs::path json_path = a.liabilities.empty() ? with_suffix(stem, ".liabilities.json") : fs::path(a.liabilities);
  write_text(tsv, out.str());
  write_text(json_path, sidecar.dump(2) + "\n");
  m.outputs = {tsv, json_path};
  m.write(manifest_path(a.common, stem), nullptr);
  return kOk;
}

// ---- make-provider ---------------------------------------------------------------------

struct MakeProviderArgs {
  std::string kind = "coupled";
  std::size_t length = 20;
  std::uint64_t seed = 0;
  double field_scale = 1.0;
  double coupling_scale = 0.5;
  double self_weight = 2.0;
  std::string out;
};

int cmd_make_provider(const MakeProviderArgs& a) {
  check(pb_provider_write_random(a.kind.c_str(), a.length, a.seed, a.field_scale, a.coupling_scale, a.self_weight,
                                 a.out.c_str()));
  return kOk;
}

// ---------------------------------------------------------------------------

/// Expands `--config FILE` into flags placed right after the subcommand, so explicit
/// command-line flags (which come later) take precedence.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  for (size_t i = 2; i < args.size(); ++i) {
    std::string path;
    size_t consumed = 0;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      consumed = 2;
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      consumed = 1;
    } else {
      continue;
    }
    std::ifstream f(path);
    if (!f) throw Failure(kConfig, "cannot open config " + path);
    json doc;
    try {
      doc = json::parse(f);
    } catch (const json::exception& e) {
      throw Failure(kConfig, "config " + path + ": " + e.what());
    }
    if (!doc.is_object()) throw Failure(kConfig, "config " + path + " must be a JSON object");
    std::vector<std::string> flags;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      std::string flag = "--" + it.key();
      std::replace(flag.begin() + 2, flag.end(), '_', '-');
      const auto& v = it.value();
      auto text = [](const json& x) { return x.is_string() ? x.get<std::string>() : x.dump(); };
      if (v.is_boolean()) {
        if (v.get<bool>()) flags.push_back(flag);
      } else if (v.is_array()) {
        for (const auto& x : v) {
          flags.push_back(flag);
          flags.push_back(text(x));
        }
      } else if (!v.is_null()) {
        flags.push_back(flag);
        flags.push_back(text(v));
      }
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + consumed));
    args.insert(args.begin() + 2, flags.begin(), flags.end());
    break;
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> original(argv, argv + argc);
  CLI::App app{"pllbeam: masked-language-model guided sequence design"};
  app.set_version_flag("--version", std::string(pb_version()));
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  auto add_config_flag = [](CLI::App* sub) {
    // Consumed before parsing; declared so it shows in --help.
    sub->add_option("--config", "JSON file whose keys mirror the flags");
  };

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate exactly-E substitution variants of each seed");
  g->add_option("--sampler", gen.sampler)->check(CLI::IsMember({"beam", "gibbs", "gibbs-argmax", "denoise"}));
  g->add_option("--seeds", gen.seeds, "Seed FASTA")->required();
  g->add_option("--mask", gen.mask, "Editable positions, 1-based lines or ranges");
  g->add_option("--edits", gen.edits, "Edit budget E")->check(CLI::PositiveNumber);
  g->add_option("--beam", gen.beam, "Beam size B (default 5, or 20 with --objectives)")->check(CLI::PositiveNumber);
  g->add_option("--tau", gen.tau, "Softmax temperature")->check(CLI::PositiveNumber);
  g->add_option("--gumbel-scale", gen.gumbel_scale)->check(CLI::NonNegativeNumber);
  g->add_option("--rng-seed", gen.rng_seed);
  g->add_option("--count", gen.count, "Variants per seed")->check(CLI::PositiveNumber);
  g->add_option("--retry-factor", gen.retry_factor)->check(CLI::PositiveNumber);
  g->add_option("--strategy", gen.strategy)->check(CLI::IsMember({"random", "lowest_entropy", "max_probability"}));
  g->add_flag("--argmax", gen.argmax, "Argmax decoding for gibbs/denoise");
  g->add_flag("--no-dedup", gen.no_dedup);
  g->add_option("--objectives", gen.objectives, "Objective config JSON for guided beam search");
  g->add_option("--aggregation", gen.aggregation)->check(CLI::IsMember({"sts", "nds"}));
  g->add_option("--tie-break", gen.tie_break);
  g->add_option("--provider", gen.common.provider, "pssm:FILE | coupled:FILE | remote:URL")->required();
  g->add_flag("--memo", gen.common.memo, "Memoize identical provider queries");
  g->add_option("--out", gen.out, "Output path; .tsv and .fasta siblings are written")->required();
  add_threads(g, gen.common);
  add_manifest(g, gen.common);
  add_config_flag(g);

  ScoreArgs sc;
  auto* s = app.add_subcommand("score", "Score candidates with one or more PLL approximations");
  s->add_option("--candidates", sc.candidates, "Candidate TSV or FASTA")->required();
  s->add_option("--seeds", sc.seeds, "Seed FASTA, for FASTA candidates without edit traces");
  s->add_option("--approximation", sc.approximations, "exact, double-mask, wt, nomask-child, nomask-template or all")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
      ->check(CLI::IsMember({"exact", "double-mask", "wt", "nomask-child", "nomask-template", "all"}));
  s->add_option("--tau", sc.tau)->check(CLI::PositiveNumber);
  s->add_option("--provider", sc.common.provider)->required();
  s->add_flag("--memo", sc.common.memo);
  s->add_option("--out", sc.out)->required();
  add_threads(s, sc.common);
  add_manifest(s, sc.common);
  add_config_flag(s);

  RankArgs rk;
  auto* r = app.add_subcommand("rank", "Re-rank the top-K candidates by an objective set");
  r->add_option("--candidates", rk.candidates)->required();
  r->add_option("--seeds", rk.seeds);
  r->add_option("--objectives", rk.objectives, "Objective config JSON")->required();
  r->add_option("--aggregation", rk.aggregation)->check(CLI::IsMember({"sts", "nds"}));
  r->add_option("--tie-break", rk.tie_break);
  r->add_option("--by", rk.by, "Rank by this single objective's score instead");
  r->add_option("--top-k", rk.top_k)->check(CLI::PositiveNumber);
  r->add_option("--tau", rk.tau, "Temperature when sum_log must be computed")->check(CLI::PositiveNumber);
  r->add_option("--provider", rk.common.provider, "Used only when the input lacks sum_log");
  r->add_option("--out", rk.out)->required();
  add_threads(r, rk.common);
  add_manifest(r, rk.common);
  add_config_flag(r);

  FilterArgs ft;
  auto* f = app.add_subcommand("filter", "Apply pI, liability and scorer-threshold filters in order");
  f->add_option("--candidates", ft.candidates)->required();
  f->add_option("--seeds", ft.seeds);
  f->add_option("--max-pi", ft.max_pi, "Keep pI <= this value");
  f->add_flag("--no-pi-filter", ft.no_pi);
  f->add_option("--pka", ft.pka, "pKa table");
  f->add_flag("--no-liability-filter", ft.no_liability);
  f->add_option("--allow-liability", ft.allow_liability, "Liability class to tolerate")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
      ->check(CLI::IsMember({"asp_pro", "deamidation", "isomerization", "n_glycosylation", "oxidation_met_trp",
                             "unpaired_cysteine"}));
  f->add_option("--objectives", ft.objectives);
  f->add_option("--threshold-objective", ft.threshold_objective);
  f->add_option("--threshold", ft.threshold, "Strict threshold in the objective's direction");
  f->add_option("--out", ft.out)->required();
  f->add_option("--rejections", ft.rejections, "Rejection log (default: <out stem>.rejections.tsv)");
  add_threads(f, ft.common);
  add_manifest(f, ft.common);
  add_config_flag(f);

  MetricsArgs mt;
  auto* me = app.add_subcommand("metrics", "Per-child diversity, pI, liabilities, germline and region metrics");
  me->add_option("--candidates", mt.candidates)->required();
  me->add_option("--seeds", mt.seeds);
  me->add_option("--germline", mt.germline, "Germline frequency table");
  me->add_option("--mask", mt.mask, "Region mask for in/out-of-mask mutation counts");
  me->add_option("--pka", mt.pka);
  me->add_option("--out", mt.out)->required();
  me->add_option("--liabilities", mt.liabilities, "Liability JSON sidecar (default: <out stem>.liabilities.json)");
  add_threads(me, mt.common);
  add_manifest(me, mt.common);
  add_config_flag(me);

  MakeProviderArgs mp;
  auto* p = app.add_subcommand("make-provider", "Write a seeded random pssm or coupled provider file");
  p->add_option("--kind", mp.kind)->check(CLI::IsMember({"pssm", "coupled"}));
  p->add_option("--length", mp.length)->check(CLI::PositiveNumber);
  p->add_option("--seed", mp.seed);
  p->add_option("--field-scale", mp.field_scale);
  p->add_option("--coupling-scale", mp.coupling_scale);
  p->add_option("--self-weight", mp.self_weight);
  p->add_option("--out", mp.out)->required();
  add_config_flag(p);

  std::vector<std::string> args;
  try {
    args = expand_config(original);
  } catch (const Failure& e) {
    std::cerr << "pllbeam: " << e.what() << "\n";
    return e.exit_code;
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  // Guided beam runs widen the default beam.
  if (*g && !gen.objectives.empty() && g->count("--beam") == 0) gen.beam = 20;

  Manifest manifest;
  manifest.argv = original;
  try {
    if (*g) {
      manifest.subcommand = "generate";
      return cmd_generate(gen, manifest);
    }
    if (*s) {
      manifest.subcommand = "score";
      return cmd_score(sc, manifest);
    }
    if (*r) {
      manifest.subcommand = "rank";
      return cmd_rank(rk, manifest);
    }
    if (*f) {
      manifest.subcommand = "filter";
      return cmd_filter(ft, manifest);
    }
    if (*me) {
      manifest.subcommand = "metrics";
      return cmd_metrics(mt, manifest);
    }
    if (*p) return cmd_make_provider(mp);
  } catch (const Failure& e) {
    std::cerr << "pllbeam: " << e.what() << "\n";
    return e.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "pllbeam: " << e.what() << "\n";
    return kInternal;
  }
  return kConfig;
}
