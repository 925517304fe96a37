// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pllbeam/error.hpp"
#include "pllbeam/guidance.hpp"
#include "pllbeam/metrics.hpp"
#include "pllbeam/pll.hpp"
#include "pllbeam/provider.hpp"
#include "pllbeam/samplers.hpp"
#include "support/oracles.hpp"

using namespace pllbeam;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

/// Records the first failure; later checks keep running so the detail names the first.
struct Check {
  Outcome& out;
  void operator()(bool cond, const std::string& what) {
    if (!cond && out.ok) {
      out.ok = false;
      out.detail = what;
    }
  }
};

std::vector<ProteinSequence> single_children(const ProteinSequence& templ) {
  std::vector<ProteinSequence> out;
  for (Position i = 0; i < templ.size(); ++i) {
    for (char c : std::string(kAlphabetCodes)) {
      if (c != templ[i]) out.push_back(templ.with(i, c));
    }
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(12);
  ss << v;
  return ss.str();
}

// 1. All five approximations coincide on a context-free model.
Outcome equivalence_collapse() {
  Outcome out;
  Check check{out};
  const std::size_t L = 12;
  auto p = PssmProvider::random(L, 101);
  std::mt19937_64 rng(102);
  const ProteinSequence templ(oracle::random_sequence(rng, L));
  const auto children = single_children(templ);
  check(children.size() == 228, "expected 228 children");

  const auto profile = build_profile(*p, templ, 1.0);
  const NoMaskTemplate nomask(*p, templ, 1.0);
  std::vector<DoubleMaskTerms> terms;
  for (Position k = 0; k < L; ++k) terms.emplace_back(*p, profile, k);

  double worst = 0;
  for (const auto& c : children) {
    const Position k = *substitution_site(templ, c);
    const double v[] = {exact_pll(*p, c, 1.0).sum_log, terms[k].score(profile, c).sum_log,
                        approx_pll_wt(profile, c).sum_log, approx_pll_nomask_child(*p, c, 1.0).sum_log,
                        nomask.score(c).sum_log};
    for (double a : v) {
      for (double b : v) worst = std::max(worst, std::abs(a - b));
    }
  }
  check(worst <= 1e-9, "max pairwise gap " + fmt(worst));
  out.detail = out.ok ? "228 children, max pairwise gap " + fmt(worst) : out.detail;
  return out;
}

// 2. Exact and double-mask scores against the naive reimplementation.
Outcome oracle_exactness() {
  Outcome out;
  Check check{out};
  auto p = CoupledProvider::random(4, 201, 1.0, 0.5, 2.0);
  std::mt19937_64 rng(202);
  double worst_exact = 0, worst_dm = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const double tau = trial % 2 ? 1.0 : 1.5;
    const std::string s = oracle::random_sequence(rng, 4);
    worst_exact = std::max(worst_exact, std::abs(exact_pll(*p, ProteinSequence(s), tau).sum_log -
                                                 oracle::exact_pll(*p, s, tau)));

    std::string child = s;
    const std::size_t k = rng() % 4;
    while (child[k] == s[k]) child[k] = oracle::kCodes[rng() % 20];
    const auto profile = build_profile(*p, ProteinSequence(s), tau);
    const double got = approx_pll_double_mask(*p, profile, ProteinSequence(child)).sum_log;
    worst_dm = std::max(worst_dm, std::abs(got - oracle::double_mask_pll(*p, s, child, tau)));
  }
  check(worst_exact <= 1e-12, "exact gap " + fmt(worst_exact));
  check(worst_dm <= 1e-12, "double-mask gap " + fmt(worst_dm));
  if (out.ok) out.detail = "100 sequences, gaps exact " + fmt(worst_exact) + " double-mask " + fmt(worst_dm);
  return out;
}

// 3. Forward-pass ledger for a full neighbourhood at L=50.
Outcome cost_ledger() {
  Outcome out;
  Check check{out};
  const std::uint64_t L = 50;
  auto p = PssmProvider::random(L, 301);
  std::mt19937_64 rng(302);
  const ProteinSequence templ(oracle::random_sequence(rng, L));
  const auto children = single_children(templ);

  auto passes = [&](auto&& body) {
    p->reset_ledger();
    body();
    return p->ledger().logical;
  };
  const auto wt = passes([&] {
    const auto profile = build_profile(*p, templ, 1.0);
    for (const auto& c : children) approx_pll_wt(profile, c);
  });
  bool per_k = true;
  const auto dm = passes([&] {
    const auto profile = build_profile(*p, templ, 1.0);
    for (Position k = 0; k < L; ++k) {
      const auto before = p->ledger().logical;
      const DoubleMaskTerms terms(*p, profile, k);
      per_k = per_k && p->ledger().logical - before == L - 1;
      for (const auto& c : children) {
        if (c[k] != templ[k]) terms.score(profile, c);
      }
    }
  });
  const auto child = passes([&] {
    for (const auto& c : children) approx_pll_nomask_child(*p, c, 1.0);
  });
  const auto tmpl = passes([&] {
    const NoMaskTemplate nomask(*p, templ, 1.0);
    for (const auto& c : children) nomask.score(c);
  });
  const auto exact = passes([&] {
    build_profile(*p, templ, 1.0);
    for (const auto& c : children) exact_pll(*p, c, 1.0);
  });

  check(wt == L, "wt " + std::to_string(wt));
  check(per_k, "double-mask did not spend L-1 passes for every k");
  check(dm == L + L * (L - 1), "double-mask " + std::to_string(dm));
  check(child == 19 * L, "nomask-child " + std::to_string(child));
  check(tmpl == 1, "nomask-template " + std::to_string(tmpl));
  check(exact == 19 * L * L + L, "exact " + std::to_string(exact));
  check(tmpl < wt && wt < child && child < exact, "cost ordering");
  if (out.ok) {
    out.detail = "template " + std::to_string(tmpl) + ", wt " + std::to_string(wt) + ", double-mask " +
                 std::to_string(L) + "+" + std::to_string(L - 1) + "/k, child " + std::to_string(child) +
                 ", exact " + std::to_string(exact);
  }
  return out;
}

// 4. Beam pass count L(1+B(E-1)).
Outcome beam_passes() {
  Outcome out;
  Check check{out};
  const std::size_t L = 100;
  auto p = PssmProvider::random(L, 401);
  std::mt19937_64 rng(402);
  const CandidateSequence seed("s", ProteinSequence(oracle::random_sequence(rng, L)));
  BeamConfig cfg;
  cfg.beam_size = 5;
  cfg.edit_budget = 4;
  cfg.rng_seed = 403;
  cfg.mask = PositionMask::full(L);
  p->reset_ledger();
  beam_search(*p, seed, cfg);
  const auto n = p->ledger().logical;
  check(n == 1600, "logical passes " + std::to_string(n));
  if (out.ok) out.detail = "logical passes " + std::to_string(n);
  return out;
}

// 5. Every sampler delivers exactly E edits inside the mask.
Outcome exactly_e() {
  Outcome out;
  Check check{out};
  const std::size_t L = 20, E = 3, per_sampler = 250;
  auto p = CoupledProvider::random(L, 501);
  std::mt19937_64 rng(502);
  std::size_t total = 0;
  for (auto kind : {SamplerKind::Beam, SamplerKind::Gibbs, SamplerKind::GibbsArgmax, SamplerKind::Denoise}) {
    std::size_t got = 0;
    for (int trial = 0; got < per_sampler && trial < 1000; ++trial) {
      const std::string seed = oracle::random_sequence(rng, L);
      std::vector<Position> all(L);
      std::iota(all.begin(), all.end(), 0);
      std::shuffle(all.begin(), all.end(), rng);
      const std::size_t m = E + rng() % (L - E + 1);
      const PositionMask mask(std::set<Position>(all.begin(), all.begin() + m));

      GenerationConfig cfg;
      cfg.kind = kind;
      cfg.edit_budget = E;
      cfg.rng_seed = rng();
      cfg.mask = mask;
      cfg.per_seed_count = std::min<std::size_t>(25, per_sampler - got);
      const auto run = batch_generate(*p, {CandidateSequence("s", ProteinSequence(seed))}, cfg);
      for (const auto& o : run.outputs) {
        std::size_t hamming = 0;
        for (Position i = 0; i < L; ++i) {
          if (o.candidate.sequence()[i] != seed[i]) {
            ++hamming;
            check(mask.contains(i), std::string(sampler_name(kind)) + " edited outside the mask");
          }
        }
        check(hamming == E, std::string(sampler_name(kind)) + " output at Hamming " + std::to_string(hamming));
        check(o.candidate.edit_count() == E, std::string(sampler_name(kind)) + " edit trace length");
        ++got;
      }
    }
    check(got == per_sampler, std::string(sampler_name(kind)) + " produced only " + std::to_string(got));
    total += got;
  }
  if (out.ok) out.detail = std::to_string(total) + " outputs at Hamming 3, all inside their masks";
  return out;
}

struct TrendSample {
  double beam_pll = 0, gibbs_pll = 0;
  double beam_div = 0, gibbs_div = 0;
};

double mean_intra_diversity(const std::vector<CandidateSequence>& kids) {
  const auto d = metrics::pairwise_diversity(kids, metrics::DiversityMode::IntraSeed);
  double sum = 0;
  std::size_t n = 0;
  for (const auto& v : d) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

/// Beam top-100 against 100 Gibbs samples for one RNG seed; shared by criteria 6 and 7.
const std::vector<TrendSample>& trend_runs() {
  static const std::vector<TrendSample> runs = [] {
    const std::size_t L = 20, E = 3, N = 100;
    const double tau = 1.5;
    auto p = CoupledProvider::random(L, 601);
    std::vector<TrendSample> out;
    for (std::uint64_t s = 1; s <= 5; ++s) {
      std::mt19937_64 rng(600 + s);
      const CandidateSequence seed("s", ProteinSequence(oracle::random_sequence(rng, L)));

      GenerationConfig cfg;
      cfg.edit_budget = E;
      cfg.tau = tau;
      cfg.gumbel_scale = 1.0;
      cfg.rng_seed = s;
      cfg.per_seed_count = N;
      cfg.threads = 4;
      cfg.kind = SamplerKind::Beam;
      const auto beam = batch_generate(*p, {seed}, cfg);
      cfg.kind = SamplerKind::Gibbs;
      const auto gibbs = batch_generate(*p, {seed}, cfg);

      auto summarize = [&](const GenerationRun& run, double& pll, double& div) {
        std::vector<CandidateSequence> kids;
        double sum = 0;
        for (const auto& o : run.outputs) {
          kids.push_back(o.candidate);
          sum += exact_pll(*p, o.candidate.sequence(), tau).sum_log;
        }
        pll = kids.empty() ? -INFINITY : sum / static_cast<double>(kids.size());
        div = mean_intra_diversity(kids);
        return kids.size();
      };
      TrendSample t;
      const auto nb = summarize(beam, t.beam_pll, t.beam_div);
      const auto ng = summarize(gibbs, t.gibbs_pll, t.gibbs_div);
      if (nb != N || ng != N) t.beam_pll = -INFINITY;  // short runs count as failures
      out.push_back(t);
    }
    return out;
  }();
  return runs;
}

// 6. Beam top-100 beats Gibbs on mean exact PLL.
Outcome beam_beats_gibbs() {
  Outcome out;
  std::size_t wins = 0;
  std::ostringstream ss;
  ss.precision(4);
  for (const auto& t : trend_runs()) {
    wins += t.beam_pll > t.gibbs_pll;
    ss << " " << t.beam_pll << ">" << t.gibbs_pll;
  }
  out.ok = wins == 5;
  out.detail = std::to_string(wins) + "/5 seeds, beam>gibbs:" + ss.str();
  return out;
}

// 7. Beam top-100 is no more diverse than Gibbs.
Outcome beam_less_diverse() {
  Outcome out;
  std::size_t wins = 0;
  std::ostringstream ss;
  ss.precision(4);
  for (const auto& t : trend_runs()) {
    wins += t.beam_div <= t.gibbs_div;
    ss << " " << t.beam_div << "<=" << t.gibbs_div;
  }
  out.ok = wins == 5;
  out.detail = std::to_string(wins) + "/5 seeds, beam<=gibbs:" + ss.str();
  return out;
}

// 8. NDS, STS and the weighted example.
Outcome guidance_sanity() {
  Outcome out;
  Check check{out};
  std::mt19937_64 rng(801);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 64, m = 1 + rng() % 4;
    // A coarse grid forces ties and weak dominance.
    std::uniform_int_distribution<int> grid(0, 5);
    std::vector<std::vector<double>> cols(m, std::vector<double>(n));
    std::vector<std::vector<double>> pts(n, std::vector<double>(m));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) pts[i][j] = cols[j][i] = grid(rng);
    }
    const auto matrix = orient_and_zscore(cols, std::vector<Direction>(m, Direction::Minimize));
    const auto ranks = nds_rank(matrix, 0);
    std::vector<std::size_t> front0;
    for (std::size_t i = 0; i < n; ++i) {
      if (ranks[i].front == 0) front0.push_back(i);
    }
    check(front0 == oracle::pareto_set(pts), "NDS front 0 differs from the Pareto set");
  }
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 63;
    std::normal_distribution<double> g(0, 3);
    std::vector<double> col(n);
    for (double& v : col) v = g(rng);
    const auto dir = trial % 2 ? Direction::Maximize : Direction::Minimize;
    const auto matrix = orient_and_zscore({col}, {dir});
    const double w[] = {0.5 + static_cast<double>(rng() % 4)};
    const auto sts = sts_scalarize(matrix, w);
    std::vector<std::size_t> by_sts(n), by_z(n);
    std::iota(by_sts.begin(), by_sts.end(), 0);
    std::iota(by_z.begin(), by_z.end(), 0);
    std::stable_sort(by_sts.begin(), by_sts.end(), [&](auto a, auto b) { return sts[a] < sts[b]; });
    std::stable_sort(by_z.begin(), by_z.end(), [&](auto a, auto b) { return matrix.z(a, 0) < matrix.z(b, 0); });
    check(by_sts == by_z, "STS permutation differs from the z-score permutation");
  }
  ScoreMatrix two;
  two.rows = 2;
  two.cols = 2;
  two.standardized = {0, -1, -1, 0};
  const double w[] = {1, 2};
  const auto s = sts_scalarize(two, w);
  check(std::abs(s[0] - std::log(1 + 2 * std::exp(-1.0))) < 1e-12, "weighted example, first candidate");
  check(std::abs(s[1] - std::log(std::exp(-1.0) + 2)) < 1e-12, "weighted example, second candidate");
  check(s[0] < s[1], "weighted example ordering");
  if (out.ok) out.detail = "200 Pareto instances, 200 STS permutations, weighted example " + fmt(s[0]) + " < " + fmt(s[1]);
  return out;
}

// 9. pI, liability and germline oracles.
Outcome metrics_oracles() {
  Outcome out;
  Check check{out};
  const metrics::PkaSet pka;
  std::mt19937_64 rng(901);
  double worst = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::string s = oracle::random_sequence(rng, 1 + rng() % 50);
    worst = std::max(worst, std::abs(metrics::isoelectric_point(ProteinSequence(s), pka) - oracle::pi_grid(s, pka)));
  }
  check(worst <= 2e-3, "pI gap " + fmt(worst));
  for (int trial = 0; trial < 1000; ++trial) {
    const ProteinSequence s(oracle::random_sequence(rng, 1 + rng() % 50));
    check(metrics::liability_scan(s, s).empty(), "self scan reported " + s.str());
  }
  const std::size_t L = 30;
  metrics::FrequencyTable table;
  std::uniform_real_distribution<double> u(0, 1);
  for (Position i = 0; i < L; ++i) {
    metrics::FrequencyTable::Row row{};
    double total = 0;
    for (double& v : row) total += (v = u(rng));
    for (double& v : row) v /= total;
    table.set(i, row);
  }
  double worst_anti = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::string seed = oracle::random_sequence(rng, L);
    std::string child = seed;
    const std::size_t edits = 1 + rng() % 6;
    for (std::size_t e = 0; e < edits; ++e) child[rng() % L] = oracle::kCodes[rng() % 20];
    const auto fwd = CandidateSequence::from_pair("s", ProteinSequence(seed), ProteinSequence(child));
    const auto back = CandidateSequence::from_pair("s", ProteinSequence(child), ProteinSequence(seed));
    worst_anti = std::max(worst_anti, std::abs(metrics::germline_delta(fwd, table) + metrics::germline_delta(back, table)));
  }
  check(worst_anti <= 1e-12, "germline antisymmetry gap " + fmt(worst_anti));
  if (out.ok) out.detail = "pI gap " + fmt(worst) + ", 1000 empty self scans, antisymmetry gap " + fmt(worst_anti);
  return out;
}

// 10. CLI outputs are byte-identical across thread counts.
const fs::path kDir = PLLBEAM_TEST_TMP;

std::string at(const std::string& name) { return (kDir / name).string(); }

int cli(const std::string& args) {
  const std::string cmd = std::string(PLLBEAM_CLI) + " " + args + " >>" + at("cli.log") + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return "<missing " + file + ">";
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome cli_determinism() {
  Outcome out;
  Check check{out};
  fs::remove_all(kDir);
  fs::create_directories(kDir);
  {
    std::ofstream seeds(at("seeds.fasta"));
    seeds << ">s1\nACDEFGHIKLMNPQRSTVWY\n>s2\nMKTAYIAKQRQISFVKSHFS\n>s3\nDPNGSMCAWQKTAYIAKQRE\n";
    std::ofstream obj(at("objectives.json"));
    obj << R"({"aggregation": "nds", "objectives": [{"name": "pseudo_perplexity"},)"
           R"( {"name": "pi", "scorer": {"kind": "builtin_pi"}},)"
           R"( {"name": "liabilities", "scorer": {"kind": "builtin_liability_count"}}]})";
  }

  // Each step is (subcommand, arguments with {T} for the thread count and {R} for the run tag, outputs).
  struct Step {
    std::string name;
    std::string args;
    std::vector<std::string> outputs;
  };
  const std::string seeds = " --seeds " + at("seeds.fasta");
  const std::string provider = " --provider coupled:" + at("coupled.json");
  const std::vector<Step> steps{
      {"generate beam", "generate --sampler beam --edits 3 --count 40 --rng-seed 11" + seeds + provider +
                            " --threads {T} --out " + at("beam_{R}.tsv"),
       {"beam_{R}.tsv", "beam_{R}.fasta"}},
      {"generate gibbs", "generate --sampler gibbs --edits 2 --count 30 --rng-seed 12" + seeds + provider +
                             " --threads {T} --out " + at("gibbs_{R}.tsv"),
       {"gibbs_{R}.tsv", "gibbs_{R}.fasta"}},
      {"generate gibbs-argmax", "generate --sampler gibbs-argmax --edits 2 --count 10"
                                " --rng-seed 13" + seeds + provider + " --threads {T} --out " + at("argmax_{R}.tsv"),
       {"argmax_{R}.tsv", "argmax_{R}.fasta"}},
      {"generate denoise", "generate --sampler denoise --edits 3 --count 30 --rng-seed 14" + seeds + provider +
                               " --threads {T} --out " + at("denoise_{R}.tsv"),
       {"denoise_{R}.tsv", "denoise_{R}.fasta"}},
      {"generate guided", "generate --sampler beam --edits 2 --count 20 --rng-seed 15 --objectives " +
                              at("objectives.json") + seeds + provider + " --threads {T} --out " + at("guided_{R}.tsv"),
       {"guided_{R}.tsv", "guided_{R}.fasta"}},
      {"score", "score --approximation exact --approximation nomask-child --candidates " + at("gibbs_a.tsv") + provider +
                    " --threads {T} --out " + at("score_{R}.tsv"),
       {"score_{R}.tsv"}},
      {"rank", "rank --candidates " + at("beam_a.tsv") + " --objectives " + at("objectives.json") +
                   " --top-k 60 --threads {T} --out " + at("rank_{R}.tsv"),
       {"rank_{R}.tsv"}},
      {"filter", "filter --candidates " + at("denoise_a.tsv") + seeds + " --max-pi 9 --threads {T} --out " +
                     at("filter_{R}.tsv"),
       {"filter_{R}.tsv", "filter_{R}.rejections.tsv"}},
      {"metrics", "metrics --candidates " + at("beam_a.tsv") + seeds + " --threads {T} --out " + at("metrics_{R}.tsv"),
       {"metrics_{R}.tsv", "metrics_{R}.liabilities.json"}},
  };

  auto expand = [](std::string s, const std::string& t, const std::string& r) {
    for (std::size_t pos; (pos = s.find("{T}")) != std::string::npos;) s.replace(pos, 3, t);
    for (std::size_t pos; (pos = s.find("{R}")) != std::string::npos;) s.replace(pos, 3, r);
    return s;
  };

  for (const char* tag : {"a", "b"}) {
    const int rc = cli("make-provider --kind coupled --length 20 --seed 1001 --out " + at(std::string("provider_") + tag + ".json"));
    check(rc == 0, "make-provider exited " + std::to_string(rc));
  }
  check(slurp(at("provider_a.json")) == slurp(at("provider_b.json")), "make-provider output differs");
  fs::copy_file(at("provider_a.json"), at("coupled.json"), fs::copy_options::overwrite_existing);

  std::size_t compared = 1;
  for (const auto& step : steps) {
    const int a = cli(expand(step.args, "1", "a"));
    const int b = cli(expand(step.args, "8", "b"));
    check(a == 0 && b == 0, step.name + " exited " + std::to_string(a) + "/" + std::to_string(b));
    for (const auto& file : step.outputs) {
      const auto fa = slurp(at(expand(file, "", "a")));
      check(!fa.empty(), step.name + " wrote an empty " + file);
      check(fa == slurp(at(expand(file, "", "b"))), step.name + " output " + file + " differs");
      ++compared;
    }
  }
  if (out.ok) out.detail = "6 subcommands, " + std::to_string(compared) + " output files identical";
  return out;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"equivalence collapse on a context-free model", equivalence_collapse},
      {"exact and double-mask scores match the naive oracle", oracle_exactness},
      {"forward-pass ledger for a full neighbourhood", cost_ledger},
      {"beam pass count", beam_passes},
      {"every sampler delivers exactly E edits", exactly_e},
      {"beam beats gibbs on mean exact PLL", beam_beats_gibbs},
      {"beam is no more diverse than gibbs", beam_less_diverse},
      {"guidance sanity", guidance_sanity},
      {"metrics oracles", metrics_oracles},
      {"CLI determinism across thread counts", cli_determinism},
  };
  // Runtime ceilings in seconds. 6 and 7 share one set of runs.
  const double limits[] = {1, 5, 10, 5, 30, 120, 120, 10, 30, 60};

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("threw: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.ok && secs > limits[i]) {
      o.ok = false;
      o.detail = "over the " + fmt(limits[i]) + " s limit; " + o.detail;
    }
    failed += !o.ok;
    std::printf("%s %zu %s (%.2f s): %s\n", o.ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed ? 1 : 0;
}
