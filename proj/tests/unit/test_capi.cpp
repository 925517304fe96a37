#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "pllbeam/pllbeam.h"

namespace fs = std::filesystem;

namespace {

fs::path tmp(const std::string& name) {
  fs::create_directories(PLLBEAM_TEST_TMP);
  return fs::path(PLLBEAM_TEST_TMP) / name;
}

void write(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string take(char* s) {
  std::string out = s ? s : "";
  pb_string_free(s);
  return out;
}

struct Fixture {
  pb_provider* provider = nullptr;
  pb_candidates* seeds = nullptr;

  Fixture() {
    const auto model = tmp("model.tsv");
    REQUIRE(pb_provider_write_random("pssm", 12, 5, 1.0, 0.0, 0.0, model.string().c_str()) == PB_OK);
    REQUIRE(pb_provider_open(("pssm:" + model.string()).c_str(), &provider) == PB_OK);
    const auto fasta = tmp("seeds.fasta");
    write(fasta, ">s1\nACDEFGHIKLMN\n>s2\nMNPQRSTVWYAC\n");
    REQUIRE(pb_seeds_read_fasta(fasta.string().c_str(), &seeds) == PB_OK);
  }
  ~Fixture() {
    pb_candidates_free(seeds);
    pb_provider_free(provider);
  }
};

}  // namespace

TEST_CASE("status names and errors") {
  CHECK(std::string(pb_status_name(PB_ERR_PARSE)) == "Parse");
  CHECK(std::strlen(pb_version()) > 0);
  pb_provider* p = nullptr;
  CHECK(pb_provider_open("nonsense", &p) != PB_OK);
  CHECK(p == nullptr);
  CHECK(std::strlen(pb_last_error()) > 0);
  CHECK(pb_provider_open(("pssm:" + tmp("missing.tsv").string()).c_str(), &p) == PB_ERR_IO);
  CHECK(pb_provider_open("remote:http://127.0.0.1:1", &p) == PB_ERR_PROVIDER_UNAVAILABLE);
  CHECK(pb_provider_open(nullptr, &p) == PB_ERR_INVALID_ARGUMENT);
}

TEST_CASE_FIXTURE(Fixture, "seeds and provider info") {
  CHECK(pb_candidates_size(seeds) == 2);
  CHECK(std::string(pb_candidates_id(seeds, 1)) == "s2");
  CHECK(std::string(pb_candidates_seed_id(seeds, 1)) == "s2");
  CHECK(std::string(pb_candidates_edits(seeds, 0)) == "-");
  CHECK(pb_candidates_field(seeds, 0, "sum_log") == nullptr);
  char* info = nullptr;
  REQUIRE(pb_provider_info_json(provider, &info) == PB_OK);
  const auto text = take(info);
  CHECK(text.find("ACDEFGHIKLMNPQRSTVWY") != std::string::npos);
  CHECK(text.find("\"max_length\":12") != std::string::npos);
}

TEST_CASE_FIXTURE(Fixture, "generate, write and read back") {
  pb_generate_config cfg;
  pb_generate_config_default(&cfg);
  CHECK(cfg.beam_size == 5);
  CHECK(cfg.tau == 1.5);
  cfg.edits = 2;
  cfg.count = 15;
  cfg.rng_seed = 7;
  pb_run* run = nullptr;
  REQUIRE(pb_generate(provider, seeds, nullptr, &cfg, nullptr, &run) == PB_OK);
  const pb_candidates* out = pb_run_outputs(run);
  REQUIRE(pb_candidates_size(out) == 30);
  CHECK_FALSE(pb_run_shortfall(run));
  CHECK(std::string(pb_candidates_id(out, 0)) == "s1.1");
  CHECK(std::string(pb_candidates_seed_id(out, 20)) == "s2");
  CHECK(pb_candidates_edit_count(out, 3) == 2);
  CHECK(std::string(pb_candidates_seed_sequence(out, 3)) == "ACDEFGHIKLMN");
  REQUIRE(pb_candidates_field(out, 0, "sum_log") != nullptr);
  uint64_t logical = 0, physical = 0;
  pb_provider_ledger(provider, &logical, &physical);
  CHECK(logical == 2 * 12 * (1 + 5 * 1));
  char* summary = nullptr;
  REQUIRE(pb_run_summary_json(run, &summary) == PB_OK);
  const auto s = take(summary);
  CHECK(s.find("\"achieved\":15") != std::string::npos);

  const auto tsv = tmp("gen.tsv");
  const auto fa = tmp("gen.fasta");
  REQUIRE(pb_candidates_write_tsv(out, tsv.string().c_str()) == PB_OK);
  REQUIRE(pb_candidates_write_fasta(out, fa.string().c_str()) == PB_OK);
  pb_candidates* back = nullptr;
  REQUIRE(pb_candidates_read(tsv.string().c_str(), nullptr, &back) == PB_OK);
  CHECK(pb_candidates_size(back) == 30);
  CHECK(std::string(pb_candidates_sequence(back, 4)) == pb_candidates_sequence(out, 4));
  CHECK(std::string(pb_candidates_field(back, 4, "sum_log")) == pb_candidates_field(out, 4, "sum_log"));
  pb_candidates* from_fasta = nullptr;
  REQUIRE(pb_candidates_read(fa.string().c_str(), seeds, &from_fasta) == PB_OK);
  CHECK(std::string(pb_candidates_edits(from_fasta, 7)) == pb_candidates_edits(out, 7));

  // Scores reported by the beam agree with exact scoring on a context-free model.
  std::vector<double> sum(30), per(30), ppl(30);
  uint64_t passes = 0;
  REQUIRE(pb_score(provider, back, "exact", 1.5, 4, sum.data(), per.data(), ppl.data(), &passes) == PB_OK);
  CHECK(passes == 30 * 12);
  for (std::size_t i = 0; i < 30; ++i) {
    CHECK(sum[i] == doctest::Approx(std::stod(pb_candidates_field(back, i, "sum_log"))).epsilon(1e-12));
    CHECK(per[i] == doctest::Approx(sum[i] / 12));
  }
  // Two-edit children are outside the template approximations.
  CHECK(pb_score(provider, back, "wt", 1.5, 1, sum.data(), per.data(), ppl.data(), &passes) ==
        PB_ERR_NOT_SINGLE_SUBSTITUTION);

  const size_t pick[] = {5, 0};
  pb_candidates* sub = nullptr;
  REQUIRE(pb_candidates_select(back, pick, 2, &sub) == PB_OK);
  CHECK(std::string(pb_candidates_id(sub, 1)) == pb_candidates_id(back, 0));
  REQUIRE(pb_candidates_set_field(sub, 0, "note", "x") == PB_OK);
  CHECK(std::string(pb_candidates_field(sub, 0, "note")) == "x");
  CHECK(pb_candidates_field(sub, 1, "note") == nullptr);

  pb_candidates_free(sub);
  pb_candidates_free(from_fasta);
  pb_candidates_free(back);
  pb_run_free(run);
}

TEST_CASE_FIXTURE(Fixture, "five approximations agree on single substitutions") {
  pb_generate_config cfg;
  pb_generate_config_default(&cfg);
  cfg.edits = 1;
  cfg.count = 10;
  pb_run* run = nullptr;
  REQUIRE(pb_generate(provider, seeds, nullptr, &cfg, nullptr, &run) == PB_OK);
  const pb_candidates* out = pb_run_outputs(run);
  const std::size_t n = pb_candidates_size(out);
  std::vector<std::vector<double>> sums;
  std::vector<uint64_t> costs;
  for (const char* a : {"exact", "double-mask", "wt", "nomask-child", "nomask-template"}) {
    std::vector<double> sum(n), per(n), ppl(n);
    uint64_t passes = 0;
    REQUIRE(pb_score(provider, out, a, 1.0, 2, sum.data(), per.data(), ppl.data(), &passes) == PB_OK);
    sums.push_back(sum);
    costs.push_back(passes);
  }
  for (std::size_t k = 1; k < sums.size(); ++k) {
    for (std::size_t i = 0; i < n; ++i) CHECK(sums[k][i] == doctest::Approx(sums[0][i]).epsilon(1e-9));
  }
  CHECK(costs[0] == n * 12);
  CHECK(costs[2] == 2 * 12);
  CHECK(costs[3] == n);
  CHECK(costs[4] == 2);
  CHECK(pb_score(provider, out, "fast", 1.0, 1, nullptr, nullptr, nullptr, nullptr) == PB_ERR_INVALID_ARGUMENT);
  pb_run_free(run);
}

TEST_CASE_FIXTURE(Fixture, "mask and budget validation") {
  const auto path = tmp("mask.txt");
  write(path, "1-2\n");
  pb_mask* mask = nullptr;
  REQUIRE(pb_mask_read(path.string().c_str(), &mask) == PB_OK);
  CHECK(pb_mask_size(mask) == 2);
  pb_generate_config cfg;
  pb_generate_config_default(&cfg);
  cfg.edits = 3;
  pb_run* run = nullptr;
  CHECK(pb_generate(provider, seeds, mask, &cfg, nullptr, &run) == PB_ERR_EDIT_BUDGET_EXCEEDS_MASK);
  CHECK(run == nullptr);
  cfg.sampler = "gibbs-argmax";
  cfg.edits = 1;
  cfg.count = 5;
  REQUIRE(pb_generate(provider, seeds, mask, &cfg, nullptr, &run) == PB_OK);
  CHECK(pb_run_shortfall(run));
  CHECK(pb_candidates_size(pb_run_outputs(run)) == 4);
  pb_run_free(run);
  pb_mask_free(mask);
}

TEST_CASE_FIXTURE(Fixture, "objectives and ranking") {
  const auto table = tmp("p.tsv");
  write(table, "ACDEFGHIKLMN\t0.5\nMNPQRSTVWYAC\t0.7\n");
  const auto cfg = tmp("objectives.json");
  write(cfg, R"({"objectives": [{"name": "p", "direction": "maximize", "scorer": {"kind": "table", "file": "p.tsv"}},
                                 {"name": "pi", "scorer": {"kind": "builtin_pi"}}]})");
  pb_objectives* obj = nullptr;
  REQUIRE(pb_objectives_load(cfg.string().c_str(), &obj) == PB_OK);
  CHECK(pb_objectives_count(obj) == 2);
  CHECK(std::string(pb_objectives_name(obj, 0)) == "p");
  CHECK(pb_objectives_maximize(obj, "p") == 1);
  CHECK(pb_objectives_maximize(obj, "pi") == 0);
  CHECK(pb_objectives_maximize(obj, "nope") == -1);

  double scores[2];
  REQUIRE(pb_objectives_score(obj, "p", seeds, scores) == PB_OK);
  CHECK(scores[0] == 0.5);
  size_t order[2];
  REQUIRE(pb_rank_by(obj, "p", seeds, order, scores) == PB_OK);
  CHECK(order[0] == 1);
  CHECK(order[1] == 0);

  const double plls[] = {-10, -30};
  double rank_score[2];
  REQUIRE(pb_rank(obj, seeds, plls, order, rank_score) == PB_OK);
  CHECK(std::isfinite(rank_score[0]));
  REQUIRE(pb_objectives_set_aggregation(obj, "nds") == PB_OK);
  REQUIRE(pb_rank(obj, seeds, plls, order, rank_score) == PB_OK);
  CHECK(rank_score[order[0]] == 0.0);
  CHECK(pb_objectives_set_tie_break(obj, "missing") != PB_OK);
  CHECK(pb_objectives_set_aggregation(obj, "best") != PB_OK);
  CHECK(pb_rank_by(obj, "pseudo_perplexity", seeds, order, nullptr) != PB_OK);

  write(table, "ACDEFGHIKLMN\t0.5\n");
  pb_objectives* partial = nullptr;
  REQUIRE(pb_objectives_load(cfg.string().c_str(), &partial) == PB_OK);
  CHECK(pb_rank(partial, seeds, plls, order, nullptr) == PB_ERR_SCORER_FAILURE);
  pb_objectives_free(partial);
  pb_objectives_free(obj);
}

TEST_CASE("metrics through the C API") {
  double pi = 0;
  REQUIRE(pb_isoelectric_point(nullptr, "KKKK", &pi) == PB_OK);
  CHECK(pi > 10);
  CHECK(pb_isoelectric_point(nullptr, "KXKK", &pi) == PB_ERR_INVALID_RESIDUE);

  size_t count = 0;
  char* json = nullptr;
  REQUIRE(pb_liability_scan("KAGT", "KNGT", &count, &json) == PB_OK);
  CHECK(count == 2);
  const auto text = take(json);
  CHECK(text.find("\"class\":\"deamidation\"") != std::string::npos);
  CHECK(text.find("\"class\":\"n_glycosylation\"") != std::string::npos);
  CHECK(text.find("\"start\":2") != std::string::npos);
  CHECK(pb_liability_scan("KAGT", "KNG", &count, &json) == PB_ERR_LENGTH_MISMATCH);

  const auto fasta = tmp("kids.fasta");
  write(fasta, ">a seed=s edits=4:A>C\nAAAC\n>b seed=s edits=3:A>C;4:A>C\nAACC\n>c seed=s edits=-\nAAAA\n");
  pb_candidates* kids = nullptr;
  REQUIRE(pb_candidates_read(fasta.string().c_str(), nullptr, &kids) == PB_OK);
  double div[3];
  int has[3];
  REQUIRE(pb_pairwise_diversity(kids, "intra", div, has) == PB_OK);
  CHECK(div[0] == 1.0);
  CHECK(div[1] == 1.5);
  CHECK(div[2] == 1.5);
  REQUIRE(pb_pairwise_diversity(kids, "inter", div, has) == PB_OK);
  CHECK(has[0] == 0);

  const auto mask_path = tmp("kids_mask.txt");
  write(mask_path, "3\n");
  pb_mask* mask = nullptr;
  REQUIRE(pb_mask_read(mask_path.string().c_str(), &mask) == PB_OK);
  size_t in = 9, out = 9;
  REQUIRE(pb_region_mutation_count(kids, 1, mask, &in, &out) == PB_OK);
  CHECK(in == 1);
  CHECK(out == 1);

  const auto freq = tmp("freq.tsv");
  {
    std::ofstream f(freq);
    for (int pos = 1; pos <= 4; ++pos) {
      f << pos;
      for (int r = 0; r < 20; ++r) f << '\t' << (r == 0 ? 0.5 : r == 1 ? 0.25 : 0.0);
      f << '\n';
    }
  }
  pb_freqtable* table = nullptr;
  REQUIRE(pb_freqtable_read(freq.string().c_str(), &table) == PB_OK);
  double delta = 0;
  REQUIRE(pb_germline_delta(kids, 1, table, &delta) == PB_OK);
  CHECK(delta == doctest::Approx(-0.5));

  pb_freqtable_free(table);
  pb_mask_free(mask);
  pb_candidates_free(kids);
}
