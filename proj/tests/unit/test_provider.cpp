#include <doctest.h>

#include <filesystem>
#include <random>

#include "pllbeam/error.hpp"
#include "pllbeam/parallel.hpp"
#include "pllbeam/provider.hpp"
#include "support/oracles.hpp"

using namespace pllbeam;

namespace {

std::vector<LogitRow> zeros(std::size_t L) { return std::vector<LogitRow>(L, LogitRow{}); }

std::vector<LogitRow> random_rows(std::size_t L, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, 1);
  std::vector<LogitRow> rows(L);
  for (auto& row : rows) {
    for (double& v : row) v = n(rng);
  }
  return rows;
}

std::filesystem::path temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "pllbeam_test_provider";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("pssm all-zero row") {
  PssmProvider p(zeros(4));
  const std::vector<Position> masked{1};
  const auto rows = p.query(ProteinSequence("ACDE"), masked);
  REQUIRE(rows.size() == 1);
  for (double v : rows[0]) CHECK(v == 0.0);
}

TEST_CASE("pssm rows ignore sequence and mask set") {
  PssmProvider p(random_rows(6, 1));
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const ProteinSequence s(oracle::random_sequence(rng, 6));
    const Position i = rng() % 6;
    std::vector<Position> mask{i};
    for (Position j = 0; j < 6; ++j) {
      if (rng() % 2) mask.push_back(j);
    }
    const std::vector<Position> report{i};
    CHECK(p.query(s, mask, report)[0] == p.table()[i]);
  }
}

TEST_CASE("zero couplings reduce to a pssm with the same fields") {
  const auto h = random_rows(5, 3);
  CoupledProvider c(h);
  PssmProvider p(h);
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const ProteinSequence s(oracle::random_sequence(rng, 5));
    std::vector<Position> mask;
    for (Position j = 0; j < 5; ++j) {
      if (rng() % 2) mask.push_back(j);
    }
    if (mask.empty()) mask.push_back(0);
    CHECK(c.query(s, mask) == p.query(s, mask));
  }
}

TEST_CASE("hand-evaluated single coupling") {
  CoupledProvider c(zeros(3));
  c.set_coupling(0, index_of('A'), 2, index_of('E'), 1.0);
  CHECK(c.coupling(2, index_of('E'), 0, index_of('A')) == 1.0);
  const std::vector<Position> masked{0};
  const auto row = c.query(ProteinSequence("CCE"), masked)[0];
  for (std::size_t r = 0; r < kAlphabetSize; ++r) CHECK(row[r] == (r == index_of('A') ? 1.0 : 0.0));
  // Masking the partner removes the contribution.
  const std::vector<Position> both{0, 2};
  const std::vector<Position> report{0};
  const auto hidden = c.query(ProteinSequence("CCE"), both, report)[0];
  for (double v : hidden) CHECK(v == 0.0);
}

TEST_CASE("coupled logits match the term-by-term oracle") {
  auto c = CoupledProvider::random(6, 9, 1.0, 0.5, 2.0);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const std::string s = oracle::random_sequence(rng, 6);
    std::set<int> masked;
    for (int j = 0; j < 6; ++j) {
      if (rng() % 3 == 0) masked.insert(j);
    }
    std::vector<Position> mask(masked.begin(), masked.end());
    std::vector<Position> report{0, 1, 2, 3, 4, 5};
    const auto rows = c->query(ProteinSequence(s), mask, report);
    for (int i = 0; i < 6; ++i) {
      const auto expect = oracle::coupled_row(*c, s, masked, i);
      for (int r = 0; r < 20; ++r) CHECK(rows[i][r] == doctest::Approx(expect[r]).epsilon(1e-12));
    }
  }
}

TEST_CASE("single-mask conditionals equal the Boltzmann conditionals") {
  for (std::size_t L : {2u, 3u, 4u}) {
    auto c = CoupledProvider::random(L, 100 + L, 1.0, 0.5, 0.0);
    std::mt19937_64 rng(L);
    const std::string s = oracle::random_sequence(rng, L);
    for (Position i = 0; i < L; ++i) {
      const std::vector<Position> masked{i};
      const auto row = c->query(ProteinSequence(s), masked)[0];
      double z = 0;
      for (double v : row) z += std::exp(v);
      const auto expect = oracle::boltzmann_conditional(*c, s, static_cast<int>(i));
      for (std::size_t r = 0; r < kAlphabetSize; ++r) {
        CHECK(std::exp(row[r]) / z == doctest::Approx(expect[r]).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("ledger counts logical and physical passes") {
  PssmProvider p(zeros(4));
  CHECK(p.ledger().logical == 0);
  const ProteinSequence s("ACDE");
  const std::vector<Position> m{1};
  for (int k = 0; k < 3; ++k) p.query(s, m);
  CHECK(p.ledger().logical == 3);
  CHECK(p.ledger().physical == 3);
  p.set_memoize(true);
  p.reset_ledger();
  for (int k = 0; k < 3; ++k) p.query(s, m);
  CHECK(p.ledger().logical == 3);
  CHECK(p.ledger().physical == 1);
  std::vector<QueryRequest> batch{{s, {1}, {1}}, {s, {2}, {2}}, {s, {2}, {2}}};
  p.query_batch(batch);
  CHECK(p.ledger().logical == 6);
  CHECK(p.ledger().physical == 2);
}

TEST_CASE("ledger is exact under concurrent queries") {
  PssmProvider p(zeros(8));
  const ProteinSequence s("ACDEFGHI");
  parallel_for(4000, 8, [&](std::size_t i) {
    const std::vector<Position> m{i % 8};
    p.query(s, m);
  });
  CHECK(p.ledger().logical == 4000);
}

TEST_CASE("request validation") {
  PssmProvider p(zeros(4));
  const std::vector<Position> bad{4};
  try {
    p.query(ProteinSequence("ACDEF"), {});
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LengthMismatch);
  }
  try {
    p.query(ProteinSequence("ACDE"), bad);
    FAIL("expected PositionOutOfRange");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PositionOutOfRange);
  }
  CHECK(p.ledger().logical == 0);
}

TEST_CASE("empty mask set reports the requested rows") {
  auto c = CoupledProvider::random(4, 1);
  const std::string s = "ACDE";
  const std::vector<Position> report{3, 0};
  const auto rows = c->query(ProteinSequence(s), {}, report);
  REQUIRE(rows.size() == 2);
  const auto expect = oracle::coupled_row(*c, s, {}, 3);
  for (int r = 0; r < 20; ++r) CHECK(rows[0][r] == doctest::Approx(expect[r]).epsilon(1e-12));
}

TEST_CASE("provider files round trip") {
  const auto pssm_path = temp_file("p.tsv");
  auto pssm = PssmProvider::random(7, 3);
  pssm->save(pssm_path);
  auto pssm_back = PssmProvider::load(pssm_path);
  CHECK(pssm_back->table() == pssm->table());

  const auto coupled_path = temp_file("c.json");
  auto coupled = CoupledProvider::random(5, 8, 1.0, 0.5, 1.25);
  coupled->save(coupled_path);
  auto back = CoupledProvider::load(coupled_path);
  CHECK(back->self_weight() == 1.25);
  REQUIRE(back->length() == 5);
  for (Position i = 0; i < 5; ++i) {
    for (std::size_t r = 0; r < 20; ++r) {
      CHECK(back->field(i, r) == coupled->field(i, r));
      for (Position j = 0; j < 5; ++j) {
        for (std::size_t s = 0; s < 20; ++s) CHECK(back->coupling(i, r, j, s) == coupled->coupling(i, r, j, s));
      }
    }
  }
  auto opened = open_provider("coupled:" + coupled_path.string());
  CHECK(opened->fixed_length() == 5u);
  CHECK_THROWS_AS(open_provider("bogus:thing"), Error);
}

TEST_CASE("random providers are reproducible from the seed") {
  auto a = CoupledProvider::random(4, 77);
  auto b = CoupledProvider::random(4, 77);
  auto c = CoupledProvider::random(4, 78);
  CHECK(a->field(2, 5) == b->field(2, 5));
  CHECK(a->coupling(0, 1, 3, 2) == b->coupling(0, 1, 3, 2));
  CHECK(a->field(2, 5) != c->field(2, 5));
}
