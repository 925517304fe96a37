#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "pllbeam/error.hpp"
#include "pllbeam/io.hpp"
#include "support/oracles.hpp"

using namespace pllbeam;
using namespace pllbeam::io;

TEST_CASE("fasta reading joins wrapped lines and splits descriptions") {
  std::istringstream in(">s1 seed=s0 edits=2:C>G\nAG\nDE\n\n>s2\r\nKKK\r\n");
  const auto recs = read_fasta(in);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].id == "s1");
  CHECK(recs[0].sequence == "AGDE");
  CHECK(description_field(recs[0].description, "edits").value() == "2:C>G");
  CHECK(description_field(recs[0].description, "seed").value() == "s0");
  CHECK_FALSE(description_field(recs[0].description, "missing").has_value());
  CHECK(recs[1].sequence == "KKK");
}

TEST_CASE("fasta with data before a header is rejected") {
  std::istringstream in("ACDE\n>s\nAC\n");
  CHECK_THROWS_AS(read_fasta(in), Error);
}

TEST_CASE("mask files use 1-based lines and ranges") {
  std::istringstream in("# CDR1\n3\n10-12  # loop\n\n5\n");
  const auto mask = read_mask(in);
  CHECK(mask.positions() == std::set<Position>{2, 4, 9, 10, 11});
  std::istringstream zero("0\n");
  CHECK_THROWS_AS(read_mask(zero), Error);
  std::istringstream backwards("9-4\n");
  CHECK_THROWS_AS(read_mask(backwards), Error);
}

TEST_CASE("candidate fasta derives edits against the seed") {
  const auto seeds = seeds_from_fasta({{"s", "", "ACDE"}});
  const auto cands = candidates_from_fasta({{"c1", "seed=s", "AGDE"}, {"c2", "seed=s edits=4:E>W", "ACDW"}}, seeds);
  REQUIRE(cands.size() == 2);
  CHECK(format_edits(cands[0].candidate.edits()) == "2:C>G");
  CHECK(cands[1].candidate.seed_sequence().str() == "ACDE");
  const auto fasta = candidates_to_fasta(cands);
  CHECK(fasta[0].description == "seed=s edits=2:C>G");
}

TEST_CASE("candidate tsv round trip keeps extra columns") {
  CandidateTable t;
  t.extra_columns = {"score", "note"};
  const auto c = CandidateSequence::from_pair("s", ProteinSequence("ACDE"), ProteinSequence("AGDW"));
  t.rows.push_back({"x1", c, {{"score", "-1.5"}, {"note", "ok"}}});
  t.rows.push_back({"x2", CandidateSequence("s", ProteinSequence("ACDE")), {{"score", "2"}}});
  std::ostringstream out;
  write_candidate_tsv(out, t);
  CHECK(out.str() ==
        "id\tseed_id\tsequence\tedits\tscore\tnote\n"
        "x1\ts\tAGDW\t2:C>G;4:E>W\t-1.5\tok\n"
        "x2\ts\tACDE\t-\t2\tNA\n");
  std::istringstream in(out.str());
  const auto back = read_candidate_tsv(in);
  CHECK(back.extra_columns == t.extra_columns);
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[0].candidate.edits() == c.edits());
  CHECK(back.rows[0].fields.at("note") == "ok");
  CHECK(back.rows[1].fields.at("note") == "NA");
}

TEST_CASE("candidate tsv rejects inconsistent traces") {
  std::istringstream in("id\tseed_id\tsequence\tedits\nx\ts\tAGDE\t2:W>C\n");
  CHECK_THROWS_AS(read_candidate_tsv(in), Error);
  std::istringstream ragged("id\tseed_id\tsequence\tedits\nx\ts\tAGDE\n");
  CHECK_THROWS_AS(read_candidate_tsv(ragged), Error);
}

TEST_CASE("doubles round trip exactly through text") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) / 7.0;
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK(format_double(std::nan("")) == "NA");
  CHECK(std::isnan(parse_double("NA")));
  CHECK(std::isnan(parse_double("")));
  CHECK_THROWS_AS(parse_double("1.5x"), Error);
}
