#include <doctest.h>

#include <fstream>
#include <json.hpp>

#include "pllbeam/error.hpp"
#include "pllbeam/scorers.hpp"
#include "support/loopback.hpp"

using namespace pllbeam;

namespace {

std::filesystem::path scratch() {
  auto dir = std::filesystem::temp_directory_path() / "pllbeam_test_scorers";
  std::filesystem::create_directories(dir);
  return dir;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("table scorer is closed-world") {
  const auto path = scratch() / "table.tsv";
  {
    std::ofstream out(path);
    out << "sequence\tscore\nACDE\t0.25\n# skipped\nWWWW\t-1\n";
  }
  auto t = TableScorer::load(path);
  const std::vector<ProteinSequence> seqs{ProteinSequence("WWWW"), ProteinSequence("ACDE")};
  CHECK(t->score(seqs) == std::vector<double>{-1, 0.25});
  const std::vector<ProteinSequence> unknown{ProteinSequence("AAAA")};
  CHECK(code_of([&] { t->score(unknown); }) == ErrorCode::ScorerFailure);
}

TEST_CASE("objective config parsing") {
  const auto dir = scratch();
  {
    std::ofstream out(dir / "p.tsv");
    out << "ACDE\t0.9\n";
  }
  const auto set = parse_objective_config(R"({
    "aggregation": "nds",
    "tie_break": "pseudo_perplexity",
    "objectives": [
      {"name": "pseudo_perplexity"},
      {"name": "p_success", "direction": "maximize", "weight": 2, "scorer": {"kind": "table", "file": "p.tsv"}},
      {"name": "pi", "scorer": {"kind": "builtin_pi"}},
      {"name": "liabilities", "scorer": {"kind": "builtin_liability_count"}}
    ]})",
                                          dir);
  CHECK(set.aggregation == Aggregation::Nds);
  REQUIRE(set.objectives.size() == 4);
  CHECK(set.objectives[0].scorer == nullptr);
  CHECK(set.objectives[1].direction == Direction::Maximize);
  CHECK(set.objectives[1].weight == 2.0);
  const std::vector<ProteinSequence> one{ProteinSequence("ACDE")};
  CHECK(set.objectives[1].scorer->score(one)[0] == 0.9);
  CHECK(set.objectives[2].scorer->score(one)[0] == doctest::Approx(metrics::isoelectric_point(one[0])));

  const auto bare = parse_objective_config(R"([{"name": "pi", "scorer": {"kind": "builtin_pi"}}])");
  CHECK(bare.aggregation == Aggregation::Sts);
  CHECK(bare.objectives.size() == 1);

  CHECK(code_of([] { parse_objective_config("{"); }) == ErrorCode::Parse);
  CHECK(code_of([] { parse_objective_config(R"([{"name": "x", "scorer": {"kind": "magic"}}])"); }) ==
        ErrorCode::Parse);
  CHECK(code_of([] { parse_objective_config(R"([{"name": "x"}])"); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] {
          parse_objective_config(R"([{"name": "pseudo_perplexity", "direction": "maximize"}])");
        }) == ErrorCode::InvalidArgument);
}

TEST_CASE("remote scorer over loopback") {
  loopback::Server server;
  server.http().Post("/score", [](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    nlohmann::json scores = nlohmann::json::array();
    for (const auto& s : body["sequences"]) scores.push_back(static_cast<double>(s.get<std::string>().size()) / 10);
    res.set_content(nlohmann::json{{"scores", scores}}.dump(), "application/json");
  });
  server.http().Post("/broken/score", [](const httplib::Request&, httplib::Response& res) {
    res.status = 500;
    res.set_content("{}", "application/json");
  });
  const auto url = server.start();
  RemoteScorer scorer(url, 5);
  const std::vector<ProteinSequence> seqs{ProteinSequence("AC"), ProteinSequence("ACDEF")};
  CHECK(scorer.score(seqs) == std::vector<double>{0.2, 0.5});

  const auto set = parse_objective_config(R"([{"name": "len", "scorer": {"kind": "remote", "url": ")" + url +
                                          R"("}}])");
  CHECK(set.objectives[0].scorer->score(seqs) == std::vector<double>{0.2, 0.5});

  RemoteScorer broken(url + "/broken", 5);
  CHECK(code_of([&] { broken.score(seqs); }) == ErrorCode::ScorerFailure);
  server.stop();
  CHECK(code_of([&] { scorer.score(seqs); }) == ErrorCode::ScorerFailure);
}
