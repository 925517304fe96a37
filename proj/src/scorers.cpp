#include "pllbeam/scorers.hpp"

#include <cmath>
#include <fstream>

#include <httplib.h>
#include <json.hpp>

#include "pllbeam/error.hpp"
#include "pllbeam/io.hpp"

namespace pllbeam {

using nlohmann::json;

std::vector<double> FunctionScorer::score(std::span<const ProteinSequence> sequences) {
  std::vector<double> out;
  out.reserve(sequences.size());
  for (const auto& s : sequences) out.push_back(fn_(s));
  return out;
}

std::shared_ptr<TableScorer> TableScorer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::map<std::string, double> table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto cells = io::split(line, '\t');
    if (cells.size() != 2) {
      throw Error(ErrorCode::Parse, path.string() + ":" + std::to_string(line_no) + ": expected sequence<TAB>score");
    }
    if (line_no == 1 && cells[0] == "sequence") continue;
    table[cells[0]] = io::parse_double(cells[1]);
  }
  return std::make_shared<TableScorer>(std::move(table), "table:" + path.filename().string());
}

std::vector<double> TableScorer::score(std::span<const ProteinSequence> sequences) {
  std::vector<double> out;
  out.reserve(sequences.size());
  for (const auto& s : sequences) {
    auto it = table_.find(s.str());
    if (it == table_.end()) throw Error(ErrorCode::ScorerFailure, label_ + " has no entry for " + s.str());
    out.push_back(it->second);
  }
  return out;
}

std::vector<double> RemoteScorer::score(std::span<const ProteinSequence> sequences) {
  // The URL may carry a path prefix in front of /score.
  std::string host = url_;
  std::string prefix;
  const auto scheme = url_.find("://");
  const auto slash = url_.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (slash != std::string::npos) {
    host = url_.substr(0, slash);
    prefix = url_.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  }
  httplib::Client client(host);
  client.set_read_timeout(timeout_seconds_, 0);
  client.set_connection_timeout(timeout_seconds_, 0);
  json body{{"sequences", json::array()}};
  for (const auto& s : sequences) body["sequences"].push_back(s.str());
  auto res = client.Post(prefix + "/score", body.dump(), "application/json");
  if (!res) throw Error(ErrorCode::ScorerFailure, describe() + ": " + httplib::to_string(res.error()));
  if (res->status != 200) throw Error(ErrorCode::ScorerFailure, describe() + ": HTTP " + std::to_string(res->status));
  try {
    const auto scores = json::parse(res->body).at("scores").get<std::vector<double>>();
    if (scores.size() != sequences.size()) throw Error(ErrorCode::ScorerFailure, describe() + ": wrong number of scores");
    return scores;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ScorerFailure, describe() + ": " + e.what());
  }
}

std::shared_ptr<Scorer> isoelectric_point_scorer(metrics::PkaSet pka) {
  return std::make_shared<FunctionScorer>(
      "builtin_pi", [pka](const ProteinSequence& s) { return metrics::isoelectric_point(s, pka); });
}

std::shared_ptr<Scorer> liability_count_scorer() {
  return std::make_shared<FunctionScorer>("builtin_liability_count", [](const ProteinSequence& s) {
    return static_cast<double>(metrics::liability_count(s));
  });
}

ObjectiveSet parse_objective_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  ObjectiveSet set;
  try {
    const json doc = json::parse(json_text);
    const json* list = &doc;
    if (doc.is_object()) {
      if (doc.contains("aggregation")) set.aggregation = parse_aggregation(doc["aggregation"].get<std::string>());
      if (doc.contains("tie_break")) set.tie_break = doc["tie_break"].get<std::string>();
      list = &doc.at("objectives");
    }
    if (!list->is_array()) throw Error(ErrorCode::Parse, "objectives must be a JSON array");
    for (const auto& item : *list) {
      ObjectiveSpec spec;
      spec.name = item.at("name").get<std::string>();
      spec.direction = parse_direction(item.value("direction", std::string("minimize")));
      spec.weight = item.value("weight", 1.0);
      if (item.contains("scorer")) {
        const auto& sc = item["scorer"];
        const auto kind = sc.at("kind").get<std::string>();
        if (kind == "remote") {
          spec.scorer = std::make_shared<RemoteScorer>(sc.at("url").get<std::string>());
        } else if (kind == "table") {
          std::filesystem::path file = sc.at("file").get<std::string>();
          if (file.is_relative() && !base_dir.empty()) file = base_dir / file;
          spec.scorer = TableScorer::load(file);
        } else if (kind == "builtin_pi") {
          spec.scorer = isoelectric_point_scorer();
        } else if (kind == "builtin_liability_count") {
          spec.scorer = liability_count_scorer();
        } else {
          throw Error(ErrorCode::Parse, "unknown scorer kind '" + kind + "'");
        }
      }
      set.objectives.push_back(std::move(spec));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("objective config: ") + e.what());
  }
  set.validate();
  return set;
}

ObjectiveSet load_objective_config(const std::filesystem::path& path) {
  return parse_objective_config(io::read_text_file(path), path.parent_path());
}

}  // namespace pllbeam
