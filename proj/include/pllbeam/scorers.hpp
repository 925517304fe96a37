#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>

#include "pllbeam/guidance.hpp"
#include "pllbeam/metrics.hpp"

namespace pllbeam {

/// Wraps a plain per-sequence function.
class FunctionScorer final : public Scorer {
 public:
  FunctionScorer(std::string label, std::function<double(const ProteinSequence&)> fn)
      : label_(std::move(label)), fn_(std::move(fn)) {}
  std::string describe() const override { return label_; }
  std::vector<double> score(std::span<const ProteinSequence> sequences) override;

 private:
  std::string label_;
  std::function<double(const ProteinSequence&)> fn_;
};

/// Closed-world lookup from a `sequence<TAB>score` file; unknown sequences fail.
class TableScorer final : public Scorer {
 public:
  explicit TableScorer(std::map<std::string, double> table, std::string label = "table")
      : table_(std::move(table)), label_(std::move(label)) {}
  static std::shared_ptr<TableScorer> load(const std::filesystem::path& path);
  std::string describe() const override { return label_; }
  std::vector<double> score(std::span<const ProteinSequence> sequences) override;

 private:
  std::map<std::string, double> table_;
  std::string label_;
};

/// POST {url}/score {"sequences": [...]} -> {"scores": [...]}.
class RemoteScorer final : public Scorer {
 public:
  explicit RemoteScorer(std::string url, int timeout_seconds = 60)
      : url_(std::move(url)), timeout_seconds_(timeout_seconds) {}
  std::string describe() const override { return "remote:" + url_; }
  std::vector<double> score(std::span<const ProteinSequence> sequences) override;

 private:
  std::string url_;
  int timeout_seconds_;
};

std::shared_ptr<Scorer> isoelectric_point_scorer(metrics::PkaSet pka = {});
std::shared_ptr<Scorer> liability_count_scorer();

/// Objective configuration JSON. Either a bare array of objectives or an object
/// {"aggregation": "sts"|"nds", "tie_break": name, "objectives": [...]}. Each objective is
/// {"name", "direction", "weight", "scorer": {"kind": "remote", "url"} |
/// {"kind": "table", "file"} | {"kind": "builtin_pi"} | {"kind": "builtin_liability_count"}}.
/// The scorer may be omitted for "pseudo_perplexity". Relative table paths resolve
/// against `base_dir`.
ObjectiveSet parse_objective_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
ObjectiveSet load_objective_config(const std::filesystem::path& path);

}  // namespace pllbeam
