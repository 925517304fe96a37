#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pllbeam/alphabet.hpp"
#include "pllbeam/sequence.hpp"

namespace pllbeam {

/// Raw model logits for one position, aligned to kAlphabetCodes.
using LogitRow = std::array<double, kAlphabetSize>;

struct QueryRequest {
  ProteinSequence sequence;
  std::vector<Position> masked;  // positions replaced by the mask token
  std::vector<Position> report;  // rows to return, in this order
};

struct Ledger {
  std::uint64_t logical = 0;   // query calls made, one per forward pass requested
  std::uint64_t physical = 0;  // calls that reached the model (memo misses)
};

/// The black-box masked language model. Subclasses implement `compute`; the base class
/// validates requests, keeps the forward-pass ledger and an optional per-run memo.
/// Safe for concurrent use when `compute` is.
class MaskedLogitProvider {
 public:
  virtual ~MaskedLogitProvider() = default;
  MaskedLogitProvider() = default;
  MaskedLogitProvider(const MaskedLogitProvider&) = delete;
  MaskedLogitProvider& operator=(const MaskedLogitProvider&) = delete;

  virtual std::string name() const = 0;
  virtual std::string alphabet_order() const { return std::string(kAlphabetCodes); }
  /// Set when the provider only accepts one sequence length.
  virtual std::optional<std::size_t> fixed_length() const { return std::nullopt; }
  /// Upper bound on accepted length, if any.
  virtual std::optional<std::size_t> max_length() const { return fixed_length(); }

  /// One forward pass. Rows come back in the order of `report`. With an empty mask set
  /// this is the unmasked regime: every reported row saw its own residue.
  std::vector<LogitRow> query(const ProteinSequence& sequence, std::span<const Position> masked,
                              std::span<const Position> report);
  /// Reports exactly the masked positions.
  std::vector<LogitRow> query(const ProteinSequence& sequence, std::span<const Position> masked) {
    return query(sequence, masked, masked);
  }
  /// Several independent forward passes; counted as requests.size() in the ledger.
  std::vector<std::vector<LogitRow>> query_batch(std::span<const QueryRequest> requests);

  Ledger ledger() const;
  void reset_ledger();
  void set_memoize(bool enabled);

 protected:
  virtual std::vector<LogitRow> compute(const QueryRequest& request) = 0;
  virtual std::vector<std::vector<LogitRow>> compute_batch(std::span<const QueryRequest> requests);

 private:
  QueryRequest normalize(const ProteinSequence& sequence, std::span<const Position> masked,
                         std::span<const Position> report) const;
  static std::string memo_key(const QueryRequest& request);

  std::atomic<std::uint64_t> logical_{0};
  std::atomic<std::uint64_t> physical_{0};
  std::atomic<bool> memoize_{false};
  mutable std::mutex memo_mutex_;
  std::map<std::string, std::vector<LogitRow>> memo_;
};

/// Context-independent provider: the row at position i is table[i] whatever the sequence
/// or mask set.
class PssmProvider final : public MaskedLogitProvider {
 public:
  explicit PssmProvider(std::vector<LogitRow> table, std::string name = "pssm");

  static std::unique_ptr<PssmProvider> random(std::size_t length, std::uint64_t seed, double scale = 1.0);
  static std::unique_ptr<PssmProvider> load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::string name() const override { return name_; }
  std::optional<std::size_t> fixed_length() const override { return table_.size(); }
  const std::vector<LogitRow>& table() const noexcept { return table_; }

 protected:
  std::vector<LogitRow> compute(const QueryRequest& request) override;

 private:
  std::vector<LogitRow> table_;
  std::string name_;
};

/// Pairwise (Potts-style) provider with symmetric couplings:
///   logit(i, r) = h[i][r] + sum_{j != i, j unmasked} J[i][r][j][s_j]
/// plus `self_weight` on the row's own residue when i itself is unmasked, which models an
/// MLM peeking at the token it is asked to predict.
class CoupledProvider final : public MaskedLogitProvider {
 public:
  CoupledProvider(std::vector<LogitRow> fields, double self_weight = 0.0, std::string name = "coupled");

  static std::unique_ptr<CoupledProvider> random(std::size_t length, std::uint64_t seed, double field_scale = 1.0,
                                double coupling_scale = 0.5, double self_weight = 2.0);
  static std::unique_ptr<CoupledProvider> load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  /// Sets J[i][r][j][s] and its mirror J[j][s][i][r]. Requires i != j.
  void set_coupling(Position i, std::size_t r, Position j, std::size_t s, double value);
  double coupling(Position i, std::size_t r, Position j, std::size_t s) const {
    return couplings_[((i * kAlphabetSize + r) * length_ + j) * kAlphabetSize + s];
  }
  double field(Position i, std::size_t r) const { return fields_[i][r]; }
  double self_weight() const noexcept { return self_weight_; }
  std::size_t length() const noexcept { return length_; }

  std::string name() const override { return name_; }
  std::optional<std::size_t> fixed_length() const override { return length_; }

 protected:
  std::vector<LogitRow> compute(const QueryRequest& request) override;

 private:
  std::size_t length_;
  std::vector<LogitRow> fields_;
  std::vector<double> couplings_;
  double self_weight_;
  std::string name_;
};

/// Opens `pssm:FILE`, `coupled:FILE` or `remote:URL`.
std::unique_ptr<MaskedLogitProvider> open_provider(const std::string& spec);

}  // namespace pllbeam
