#include "pllbeam/provider.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "pllbeam/error.hpp"
#include "pllbeam/io.hpp"
#include "pllbeam/remote.hpp"

namespace pllbeam {

using nlohmann::json;

namespace {

void check_rows(const std::vector<LogitRow>& rows, std::size_t expected, const std::string& who) {
  if (rows.size() != expected) {
    throw Error(ErrorCode::ProviderUnavailable,
                who + " returned " + std::to_string(rows.size()) + " rows, expected " +
                    std::to_string(expected));
  }
  for (const auto& row : rows) {
    for (double v : row) {
      if (!std::isfinite(v)) throw Error(ErrorCode::ProviderUnavailable, who + " returned a non-finite logit");
    }
  }
}

// Box-Muller on mt19937_64 so generated providers are identical across standard libraries.
class Gaussian {
 public:
  explicit Gaussian(std::uint64_t seed) : engine_(seed) {}
  double operator()() {
    const double u1 = (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

LogitRow row_from_json(const json& j) {
  if (!j.is_array() || j.size() != kAlphabetSize) {
    throw Error(ErrorCode::Parse, "logit row must have 20 entries");
  }
  LogitRow row{};
  for (std::size_t r = 0; r < kAlphabetSize; ++r) row[r] = j[r].get<double>();
  return row;
}

std::size_t residue_from_json(const json& j) {
  const auto s = j.get<std::string>();
  if (s.size() != 1 || !is_residue(s[0])) throw Error(ErrorCode::InvalidResidue, s);
  return index_of(s[0]);
}

}  // namespace

QueryRequest MaskedLogitProvider::normalize(const ProteinSequence& sequence,
                                            std::span<const Position> masked,
                                            std::span<const Position> report) const {
  if (const auto fixed = fixed_length(); fixed && *fixed != sequence.size()) {
    throw Error(ErrorCode::LengthMismatch, name() + " expects length " + std::to_string(*fixed) +
                                               ", got " + std::to_string(sequence.size()));
  }
  if (const auto cap = max_length(); cap && sequence.size() > *cap) {
    throw Error(ErrorCode::LengthMismatch, name() + " accepts at most " + std::to_string(*cap));
  }
  QueryRequest req{sequence, {masked.begin(), masked.end()}, {report.begin(), report.end()}};
  std::sort(req.masked.begin(), req.masked.end());
  req.masked.erase(std::unique(req.masked.begin(), req.masked.end()), req.masked.end());
  for (Position p : req.masked) {
    if (p >= sequence.size()) throw Error(ErrorCode::PositionOutOfRange, "masked position " + std::to_string(p));
  }
  for (Position p : req.report) {
    if (p >= sequence.size()) throw Error(ErrorCode::PositionOutOfRange, "report position " + std::to_string(p));
  }
  return req;
}

std::string MaskedLogitProvider::memo_key(const QueryRequest& request) {
  std::string key = request.sequence.str();
  key += '|';
  for (Position p : request.masked) key += std::to_string(p) + ',';
  key += '|';
  for (Position p : request.report) key += std::to_string(p) + ',';
  return key;
}

std::vector<LogitRow> MaskedLogitProvider::query(const ProteinSequence& sequence,
                                                 std::span<const Position> masked,
                                                 std::span<const Position> report) {
  QueryRequest req = normalize(sequence, masked, report);
  logical_.fetch_add(1, std::memory_order_relaxed);
  std::string key;
  if (memoize_.load()) {
    key = memo_key(req);
    std::lock_guard lock(memo_mutex_);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  }
  physical_.fetch_add(1, std::memory_order_relaxed);
  auto rows = compute(req);
  check_rows(rows, req.report.size(), name());
  if (!key.empty()) {
    std::lock_guard lock(memo_mutex_);
    memo_.emplace(std::move(key), rows);
  }
  return rows;
}

std::vector<std::vector<LogitRow>> MaskedLogitProvider::query_batch(std::span<const QueryRequest> requests) {
  std::vector<QueryRequest> normalized;
  normalized.reserve(requests.size());
  for (const auto& r : requests) normalized.push_back(normalize(r.sequence, r.masked, r.report));
  logical_.fetch_add(requests.size(), std::memory_order_relaxed);

  std::vector<std::vector<LogitRow>> out(normalized.size());
  std::vector<std::size_t> misses;
  std::vector<std::string> keys(normalized.size());
  const bool memo = memoize_.load();
  if (memo) {
    std::lock_guard lock(memo_mutex_);
    for (std::size_t i = 0; i < normalized.size(); ++i) {
      keys[i] = memo_key(normalized[i]);
      if (auto it = memo_.find(keys[i]); it != memo_.end()) {
        out[i] = it->second;
      } else {
        misses.push_back(i);
      }
    }
  } else {
    for (std::size_t i = 0; i < normalized.size(); ++i) misses.push_back(i);
  }
  if (misses.empty()) return out;

  // With the memo on, repeats inside the batch ride on the first occurrence.
  std::vector<std::size_t> unique;
  std::vector<std::size_t> source(normalized.size());
  std::map<std::string, std::size_t> first;
  for (std::size_t i : misses) {
    if (memo) {
      auto [it, fresh] = first.emplace(keys[i], unique.size());
      source[i] = it->second;
      if (!fresh) continue;
    } else {
      source[i] = unique.size();
    }
    unique.push_back(i);
  }

  std::vector<QueryRequest> pending;
  pending.reserve(unique.size());
  for (std::size_t i : unique) pending.push_back(normalized[i]);
  physical_.fetch_add(pending.size(), std::memory_order_relaxed);
  auto computed = compute_batch(pending);
  if (computed.size() != pending.size()) {
    throw Error(ErrorCode::ProviderUnavailable, name() + " returned a short batch");
  }
  for (std::size_t m = 0; m < pending.size(); ++m) check_rows(computed[m], pending[m].report.size(), name());
  for (std::size_t i : misses) out[i] = computed[source[i]];
  if (memo) {
    std::lock_guard lock(memo_mutex_);
    for (std::size_t m = 0; m < unique.size(); ++m) memo_.emplace(keys[unique[m]], computed[m]);
  }
  return out;
}

std::vector<std::vector<LogitRow>> MaskedLogitProvider::compute_batch(std::span<const QueryRequest> requests) {
  std::vector<std::vector<LogitRow>> out;
  out.reserve(requests.size());
  for (const auto& r : requests) out.push_back(compute(r));
  return out;
}

Ledger MaskedLogitProvider::ledger() const { return {logical_.load(), physical_.load()}; }

void MaskedLogitProvider::reset_ledger() {
  logical_ = 0;
  physical_ = 0;
}

void MaskedLogitProvider::set_memoize(bool enabled) {
  memoize_ = enabled;
  if (!enabled) {
    std::lock_guard lock(memo_mutex_);
    memo_.clear();
  }
}

// ---------------------------------------------------------------------------

PssmProvider::PssmProvider(std::vector<LogitRow> table, std::string name)
    : table_(std::move(table)), name_(std::move(name)) {
  if (table_.empty()) throw Error(ErrorCode::InvalidArgument, "PSSM table is empty");
  for (const auto& row : table_) {
    for (double v : row) {
      if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "PSSM table holds a non-finite value");
    }
  }
}

std::unique_ptr<PssmProvider> PssmProvider::random(std::size_t length, std::uint64_t seed, double scale) {
  Gaussian gauss(seed);
  std::vector<LogitRow> table(length);
  for (auto& row : table) {
    for (double& v : row) v = scale * gauss();
  }
  return std::make_unique<PssmProvider>(std::move(table), "pssm-random-" + std::to_string(seed));
}

std::unique_ptr<PssmProvider> PssmProvider::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<LogitRow> table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    LogitRow row{};
    for (std::size_t r = 0; r < kAlphabetSize; ++r) {
      std::string cell;
      if (!(ss >> cell)) {
        throw Error(ErrorCode::Parse, path.string() + ":" + std::to_string(line_no) + ": expected 20 values");
      }
      row[r] = io::parse_double(cell);
    }
    table.push_back(row);
  }
  return std::make_unique<PssmProvider>(std::move(table), "pssm:" + path.filename().string());
}

void PssmProvider::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "# pllbeam PSSM logits, one row per position, columns " << kAlphabetCodes << '\n';
  for (const auto& row : table_) {
    for (std::size_t r = 0; r < kAlphabetSize; ++r) out << (r ? "\t" : "") << io::format_double(row[r]);
    out << '\n';
  }
}

std::vector<LogitRow> PssmProvider::compute(const QueryRequest& request) {
  std::vector<LogitRow> rows;
  rows.reserve(request.report.size());
  for (Position p : request.report) rows.push_back(table_[p]);
  return rows;
}

// ---------------------------------------------------------------------------

CoupledProvider::CoupledProvider(std::vector<LogitRow> fields, double self_weight, std::string name)
    : length_(fields.size()),
      fields_(std::move(fields)),
      couplings_(length_ * kAlphabetSize * length_ * kAlphabetSize, 0.0),
      self_weight_(self_weight),
      name_(std::move(name)) {
  if (length_ == 0) throw Error(ErrorCode::InvalidArgument, "coupled provider needs at least one position");
}

void CoupledProvider::set_coupling(Position i, std::size_t r, Position j, std::size_t s, double value) {
  if (i == j) throw Error(ErrorCode::InvalidArgument, "self-coupling is not allowed");
  if (i >= length_ || j >= length_) throw Error(ErrorCode::PositionOutOfRange, "coupling position");
  if (r >= kAlphabetSize || s >= kAlphabetSize) throw Error(ErrorCode::InvalidResidue, "coupling residue");
  couplings_[((i * kAlphabetSize + r) * length_ + j) * kAlphabetSize + s] = value;
  couplings_[((j * kAlphabetSize + s) * length_ + i) * kAlphabetSize + r] = value;
}

std::unique_ptr<CoupledProvider> CoupledProvider::random(std::size_t length, std::uint64_t seed, double field_scale,
                                        double coupling_scale, double self_weight) {
  Gaussian gauss(seed);
  std::vector<LogitRow> fields(length);
  for (auto& row : fields) {
    for (double& v : row) v = field_scale * gauss();
  }
  auto provider =
      std::make_unique<CoupledProvider>(std::move(fields), self_weight, "coupled-random-" + std::to_string(seed));
  for (Position i = 0; i < length; ++i) {
    for (Position j = i + 1; j < length; ++j) {
      for (std::size_t r = 0; r < kAlphabetSize; ++r) {
        for (std::size_t s = 0; s < kAlphabetSize; ++s) {
          provider->set_coupling(i, r, j, s, coupling_scale * gauss());
        }
      }
    }
  }
  return provider;
}

std::unique_ptr<CoupledProvider> CoupledProvider::load(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(io::read_text_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
  }
  try {
    std::vector<LogitRow> fields;
    for (const auto& row : doc.at("fields")) fields.push_back(row_from_json(row));
    auto provider = std::make_unique<CoupledProvider>(
        std::move(fields), doc.value("self_weight", 0.0),
        doc.value("name", "coupled:" + path.filename().string()));
    for (const auto& c : doc.at("couplings")) {
      if (!c.is_array() || c.size() != 5) throw Error(ErrorCode::Parse, "coupling entries are [i, r, j, s, value]");
      const auto i = c[0].get<std::size_t>();
      const auto j = c[2].get<std::size_t>();
      if (i == 0 || j == 0) throw Error(ErrorCode::Parse, "coupling positions are 1-based");
      provider->set_coupling(i - 1, residue_from_json(c[1]), j - 1, residue_from_json(c[3]), c[4].get<double>());
    }
    return provider;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
  }
}

void CoupledProvider::save(const std::filesystem::path& path) const {
  json doc;
  doc["format_version"] = 1;
  doc["name"] = name_;
  doc["alphabet"] = std::string(kAlphabetCodes);
  doc["self_weight"] = self_weight_;
  doc["fields"] = json::array();
  for (const auto& row : fields_) doc["fields"].push_back(row);
  doc["couplings"] = json::array();
  for (Position i = 0; i < length_; ++i) {
    for (Position j = i + 1; j < length_; ++j) {
      for (std::size_t r = 0; r < kAlphabetSize; ++r) {
        for (std::size_t s = 0; s < kAlphabetSize; ++s) {
          const double v = coupling(i, r, j, s);
          if (v != 0.0) {
            doc["couplings"].push_back({i + 1, std::string(1, residue_code(r)), j + 1,
                                        std::string(1, residue_code(s)), v});
          }
        }
      }
    }
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << doc.dump() << '\n';
}

std::vector<LogitRow> CoupledProvider::compute(const QueryRequest& request) {
  std::vector<char> is_masked(length_, 0);
  for (Position p : request.masked) is_masked[p] = 1;
  std::vector<LogitRow> rows;
  rows.reserve(request.report.size());
  for (Position i : request.report) {
    LogitRow row = fields_[i];
    for (Position j = 0; j < length_; ++j) {
      if (j == i || is_masked[j]) continue;
      const std::size_t s = request.sequence.index_at(j);
      for (std::size_t r = 0; r < kAlphabetSize; ++r) row[r] += coupling(i, r, j, s);
    }
    if (!is_masked[i]) row[request.sequence.index_at(i)] += self_weight_;
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------

std::unique_ptr<MaskedLogitProvider> open_provider(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "provider spec must be pssm:FILE, coupled:FILE or remote:URL");
  }
  const std::string kind = spec.substr(0, colon);
  const std::string arg = spec.substr(colon + 1);
  if (kind == "pssm") return PssmProvider::load(arg);
  if (kind == "coupled") return CoupledProvider::load(arg);
  if (kind == "remote") return std::make_unique<RemoteProvider>(RemoteConfig{arg});
  throw Error(ErrorCode::InvalidArgument, "unknown provider kind '" + kind + "'");
}

}  // namespace pllbeam
