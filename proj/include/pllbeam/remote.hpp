#pragma once

#include <chrono>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "pllbeam/provider.hpp"

namespace httplib {
class Client;
}

namespace pllbeam {

struct RemoteConfig {
  std::string endpoint;  // e.g. http://127.0.0.1:8080
  std::chrono::milliseconds timeout{30000};
  std::size_t max_batch = 64;
  std::size_t pool_size = 4;
};

/// Client for the HTTP/JSON wire protocol:
///   GET  /info          -> {"name", "alphabet", "max_length"}
///   POST /logits        {"sequence", "masked_positions", "positions"?} -> {"logits": [[20]...]}
///   POST /logits_batch  {"requests": [...]} -> {"responses": [...]}
/// `positions` lists the rows to report; when absent the masked positions are reported,
/// or every position when the mask set is empty.
class RemoteProvider final : public MaskedLogitProvider {
 public:
  /// Performs the /info handshake. Throws ProviderUnavailable or AlphabetMismatch.
  explicit RemoteProvider(RemoteConfig config);
  ~RemoteProvider() override;

  std::string name() const override { return name_; }
  std::string alphabet_order() const override { return alphabet_; }
  std::optional<std::size_t> max_length() const override { return max_length_; }
  /// The raw /info response, echoed into run manifests.
  const std::string& info_json() const noexcept { return info_json_; }

 protected:
  std::vector<LogitRow> compute(const QueryRequest& request) override;
  std::vector<std::vector<LogitRow>> compute_batch(std::span<const QueryRequest> requests) override;

 private:
  class Lease;
  std::unique_ptr<httplib::Client> make_client() const;
  std::string post(const std::string& path, const std::string& body);

  RemoteConfig config_;
  std::string name_;
  std::string alphabet_;
  std::optional<std::size_t> max_length_;
  std::string info_json_;

  std::mutex pool_mutex_;
  std::condition_variable pool_cv_;
  std::vector<std::unique_ptr<httplib::Client>> idle_;
  std::size_t created_ = 0;
};

}  // namespace pllbeam
