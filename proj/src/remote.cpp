#include "pllbeam/remote.hpp"

#include <httplib.h>
#include <json.hpp>

#include "pllbeam/error.hpp"
#include "pllbeam/wire.hpp"

namespace pllbeam {

using nlohmann::json;

class RemoteProvider::Lease {
 public:
  explicit Lease(RemoteProvider& owner) : owner_(owner) {
    std::unique_lock lock(owner_.pool_mutex_);
    owner_.pool_cv_.wait(lock, [&] {
      return !owner_.idle_.empty() || owner_.created_ < owner_.config_.pool_size;
    });
    if (!owner_.idle_.empty()) {
      client_ = std::move(owner_.idle_.back());
      owner_.idle_.pop_back();
    } else {
      ++owner_.created_;
      lock.unlock();
      client_ = owner_.make_client();
    }
  }
  ~Lease() {
    {
      std::lock_guard lock(owner_.pool_mutex_);
      owner_.idle_.push_back(std::move(client_));
    }
    owner_.pool_cv_.notify_one();
  }
  Lease(const Lease&) = delete;
  Lease& operator=(const Lease&) = delete;

  httplib::Client& client() { return *client_; }

 private:
  RemoteProvider& owner_;
  std::unique_ptr<httplib::Client> client_;
};

RemoteProvider::RemoteProvider(RemoteConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) throw Error(ErrorCode::InvalidArgument, "remote provider needs an endpoint URL");
  if (config_.max_batch == 0) config_.max_batch = 1;
  if (config_.pool_size == 0) config_.pool_size = 1;

  httplib::Result res;
  {
    Lease lease(*this);
    res = lease.client().Get("/info");
  }
  if (!res) {
    throw Error(ErrorCode::ProviderUnavailable,
                config_.endpoint + "/info: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::ProviderUnavailable, config_.endpoint + "/info: HTTP " + std::to_string(res->status));
  }
  info_json_ = res->body;
  try {
    const json info = json::parse(res->body);
    name_ = "remote:" + info.at("name").get<std::string>();
    alphabet_ = info.at("alphabet").get<std::string>();
    if (info.contains("max_length") && !info["max_length"].is_null()) {
      max_length_ = info["max_length"].get<std::size_t>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProviderUnavailable, std::string("malformed /info: ") + e.what());
  }
  if (alphabet_ != kAlphabetCodes) {
    throw Error(ErrorCode::AlphabetMismatch, "server alphabet '" + alphabet_ + "' differs from " +
                                                 std::string(kAlphabetCodes));
  }
}

RemoteProvider::~RemoteProvider() = default;

std::unique_ptr<httplib::Client> RemoteProvider::make_client() const {
  auto client = std::make_unique<httplib::Client>(config_.endpoint);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client->set_connection_timeout(secs.count(), usecs.count());
  client->set_read_timeout(secs.count(), usecs.count());
  client->set_write_timeout(secs.count(), usecs.count());
  client->set_keep_alive(true);
  return client;
}

std::string RemoteProvider::post(const std::string& path, const std::string& body) {
  httplib::Result res;
  {
    Lease lease(*this);
    res = lease.client().Post(path, body, "application/json");
  }
  if (!res) throw Error(ErrorCode::ProviderUnavailable, config_.endpoint + path + ": " + httplib::to_string(res.error()));
  if (res->status == 200) return res->body;
  std::string message = "HTTP " + std::to_string(res->status);
  try {
    message += ": " + json::parse(res->body).at("error").get<std::string>();
  } catch (const json::exception&) {
  }
  if (res->status == 422) throw Error(ErrorCode::LengthMismatch, message);
  if (res->status == 400) throw Error(ErrorCode::InvalidArgument, message);
  throw Error(ErrorCode::ProviderUnavailable, message);
}

std::vector<LogitRow> RemoteProvider::compute(const QueryRequest& request) {
  return wire::decode_logits(post("/logits", wire::encode_request(request)));
}

std::vector<std::vector<LogitRow>> RemoteProvider::compute_batch(std::span<const QueryRequest> requests) {
  std::vector<std::vector<LogitRow>> out;
  out.reserve(requests.size());
  for (std::size_t start = 0; start < requests.size(); start += config_.max_batch) {
    const auto chunk = requests.subspan(start, std::min(config_.max_batch, requests.size() - start));
    auto rows = wire::decode_batch(post("/logits_batch", wire::encode_batch(chunk)));
    if (rows.size() != chunk.size()) throw Error(ErrorCode::ProviderUnavailable, "batch response size mismatch");
    for (auto& r : rows) out.push_back(std::move(r));
  }
  return out;
}

}  // namespace pllbeam
