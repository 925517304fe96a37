// In-process HTTP server on an ephemeral loopback port, stopped on destruction.
#pragma once

#include <httplib.h>

#include <string>
#include <thread>

namespace loopback {

class Server {
 public:
  Server() = default;
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;
  ~Server() { stop(); }

  httplib::Server& http() { return server_; }

  /// Binds, starts serving and returns the base URL.
  std::string start() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return url();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace loopback
