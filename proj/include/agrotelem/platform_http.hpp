#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "agrotelem/platform_service.hpp"

namespace agrotelem {

struct HttpResult {
  int status = 0;  // 0: transport failure (connection refused, timeout)
  std::string body;
};

// What the gateway needs from the platform.
class PlatformClient {
 public:
  virtual ~PlatformClient() = default;
  virtual HttpResult post(const std::string& path, const std::string& json_body) = 0;
  virtual HttpResult get(const std::string& path_and_query) = 0;

  HttpResult post_ingest(const std::string& json_body) { return post("/api/v1/ingest", json_body); }
  HttpResult post_outage(std::int64_t until_ms);
};

// Calls the service router directly: same JSON bodies and status codes, no sockets.
class InProcessClient final : public PlatformClient {
 public:
  explicit InProcessClient(PlatformService& service) : service_(service) {}
  HttpResult post(const std::string& path, const std::string& json_body) override;
  HttpResult get(const std::string& path_and_query) override;

 private:
  PlatformService& service_;
};

// `base_url` like "http://127.0.0.1:8080".
class HttpPlatformClient final : public PlatformClient {
 public:
  explicit HttpPlatformClient(const std::string& base_url);
  ~HttpPlatformClient() override;
  HttpResult post(const std::string& path, const std::string& json_body) override;
  HttpResult get(const std::string& path_and_query) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Serves a PlatformService over HTTP/1.1.
class PlatformServer {
 public:
  explicit PlatformServer(PlatformService& service);
  ~PlatformServer();

  // Binds; port 0 picks a free port. Returns the bound port or -1.
  int bind(const std::string& host, int port);
  // Blocks until stop() is called from another thread or a signal handler.
  bool listen_after_bind();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace agrotelem
