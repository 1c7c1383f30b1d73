#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "agrotelem/platform_http.hpp"

namespace testutil {

// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("agrotelem-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// In-process platform client that can be switched off (transport failure).
class SwitchableClient : public agrotelem::PlatformClient {
 public:
  explicit SwitchableClient(agrotelem::PlatformService& svc) : inner_(svc) {}

  agrotelem::HttpResult post(const std::string& path, const std::string& body) override {
    ++posts;
    if (!up) return {0, "connection refused"};
    return inner_.post(path, body);
  }
  agrotelem::HttpResult get(const std::string& path) override {
    if (!up) return {0, "connection refused"};
    return inner_.get(path);
  }

  std::atomic<bool> up{true};
  std::atomic<int> posts{0};

 private:
  agrotelem::InProcessClient inner_;
};

}  // namespace testutil
