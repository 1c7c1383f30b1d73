#include "agrotelem/platform_http.hpp"

#include <map>
#include <stdexcept>

#include "httplib.h"
#include "text_util.hpp"

namespace agrotelem {

namespace {

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string percent_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size() && hex_digit(s[i + 1]) >= 0 && hex_digit(s[i + 2]) >= 0) {
      out += static_cast<char>(hex_digit(s[i + 1]) * 16 + hex_digit(s[i + 2]));
      i += 2;
    } else if (s[i] == '+') {
      out += ' ';
    } else {
      out += s[i];
    }
  }
  return out;
}

void split_target(const std::string& target, std::string& path,
                  std::map<std::string, std::string>& params) {
  const auto q = target.find('?');
  path = target.substr(0, q);
  if (q == std::string::npos) return;
  for (auto kv : detail::split(std::string_view(target).substr(q + 1), '&')) {
    if (kv.empty()) continue;
    const auto eq = kv.find('=');
    if (eq == std::string_view::npos) {
      params[percent_decode(kv)] = "";
    } else {
      params[percent_decode(kv.substr(0, eq))] = percent_decode(kv.substr(eq + 1));
    }
  }
}

}  // namespace

HttpResult PlatformClient::post_outage(std::int64_t until_ms) {
  return post("/admin/outage", "{\"until_ms\":" + std::to_string(until_ms) + "}");
}

HttpResult InProcessClient::post(const std::string& path, const std::string& json_body) {
  auto r = service_.handle("POST", path, {}, json_body);
  return {r.status, std::move(r.body)};
}

HttpResult InProcessClient::get(const std::string& path_and_query) {
  std::string path;
  std::map<std::string, std::string> params;
  split_target(path_and_query, path, params);
  auto r = service_.handle("GET", path, params, "");
  return {r.status, std::move(r.body)};
}

struct HttpPlatformClient::Impl {
  explicit Impl(const std::string& url) : client(url) {
    client.set_connection_timeout(2, 0);
    client.set_read_timeout(5, 0);
  }
  httplib::Client client;
};

HttpPlatformClient::HttpPlatformClient(const std::string& base_url)
    : impl_(std::make_unique<Impl>(base_url)) {
  if (!impl_->client.is_valid()) throw std::invalid_argument("invalid platform URL: " + base_url);
}

HttpPlatformClient::~HttpPlatformClient() = default;

HttpResult HttpPlatformClient::post(const std::string& path, const std::string& json_body) {
  auto res = impl_->client.Post(path, json_body, "application/json");
  if (!res) return {0, httplib::to_string(res.error())};
  return {res->status, res->body};
}

HttpResult HttpPlatformClient::get(const std::string& path_and_query) {
  auto res = impl_->client.Get(path_and_query);
  if (!res) return {0, httplib::to_string(res.error())};
  return {res->status, res->body};
}

struct PlatformServer::Impl {
  explicit Impl(PlatformService& s) : service(s) {
    auto forward = [this](const httplib::Request& req, httplib::Response& res) {
      std::map<std::string, std::string> params;
      for (const auto& [k, v] : req.params) params[k] = v;
      auto r = service.handle(req.method, req.path, params, req.body);
      res.status = r.status;
      res.set_content(r.body, r.content_type);
    };
    server.Get(".*", forward);
    server.Post(".*", forward);
  }
  PlatformService& service;
  httplib::Server server;
};

PlatformServer::PlatformServer(PlatformService& service)
    : impl_(std::make_unique<Impl>(service)) {}

PlatformServer::~PlatformServer() { stop(); }

int PlatformServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool PlatformServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void PlatformServer::stop() {
  if (impl_) impl_->server.stop();
}

bool PlatformServer::running() const { return impl_->server.is_running(); }

}  // namespace agrotelem
