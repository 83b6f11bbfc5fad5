#include "afa/http_client.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include "httplib.h"

namespace afa {

namespace {

struct ParsedUrl {
  std::string base;  // scheme://host[:port]
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    raise(ErrorCode::InvalidArgument, "url missing scheme: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

bool retryable_status(int status) {
  return status == 429 || (status >= 500 && status < 600);
}

}  // namespace

std::string http_post_json(const HttpRequestOptions& options, const std::string& body,
                           ErrorCode failure_code) {
  const ParsedUrl url = parse_url(options.url);
  httplib::Client client(url.base);
  client.set_connection_timeout(options.timeout_sec, 0);
  client.set_read_timeout(options.timeout_sec, 0);

  httplib::Headers headers;
  if (!options.api_key_env.empty()) {
    if (const char* key = std::getenv(options.api_key_env.c_str());
        key && *key != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  const int total_attempts = options.max_retries + 1;
  int delay_ms = options.initial_delay_ms;
  std::string last_error;
  for (int attempt = 1; attempt <= total_attempts; ++attempt) {
    auto result = client.Post(url.path, headers, body, "application/json");
    if (result && result->status >= 200 && result->status < 300) {
      return result->body;
    }
    if (result) {
      last_error = "http status " + std::to_string(result->status);
      if (!retryable_status(result->status)) {
        raise(failure_code, last_error + " from " + options.url +
                                " (attempt " + std::to_string(attempt) + "/" +
                                std::to_string(total_attempts) + ")");
      }
    } else {
      last_error = "transport error (" + httplib::to_string(result.error()) + ")";
    }
    if (attempt < total_attempts) {
      std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
      delay_ms = std::min(delay_ms * 2, options.max_delay_ms);
    }
  }
  raise(failure_code, last_error + " from " + options.url + " after " +
                          std::to_string(total_attempts) + " attempts");
}

}  // namespace afa
