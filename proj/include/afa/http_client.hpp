// Shared JSON-over-HTTP POST with bounded exponential-backoff retries.
#pragma once

#include <string>

#include "afa/error.hpp"

namespace afa {

struct HttpRequestOptions {
  std::string url;                        // scheme://host[:port]/path
  std::string api_key_env = "AFA_API_KEY";
  int max_retries = 3;                    // retries after the first attempt
  int initial_delay_ms = 200;
  int max_delay_ms = 5000;
  int timeout_sec = 30;
};

// POSTs body as application/json with a bearer token read from api_key_env
// (header omitted when the variable is unset). Retries on connection errors
// and 5xx/429 with exponential backoff; the terminal error carries the total
// attempt count and is raised with failure_code.
std::string http_post_json(const HttpRequestOptions& options, const std::string& body,
                           ErrorCode failure_code);

}  // namespace afa
