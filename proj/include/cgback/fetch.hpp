#pragma once

#include <functional>
#include <string>

#include "cgback/errors.hpp"

namespace cgback {

struct HttpResponse {
    int status = 0;
    std::string body;
};

// Performs one GET; throws HttpError when the request cannot be made.
using HttpTransport = std::function<HttpResponse(const std::string& url)>;

// Environment variable overriding the default base URL.
constexpr const char* kFetchBaseUrlEnv = "CGBACK_FETCH_BASE_URL";

// Downloads ensemble entries as <base_url>/<entry_id>.pdb. Files are
// written atomically (temp + rename), so an existing non-empty file is a
// complete earlier download and short-circuits without a request.
class FetchClient {
  public:
    // Base URL from the environment override or the built-in default;
    // HTTPS transport.
    FetchClient();
    explicit FetchClient(std::string base_url, HttpTransport transport = {});

    // Returns the local path of the entry file under dest_dir.
    std::string fetch_entry(const std::string& entry_id, const std::string& dest_dir) const;

    const std::string& base_url() const { return base_url_; }

    static bool valid_entry_id(const std::string& id);

  private:
    std::string base_url_;
    HttpTransport transport_;
};

} // namespace cgback
