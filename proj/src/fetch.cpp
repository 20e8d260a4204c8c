#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "cgback/fetch.hpp"

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>

#include <httplib.h>

namespace cgback {

namespace {

constexpr const char* kDefaultBaseUrl = "https://deposition.proteinensemble.org/api/v1/entries";

// Downloads to one destination at a time.
std::mutex g_write_mutex;

HttpResponse default_transport(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw HttpError("fetch: URL has no scheme: " + url, 0);
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    client.set_follow_location(true);
    client.set_connection_timeout(30);
    client.set_read_timeout(120);
    httplib::Result res = client.Get(path);
    if (!res)
        throw HttpError("fetch: request to " + url + " failed: " + httplib::to_string(res.error()),
                        0);
    return {res->status, res->body};
}

} // namespace

FetchClient::FetchClient() {
    const char* env = std::getenv(kFetchBaseUrlEnv);
    base_url_ = env != nullptr && *env != '\0' ? env : kDefaultBaseUrl;
    transport_ = default_transport;
}

FetchClient::FetchClient(std::string base_url, HttpTransport transport)
    : base_url_(std::move(base_url)), transport_(std::move(transport)) {
    if (!transport_)
        transport_ = default_transport;
}

bool FetchClient::valid_entry_id(const std::string& id) {
    if (id.empty() || id.size() > 64)
        return false;
    for (char c : id)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_')
            return false;
    return true;
}

std::string FetchClient::fetch_entry(const std::string& entry_id,
                                     const std::string& dest_dir) const {
    if (!valid_entry_id(entry_id))
        throw DataError("fetch: malformed entry id '" + entry_id + "'");

    namespace fs = std::filesystem;
    const fs::path dir(dest_dir);
    const fs::path target = dir / (entry_id + ".pdb");

    std::lock_guard<std::mutex> lock(g_write_mutex);
    std::error_code ec;
    if (fs::exists(target, ec) && fs::file_size(target, ec) > 0)
        return target.string(); // complete earlier download

    const std::string url = base_url_ + "/" + entry_id + ".pdb";
    const HttpResponse res = transport_(url);
    if (res.status == 404)
        throw NotFoundError("fetch: entry '" + entry_id + "' not found at " + url);
    if (res.status != 200)
        throw HttpError("fetch: " + url + " returned status " + std::to_string(res.status),
                        res.status);

    fs::create_directories(dir, ec);
    const fs::path tmp = dir / (entry_id + ".pdb.part");
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out)
            throw DataError("fetch: cannot write '" + tmp.string() + "'");
        out.write(res.body.data(), static_cast<std::streamsize>(res.body.size()));
        if (!out)
            throw DataError("fetch: failed writing '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
    return target.string();
}

} // namespace cgback
