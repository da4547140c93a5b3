#include <string>
#include <vector>

#include <httplib.h>
#include <openssl/evp.h>

#include "preprod/assets.hpp"
#include "preprod/error.hpp"
#include "preprod/provider.hpp"

namespace preprod {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) return {url, ""};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::string base64_encode(std::string_view bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(bytes.data()),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::string base64_decode(std::string_view text) {
    std::string out(3 * text.size() / 4 + 3, '\0');
    const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0) throw Error(Errc::ProviderFailure, "image payload is not base64", {"malformed-response"});
    std::size_t len = static_cast<std::size_t>(n);
    // EVP_DecodeBlock counts padding bytes as output.
    if (text.ends_with("==")) len -= 2;
    else if (text.ends_with("=")) len -= 1;
    out.resize(len);
    return out;
}

httplib::Result post_json(const std::string& url, const std::string& api_key, const json& body) {
    const auto [origin, path] = split_url(url);
    httplib::Client client(origin);
    client.set_connection_timeout(10);
    client.set_read_timeout(120);
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
    return client.Post(path.empty() ? "/" : path, headers, body.dump(), "application/json");
}

[[noreturn]] void transport_failure(const httplib::Result& res) {
    if (!res) {
        const auto err = res.error();
        const std::string reason = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read
                                       ? "timeout"
                                       : "transport";
        throw Error(Errc::ProviderFailure, "provider unreachable: " + httplib::to_string(err), {reason});
    }
    const std::string reason = res->status == 400 || res->status == 403 ? "refusal" : "transport";
    throw Error(Errc::ProviderFailure, "provider returned HTTP " + std::to_string(res->status), {reason});
}

} // namespace

HttpTextProvider::HttpTextProvider(std::string endpoint, std::string api_key, std::string model)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), model_(std::move(model)) {}

std::string HttpTextProvider::do_complete(const ProviderRequest& request, const CancellationToken* cancel) {
    json body{{"model", model_},
              {"messages", json::array({{{"role", "system"}, {"content", request.prompt}}})},
              {"temperature", request.params.temperature},
              {"max_tokens", request.params.max_length}};
    auto res = post_json(endpoint_ + "/v1/chat/completions", api_key_, body);
    throw_if_cancelled(cancel);
    if (!res || res->status != 200) transport_failure(res);
    try {
        const auto reply = json::parse(res->body);
        const auto& choice = reply.at("choices").at(0);
        if (choice.value("finish_reason", std::string{}) == "content_filter") {
            throw Error(Errc::ProviderFailure, "completion refused", {"refusal"});
        }
        return choice.at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw Error(Errc::ProviderFailure, std::string("unexpected completion payload: ") + e.what(),
                    {"malformed-response"});
    }
}

HttpImageProvider::HttpImageProvider(std::string endpoint, std::string api_key)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)) {}

std::string HttpImageProvider::do_generate(const std::string& prompt, const std::vector<std::string>& references,
                                           const AssetStore& assets, const CancellationToken* cancel) {
    json refs = json::array();
    for (const auto& ref : references) refs.push_back(base64_encode(assets.read(ref)));
    auto res = post_json(endpoint_, api_key_, json{{"prompt", prompt}, {"reference_images", refs}});
    throw_if_cancelled(cancel);
    if (!res || res->status != 200) transport_failure(res);
    std::string bytes;
    try {
        bytes = base64_decode(json::parse(res->body).at("image_base64").get<std::string>());
    } catch (const json::exception& e) {
        throw Error(Errc::ProviderFailure, std::string("unexpected image payload: ") + e.what(),
                    {"malformed-response"});
    }
    const auto digest = sha256_hex(bytes);
    return assets.write("img-" + digest.substr(0, 16) + ".png", bytes);
}

} // namespace preprod
