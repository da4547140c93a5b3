#include "preprod/provider.hpp"

#include <cstdlib>

#include "preprod/assets.hpp"
#include "preprod/error.hpp"

namespace preprod {

std::string TextProvider::complete(const ProviderRequest& request, const CancellationToken* cancel) {
    if (request.prompt.empty()) throw Error(Errc::PreconditionViolation, "empty prompt");
    throw_if_cancelled(cancel);
    return do_complete(request, cancel);
}

std::string ImageProvider::generate_image(const std::string& prompt, const std::vector<std::string>& references,
                                          const AssetStore& assets, const CancellationToken* cancel) {
    if (prompt.empty()) throw Error(Errc::PreconditionViolation, "empty image prompt");
    for (const auto& ref : references) {
        if (!assets.resolves(ref)) {
            throw Error(Errc::PreconditionViolation, "unresolvable reference image '" + ref + "'", {ref});
        }
    }
    throw_if_cancelled(cancel);
    return do_generate(prompt, references, assets, cancel);
}

Providers Providers::scripted(std::shared_ptr<ScriptedProvider> provider) {
    Providers p;
    p.text = provider;
    p.light = provider;
    p.image = provider;
    return p;
}

namespace {

std::string env(const char* name, const std::string& fallback = {}) {
    const char* v = std::getenv(name);
    return v != nullptr ? std::string(v) : fallback;
}

} // namespace

Providers Providers::from_environment() {
    const auto endpoint = env("PREPROD_TEXT_ENDPOINT");
    if (endpoint.empty()) throw Error(Errc::PreconditionViolation, "PREPROD_TEXT_ENDPOINT is not set");
    const auto key = env("PREPROD_TEXT_API_KEY");
    const auto model = env("PREPROD_TEXT_MODEL", "default");
    Providers p;
    p.text = std::make_shared<HttpTextProvider>(endpoint, key, model);
    p.light = std::make_shared<HttpTextProvider>(env("PREPROD_LIGHT_ENDPOINT", endpoint), key,
                                                 env("PREPROD_LIGHT_MODEL", model));
    const auto image_endpoint = env("PREPROD_IMAGE_ENDPOINT");
    if (!image_endpoint.empty()) {
        p.image = std::make_shared<HttpImageProvider>(image_endpoint, env("PREPROD_IMAGE_API_KEY", key));
    }
    if (env("PREPROD_JUDGE") == "1") p.judge = p.light;
    return p;
}

} // namespace preprod
