#pragma once

// Text completion and image generation behind one interface, with a
// deterministic rule-table implementation used by tests and scenarios.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "preprod/cancellation.hpp"
#include "preprod/domain.hpp"

namespace preprod {

class AssetStore;

struct GenerationParams {
    double temperature = 0.7;
    int max_length = 2048;
    /// Only meaningful to the scripted provider.
    std::uint64_t seed = 0;
};

struct ProviderRequest {
    AgentRole role = AgentRole::Core;
    Stage stage = Stage::Planning;
    /// nullopt for requests that are not tool executions.
    std::optional<ArtifactKind> task_kind;
    /// "tool", "chat", "direct-chat", "intent", "judge", "summarize", "expand".
    std::string purpose = "tool";
    std::string instruction;
    std::string prompt;
    std::vector<std::string> reference_images;
    GenerationParams params;
};

class TextProvider {
public:
    virtual ~TextProvider() = default;

    /// Throws precondition-violation for an empty prompt without contacting
    /// the backend; provider-failure (details[0] = reason) on backend faults.
    std::string complete(const ProviderRequest& request, const CancellationToken* cancel = nullptr);

protected:
    virtual std::string do_complete(const ProviderRequest& request, const CancellationToken* cancel) = 0;
};

class ImageProvider {
public:
    virtual ~ImageProvider() = default;

    /// Stores the generated image in `assets` and returns its reference.
    /// References must resolve in `assets`; checked before any backend call.
    std::string generate_image(const std::string& prompt, const std::vector<std::string>& references,
                               const AssetStore& assets, const CancellationToken* cancel = nullptr);

protected:
    virtual std::string do_generate(const std::string& prompt, const std::vector<std::string>& references,
                                    const AssetStore& assets, const CancellationToken* cancel) = 0;
};

// --- scripted -------------------------------------------------------------

struct ScriptedFault {
    /// "provider-failure" raises a provider error with `reason`; "exception"
    /// raises an unhandled std::runtime_error.
    std::string type = "provider-failure";
    std::string reason = "scripted";

    bool operator==(const ScriptedFault&) const = default;
};

struct ScriptedRule {
    std::optional<AgentRole> role;
    /// A kind name, "direct-chat" for requests without a kind, or unset for any.
    std::optional<std::string> task_kind;
    std::optional<std::string> purpose;
    std::optional<std::string> instruction_contains;
    std::string output;
    std::optional<ScriptedFault> fault;
    /// Number of times the rule may fire; unset means unlimited.
    std::optional<int> times;
    int delay_ms = 0;

    bool operator==(const ScriptedRule&) const = default;
};

/// Ordered rules; the first matching rule with uses left answers.
struct ScriptedProgram {
    std::vector<ScriptedRule> rules;

    static ScriptedProgram load(const std::filesystem::path& path);
    bool operator==(const ScriptedProgram&) const = default;
};

void to_json(json& j, const ScriptedRule& r);
void from_json(const json& j, ScriptedRule& r);
void to_json(json& j, const ScriptedProgram& p);
void from_json(const json& j, ScriptedProgram& p);

struct ScriptedCall {
    int rule_index = -1;
    AgentRole role = AgentRole::Core;
    std::string task_kind;
    std::string purpose;
};

/// Canonical byte string hashed into scripted placeholder images:
/// "prompt:<prompt>\n" followed by "ref:<ref>\n" per reference, in order.
std::string image_hash_input(const std::string& prompt, const std::vector<std::string>& references);

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);

/// Placeholder image: 8x8 binary PPM whose pixel bytes repeat the SHA-256
/// digest of image_hash_input(); stored as "img-<first 16 hex>.ppm".
std::string placeholder_image(const std::string& prompt, const std::vector<std::string>& references);

/// Extracts the hex digest embedded in a placeholder image's pixels.
std::optional<std::string> placeholder_digest(std::string_view ppm_bytes);

class ScriptedProvider final : public TextProvider, public ImageProvider {
public:
    explicit ScriptedProvider(ScriptedProgram program);

    /// Uses left per rule index.
    std::vector<int> consumed() const;
    std::vector<ScriptedCall> trace() const;
    void reset();

protected:
    std::string do_complete(const ProviderRequest& request, const CancellationToken* cancel) override;
    std::string do_generate(const std::string& prompt, const std::vector<std::string>& references,
                            const AssetStore& assets, const CancellationToken* cancel) override;

private:
    const ScriptedRule* claim(AgentRole role, const std::optional<ArtifactKind>& kind,
                              const std::string& purpose, const std::string& instruction);

    ScriptedProgram program_;
    mutable std::mutex mutex_;
    std::vector<int> consumed_;
    std::vector<ScriptedCall> trace_;
};

// --- live ------------------------------------------------------------------

/// OpenAI-compatible chat-completions endpoint.
class HttpTextProvider final : public TextProvider {
public:
    HttpTextProvider(std::string endpoint, std::string api_key, std::string model);

protected:
    std::string do_complete(const ProviderRequest& request, const CancellationToken* cancel) override;

private:
    std::string endpoint_;
    std::string api_key_;
    std::string model_;
};

/// POSTs {"prompt", "reference_images": [base64...]} to the endpoint and
/// expects {"image_base64": "..."} back.
class HttpImageProvider final : public ImageProvider {
public:
    HttpImageProvider(std::string endpoint, std::string api_key);

protected:
    std::string do_generate(const std::string& prompt, const std::vector<std::string>& references,
                            const AssetStore& assets, const CancellationToken* cancel) override;

private:
    std::string endpoint_;
    std::string api_key_;
};

/// Everything the engine talks to. `light` serves lightweight tasks (memory
/// query expansion, summaries) and may alias `text`.
struct Providers {
    std::shared_ptr<TextProvider> text;
    std::shared_ptr<TextProvider> light;
    std::shared_ptr<ImageProvider> image;
    /// Optional provider-judged validation; unset disables judged checks.
    std::shared_ptr<TextProvider> judge;

    static Providers scripted(std::shared_ptr<ScriptedProvider> provider);
    /// PREPROD_TEXT_ENDPOINT, PREPROD_TEXT_API_KEY, PREPROD_TEXT_MODEL,
    /// PREPROD_LIGHT_ENDPOINT, PREPROD_LIGHT_MODEL, PREPROD_IMAGE_ENDPOINT,
    /// PREPROD_IMAGE_API_KEY. Throws precondition-violation when the text
    /// endpoint is unset.
    static Providers from_environment();
};

} // namespace preprod
