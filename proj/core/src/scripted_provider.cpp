#include <array>
#include <chrono>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <openssl/evp.h>

#include "preprod/assets.hpp"
#include "preprod/error.hpp"
#include "preprod/provider.hpp"

namespace preprod {

namespace {

constexpr int kPlaceholderSide = 8;
constexpr std::string_view kPpmHeader = "P6\n8 8\n255\n";

std::array<unsigned char, 32> sha256(std::string_view bytes) {
    std::array<unsigned char, 32> md{};
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr);
    return md;
}

std::string to_hex(const unsigned char* data, std::size_t n) {
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(hex[data[i] >> 4]);
        out.push_back(hex[data[i] & 0xF]);
    }
    return out;
}

void sleep_cancellable(int delay_ms, const CancellationToken* cancel) {
    using namespace std::chrono;
    const auto until = steady_clock::now() + milliseconds(delay_ms);
    while (steady_clock::now() < until) {
        throw_if_cancelled(cancel);
        std::this_thread::sleep_for(std::min<steady_clock::duration>(milliseconds(2), until - steady_clock::now()));
    }
    throw_if_cancelled(cancel);
}

[[noreturn]] void raise(const ScriptedFault& fault) {
    if (fault.type == "exception") throw std::runtime_error("scripted tool exception: " + fault.reason);
    throw Error(Errc::ProviderFailure, "scripted fault: " + fault.reason, {fault.reason});
}

} // namespace

std::string sha256_hex(std::string_view bytes) {
    const auto md = sha256(bytes);
    return to_hex(md.data(), md.size());
}

std::string image_hash_input(const std::string& prompt, const std::vector<std::string>& references) {
    std::string out = "prompt:" + prompt + "\n";
    for (const auto& ref : references) out += "ref:" + ref + "\n";
    return out;
}

std::string placeholder_image(const std::string& prompt, const std::vector<std::string>& references) {
    const auto md = sha256(image_hash_input(prompt, references));
    std::string out(kPpmHeader);
    const std::size_t pixels = kPlaceholderSide * kPlaceholderSide * 3;
    for (std::size_t i = 0; i < pixels; ++i) out.push_back(static_cast<char>(md[i % md.size()]));
    return out;
}

std::optional<std::string> placeholder_digest(std::string_view ppm) {
    if (!ppm.starts_with(kPpmHeader) || ppm.size() < kPpmHeader.size() + 32) return std::nullopt;
    const auto* px = reinterpret_cast<const unsigned char*>(ppm.data() + kPpmHeader.size());
    return to_hex(px, 32);
}

ScriptedProgram ScriptedProgram::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoFailure, "cannot read scripted program " + path.string());
    try {
        return json::parse(in).get<ScriptedProgram>();
    } catch (const json::exception& e) {
        throw Error(Errc::FormatError, "bad scripted program " + path.string() + ": " + e.what());
    }
}

void to_json(json& j, const ScriptedRule& r) {
    j = json::object();
    if (r.role) j["role"] = *r.role;
    if (r.task_kind) j["task_kind"] = *r.task_kind;
    if (r.purpose) j["purpose"] = *r.purpose;
    if (r.instruction_contains) j["instruction_contains"] = *r.instruction_contains;
    j["output"] = r.output;
    if (r.fault) j["fault"] = {{"type", r.fault->type}, {"reason", r.fault->reason}};
    if (r.times) j["times"] = *r.times;
    if (r.delay_ms != 0) j["delay_ms"] = r.delay_ms;
}

void from_json(const json& j, ScriptedRule& r) {
    r = {};
    if (j.contains("role")) r.role = j.at("role").get<AgentRole>();
    if (j.contains("task_kind")) {
        const auto kind = j.at("task_kind").get<std::string>();
        if (kind != "direct-chat" && !parse_kind(kind)) {
            throw Error(Errc::FormatError, "scripted rule has unknown task_kind '" + kind + "'");
        }
        r.task_kind = kind;
    }
    if (j.contains("purpose")) r.purpose = j.at("purpose").get<std::string>();
    if (j.contains("instruction_contains")) r.instruction_contains = j.at("instruction_contains").get<std::string>();
    if (auto it = j.find("output"); it != j.end()) {
        // Structured outputs are stored as their compact JSON text.
        r.output = it->is_string() ? it->get<std::string>() : it->dump();
    }
    if (j.contains("fault")) {
        const auto& f = j.at("fault");
        r.fault = ScriptedFault{f.value("type", std::string("provider-failure")), f.value("reason", std::string("scripted"))};
    }
    if (j.contains("times")) r.times = j.at("times").get<int>();
    r.delay_ms = j.value("delay_ms", 0);
}

void to_json(json& j, const ScriptedProgram& p) { j = json{{"rules", p.rules}}; }

void from_json(const json& j, ScriptedProgram& p) {
    if (j.is_array()) {
        j.get_to(p.rules);
    } else {
        j.at("rules").get_to(p.rules);
    }
}

ScriptedProvider::ScriptedProvider(ScriptedProgram program)
    : program_(std::move(program)), consumed_(program_.rules.size(), 0) {}

std::vector<int> ScriptedProvider::consumed() const {
    std::lock_guard lock(mutex_);
    return consumed_;
}

std::vector<ScriptedCall> ScriptedProvider::trace() const {
    std::lock_guard lock(mutex_);
    return trace_;
}

void ScriptedProvider::reset() {
    std::lock_guard lock(mutex_);
    std::fill(consumed_.begin(), consumed_.end(), 0);
    trace_.clear();
}

const ScriptedRule* ScriptedProvider::claim(AgentRole role, const std::optional<ArtifactKind>& kind,
                                            const std::string& purpose, const std::string& instruction) {
    const std::string kind_name = kind ? std::string(to_string(*kind)) : "direct-chat";
    std::lock_guard lock(mutex_);
    for (std::size_t i = 0; i < program_.rules.size(); ++i) {
        const auto& r = program_.rules[i];
        if (r.role && *r.role != role) continue;
        if (r.task_kind && *r.task_kind != kind_name) continue;
        if (r.purpose && *r.purpose != purpose) continue;
        if (!r.purpose && purpose == "image") continue;
        if (r.instruction_contains && instruction.find(*r.instruction_contains) == std::string::npos) continue;
        if (r.times && consumed_[i] >= *r.times) continue;
        ++consumed_[i];
        trace_.push_back({static_cast<int>(i), role, kind_name, purpose});
        return &r;
    }
    if (purpose != "image") trace_.push_back({-1, role, kind_name, purpose});
    return nullptr;
}

std::string ScriptedProvider::do_complete(const ProviderRequest& request, const CancellationToken* cancel) {
    const auto* rule = claim(request.role, request.task_kind, request.purpose, request.instruction);
    if (rule == nullptr) {
        throw Error(Errc::ProviderFailure,
                    "no scripted rule for role=" + std::string(to_string(request.role)) + " kind=" +
                        (request.task_kind ? std::string(to_string(*request.task_kind)) : "direct-chat") +
                        " purpose=" + request.purpose,
                    {"no-rule"});
    }
    if (rule->delay_ms > 0) sleep_cancellable(rule->delay_ms, cancel);
    if (rule->fault) raise(*rule->fault);
    return rule->output;
}

std::string ScriptedProvider::do_generate(const std::string& prompt, const std::vector<std::string>& references,
                                          const AssetStore& assets, const CancellationToken* cancel) {
    // Image rules are optional; they only inject delays and faults.
    const auto* rule = claim(AgentRole::Art, std::nullopt, "image", prompt);
    if (rule != nullptr) {
        if (rule->delay_ms > 0) sleep_cancellable(rule->delay_ms, cancel);
        if (rule->fault) raise(*rule->fault);
    }
    const auto digest = sha256_hex(image_hash_input(prompt, references));
    return assets.write("img-" + digest.substr(0, 16) + ".ppm", placeholder_image(prompt, references));
}

} // namespace preprod
