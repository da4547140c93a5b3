#pragma once

// Shared helpers for the test binaries.

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "preprod/domain.hpp"
#include "preprod/provider.hpp"
#include "preprod/schema.hpp"

namespace fixtures {

using namespace preprod;

inline std::filesystem::path source_dir() { return PREPROD_SOURCE_DIR; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "t") {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("preprod-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
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

private:
    std::filesystem::path path_;
};

inline Element text_el(std::string kind, std::string text, std::map<std::string, std::string> attrs = {}) {
    Element e;
    e.kind = std::move(kind);
    e.content = std::move(text);
    e.attributes = std::move(attrs);
    return e;
}

inline Element image_el(std::string kind, std::string ref, std::map<std::string, std::string> attrs = {}) {
    Element e = text_el(std::move(kind), std::move(ref), std::move(attrs));
    e.content_type = ContentType::Image;
    return e;
}

/// Schema-valid elements for `kind`: `primary` copies of the primary element
/// (clamped to the schema bounds), one of everything else. Attributes are
/// filled with `tag`-derived values; images point at `image_ref`.
inline std::vector<Element> valid_elements(ArtifactKind kind, std::size_t primary = 1, const std::string& tag = "x",
                                           const std::string& image_ref = "assets/img.ppm") {
    const auto& schema = element_schema(kind);
    std::vector<Element> out;
    for (const auto& req : schema.requirements) {
        std::size_t n = req.element_kind == schema.primary_element ? primary : 1;
        n = std::max(n, req.min_count);
        if (req.max_count) n = std::min(n, *req.max_count);
        for (std::size_t i = 0; i < n; ++i) {
            std::map<std::string, std::string> attrs;
            for (const auto& a : req.attributes) attrs[a] = tag + "-" + a + "-" + std::to_string(i + 1);
            if (req.content_type == ContentType::Image) {
                out.push_back(image_el(req.element_kind, image_ref, attrs));
            } else {
                out.push_back(text_el(req.element_kind, tag + " " + req.element_kind + " " + std::to_string(i + 1), attrs));
            }
        }
    }
    return out;
}

/// {"elements": [...]} output text as a specialist would return it.
inline std::string agent_output(const std::vector<Element>& elements) {
    json arr = json::array();
    for (const auto& e : elements) {
        json j{{"kind", e.kind}, {"attributes", e.attributes}};
        if (e.content_type == ContentType::Image) {
            j["image_prompt"] = e.content;
        } else {
            j["text"] = e.content;
        }
        arr.push_back(j);
    }
    return json{{"elements", arr}}.dump();
}

inline ScriptedRule rule(std::optional<AgentRole> role, std::optional<std::string> kind, std::string output,
                         std::optional<std::string> purpose = std::string("tool")) {
    ScriptedRule r;
    r.role = role;
    r.task_kind = std::move(kind);
    r.purpose = std::move(purpose);
    r.output = std::move(output);
    return r;
}

inline ScriptedRule fault_rule(std::optional<AgentRole> role, std::optional<std::string> kind, std::string type,
                               std::string reason = "scripted") {
    ScriptedRule r = rule(role, std::move(kind), "");
    r.fault = ScriptedFault{std::move(type), std::move(reason)};
    return r;
}

inline std::filesystem::path golden_scenario() { return source_dir() / "scenarios" / "golden_workflow.json"; }

} // namespace fixtures
