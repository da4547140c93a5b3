#include "preprod/schema.hpp"

#include <map>
#include <set>

namespace preprod {

namespace {

ElementRequirement text(std::string kind, std::size_t min, std::optional<std::size_t> max,
                        std::vector<std::string> attrs = {}) {
    return {std::move(kind), ContentType::Text, min, max, std::move(attrs)};
}

ElementRequirement image(std::string kind, std::size_t min, std::optional<std::size_t> max,
                         std::vector<std::string> attrs = {}) {
    return {std::move(kind), ContentType::Image, min, max, std::move(attrs)};
}

std::map<ArtifactKind, ElementSchema> build_schemas() {
    using K = ArtifactKind;
    std::map<K, ElementSchema> s;
    s[K::Logline] = {K::Logline, "logline-option", {text("logline-option", 1, std::nullopt)}};
    s[K::StoryConcept] = {K::StoryConcept, "story-option",
                          {text("story-option", 1, std::nullopt, {"title"})}};
    s[K::WorldConcept] = {K::WorldConcept, "world-option",
                          {text("world-option", 1, std::nullopt, {"title"})}};
    s[K::StyleDescription] = {K::StyleDescription, "style-option",
                              {text("style-option", 1, std::nullopt, {"title"})}};
    s[K::CharacterConcept] = {K::CharacterConcept, "character-entry",
                              {text("character-entry", 1, std::nullopt, {"name", "role"})}};
    s[K::ThreeActStructure] = {K::ThreeActStructure, "act-section",
                               {text("act-section", 3, 3, {"act", "turning point"})}};
    s[K::StoryOutline] = {K::StoryOutline, "outline-beat",
                          {text("outline-beat", 1, std::nullopt, {"beat number"})}};
    s[K::SceneList] = {K::SceneList, "scene-entry",
                       {text("scene-entry", 1, std::nullopt, kSceneAttributes)}};
    s[K::Script] = {K::Script, "script-section",
                    {text("script-section", 1, std::nullopt, {"scene number"})}};
    s[K::CharacterSheet] = {K::CharacterSheet, "image-asset",
                            {image("image-asset", 1, 1, {"name"}), text("text-field", 1, std::nullopt)}};
    s[K::EnvironmentDesign] = {K::EnvironmentDesign, "image-asset",
                               {image("image-asset", 1, 1, {"name"}), text("text-field", 1, std::nullopt)}};
    s[K::HeroImage] = {K::HeroImage, "image-asset",
                       {image("image-asset", 1, 1), text("text-field", 1, 1)}};
    s[K::Styleframe] = {K::Styleframe, "image-asset",
                        {image("image-asset", 1, 1, {"scene number"}), text("text-field", 1, 1)}};
    s[K::StoryboardSequence] = {
        K::StoryboardSequence, "shot-panel",
        {image("shot-panel", 1, std::nullopt, {"shot number", "scene number", "camera", "action"})}};
    return s;
}

} // namespace

const ElementRequirement* ElementSchema::find(std::string_view element_kind) const {
    for (const auto& r : requirements) {
        if (r.element_kind == element_kind) return &r;
    }
    return nullptr;
}

const ElementSchema& element_schema(ArtifactKind kind) {
    static const auto schemas = build_schemas();
    return schemas.at(kind);
}

std::vector<std::string> schema_violations(ArtifactKind kind, const std::vector<Element>& elements) {
    const auto& schema = element_schema(kind);
    std::vector<std::string> out;
    if (elements.empty()) {
        out.push_back("no elements");
        return out;
    }

    std::set<std::string> ids;
    std::map<std::string, std::size_t> counts;
    for (const auto& e : elements) {
        if (e.element_id.empty()) {
            out.push_back("element with empty element_id");
        } else if (!ids.insert(e.element_id).second) {
            out.push_back("duplicate element_id '" + e.element_id + "'");
        }
        const auto* req = schema.find(e.kind);
        if (req == nullptr) {
            out.push_back("unexpected element kind '" + e.kind + "'");
            continue;
        }
        ++counts[e.kind];
        if (e.content_type != req->content_type) {
            out.push_back("element " + e.element_id + " (" + e.kind + ") must carry " +
                          (req->content_type == ContentType::Image ? "an image" : "text") + " content");
        }
        for (const auto& attr : req->attributes) {
            if (!e.attributes.contains(attr)) {
                out.push_back("element " + e.element_id + " (" + e.kind + ") is missing attribute '" +
                              attr + "'");
            }
        }
    }
    for (const auto& req : schema.requirements) {
        const auto n = counts[req.element_kind];
        if (n < req.min_count) {
            out.push_back("expected at least " + std::to_string(req.min_count) + " '" + req.element_kind +
                          "' element(s), found " + std::to_string(n));
        }
        if (req.max_count && n > *req.max_count) {
            out.push_back("expected at most " + std::to_string(*req.max_count) + " '" + req.element_kind +
                          "' element(s), found " + std::to_string(n));
        }
    }
    return out;
}

json to_json(const ElementSchema& schema) {
    json reqs = json::array();
    for (const auto& r : schema.requirements) {
        reqs.push_back({{"element_kind", r.element_kind},
                        {"content_type", r.content_type},
                        {"min_count", r.min_count},
                        {"max_count", r.max_count ? json(*r.max_count) : json(nullptr)},
                        {"attributes", r.attributes}});
    }
    return json{{"kind", schema.kind}, {"primary_element", schema.primary_element}, {"requirements", reqs}};
}

} // namespace preprod
