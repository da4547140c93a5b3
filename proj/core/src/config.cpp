#include "preprod/config.hpp"

#include <fstream>

#include "preprod/error.hpp"

namespace preprod {

EngineConfig EngineConfig::defaults() {
    using K = ArtifactKind;
    EngineConfig c;
    c.dependencies[K::StoryOutline] = {{{K::StoryConcept}}, false};
    c.dependencies[K::SceneList] = {{{K::StoryOutline}}, false};
    c.dependencies[K::Styleframe] = {{{K::SceneList}, {K::StyleDescription, K::CharacterSheet}}, false};
    c.dependencies[K::StoryboardSequence] = {{{K::SceneList}}, false};
    c.dependencies[K::CharacterSheet] = {{{K::CharacterConcept}}, true};

    c.context_kinds[K::Logline] = {K::StoryConcept};
    c.context_kinds[K::CharacterConcept] = {K::StoryConcept};
    c.context_kinds[K::WorldConcept] = {K::StoryConcept};
    c.context_kinds[K::ThreeActStructure] = {K::StoryConcept, K::CharacterConcept};
    c.context_kinds[K::StoryOutline] = {K::StoryConcept, K::CharacterConcept, K::ThreeActStructure};
    c.context_kinds[K::SceneList] = {K::StoryOutline, K::CharacterConcept};
    c.context_kinds[K::Script] = {K::SceneList, K::CharacterConcept};
    c.context_kinds[K::CharacterSheet] = {K::CharacterConcept, K::StyleDescription};
    c.context_kinds[K::EnvironmentDesign] = {K::WorldConcept, K::StyleDescription};
    c.context_kinds[K::HeroImage] = {K::StoryConcept, K::StyleDescription, K::CharacterSheet};
    c.context_kinds[K::Styleframe] = {K::SceneList, K::StyleDescription, K::CharacterSheet};
    c.context_kinds[K::StoryboardSequence] = {K::SceneList, K::StyleDescription, K::CharacterSheet};

    c.completion[Stage::Ideation] = {K::StoryConcept, K::StyleDescription};
    c.completion[Stage::Scripting] = {K::StoryOutline, K::SceneList};
    c.completion[Stage::Design] = {K::CharacterSheet};
    c.completion[Stage::Storyboard] = {K::StoryboardSequence};
    return c;
}

EngineConfig EngineConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoFailure, "cannot read config " + path.string());
    try {
        return json::parse(in).get<EngineConfig>();
    } catch (const json::exception& e) {
        throw Error(Errc::FormatError, "bad config " + path.string() + ": " + e.what());
    }
}

void to_json(json& j, const EngineConfig& c) {
    json deps = json::object();
    for (const auto& [kind, rule] : c.dependencies) {
        deps[std::string(to_string(kind))] = json{{"requires", rule.groups}, {"soft", rule.soft}};
    }
    json ctx = json::object();
    for (const auto& [kind, kinds] : c.context_kinds) ctx[std::string(to_string(kind))] = kinds;
    json completion = json::object();
    for (const auto& [stage, kinds] : c.completion) completion[std::string(to_string(stage))] = kinds;
    j = json{
        {"dependencies", deps},
        {"context_kinds", ctx},
        {"completion_criteria", completion},
        {"max_revision_rounds", c.max_revision_rounds},
        {"parallel_limit", c.parallel_limit},
        {"memory",
         {{"chunk_size", c.memory.chunk_size},
          {"horizon", c.memory.horizon},
          {"top_k", c.memory.top_k},
          {"embedding_dim", c.memory.embedding_dim},
          {"summary_chars", c.memory.summary_chars}}},
        {"context_budget",
         {{"max_entries", c.context_budget.max_entries}, {"max_chars", c.context_budget.max_chars}}},
        {"event_payload_cap", c.event_payload_cap},
        {"max_events_per_request", c.max_events_per_request},
        {"intent_parser", c.intent_parser},
    };
}

void from_json(const json& j, EngineConfig& c) {
    // Missing sections keep their defaults.
    c = EngineConfig::defaults();
    if (j.contains("dependencies")) {
        c.dependencies.clear();
        for (const auto& [name, rule] : j.at("dependencies").items()) {
            DependencyRule r;
            rule.at("requires").get_to(r.groups);
            r.soft = rule.value("soft", false);
            c.dependencies[json(name).get<ArtifactKind>()] = std::move(r);
        }
    }
    if (j.contains("context_kinds")) {
        c.context_kinds.clear();
        for (const auto& [name, kinds] : j.at("context_kinds").items()) {
            c.context_kinds[json(name).get<ArtifactKind>()] = kinds.get<std::vector<ArtifactKind>>();
        }
    }
    if (j.contains("completion_criteria")) {
        c.completion.clear();
        for (const auto& [name, kinds] : j.at("completion_criteria").items()) {
            c.completion[json(name).get<Stage>()] = kinds.get<std::vector<ArtifactKind>>();
        }
    }
    c.max_revision_rounds = j.value("max_revision_rounds", c.max_revision_rounds);
    if (c.max_revision_rounds < 1) throw Error(Errc::FormatError, "max_revision_rounds must be >= 1");
    c.parallel_limit = j.value("parallel_limit", c.parallel_limit);
    if (c.parallel_limit < 1) throw Error(Errc::FormatError, "parallel_limit must be >= 1");
    if (j.contains("memory")) {
        const auto& m = j.at("memory");
        c.memory.chunk_size = m.value("chunk_size", c.memory.chunk_size);
        c.memory.horizon = m.value("horizon", c.memory.horizon);
        c.memory.top_k = m.value("top_k", c.memory.top_k);
        c.memory.embedding_dim = m.value("embedding_dim", c.memory.embedding_dim);
        c.memory.summary_chars = m.value("summary_chars", c.memory.summary_chars);
        if (c.memory.chunk_size < 1) throw Error(Errc::FormatError, "memory.chunk_size must be >= 1");
    }
    if (j.contains("context_budget")) {
        const auto& b = j.at("context_budget");
        c.context_budget.max_entries = b.value("max_entries", c.context_budget.max_entries);
        c.context_budget.max_chars = b.value("max_chars", c.context_budget.max_chars);
    }
    c.event_payload_cap = j.value("event_payload_cap", c.event_payload_cap);
    c.max_events_per_request = j.value("max_events_per_request", c.max_events_per_request);
    c.intent_parser = j.value("intent_parser", c.intent_parser);
    if (c.intent_parser != "table" && c.intent_parser != "provider") {
        throw Error(Errc::FormatError, "intent_parser must be 'table' or 'provider'");
    }
}

} // namespace preprod
