#include "preprod/domain.hpp"

#include <cstdio>

#include "preprod/error.hpp"

namespace preprod {

namespace {

template <typename Enum, std::size_t N>
struct NameTable {
    std::array<std::pair<Enum, std::string_view>, N> entries;

    std::string_view name(Enum e) const noexcept {
        for (const auto& [value, text] : entries) {
            if (value == e) return text;
        }
        return "unknown";
    }

    std::optional<Enum> parse(std::string_view text) const noexcept {
        for (const auto& [value, name] : entries) {
            if (name == text) return value;
        }
        return std::nullopt;
    }
};

constexpr NameTable<Stage, 5> kStageNames{{{
    {Stage::Planning, "planning"},
    {Stage::Ideation, "ideation"},
    {Stage::Scripting, "scripting"},
    {Stage::Design, "design"},
    {Stage::Storyboard, "storyboard"},
}}};

constexpr NameTable<AgentRole, 5> kRoleNames{{{
    {AgentRole::Core, "core"},
    {AgentRole::Ideation, "ideation"},
    {AgentRole::Scripting, "scripting"},
    {AgentRole::Design, "design"},
    {AgentRole::Art, "art"},
}}};

constexpr NameTable<ArtifactKind, 14> kKindNames{{{
    {ArtifactKind::Logline, "logline"},
    {ArtifactKind::StoryConcept, "story_concept"},
    {ArtifactKind::WorldConcept, "world_concept"},
    {ArtifactKind::StyleDescription, "style_description"},
    {ArtifactKind::CharacterConcept, "character_concept"},
    {ArtifactKind::ThreeActStructure, "three_act_structure"},
    {ArtifactKind::StoryOutline, "story_outline"},
    {ArtifactKind::SceneList, "scene_list"},
    {ArtifactKind::Script, "script"},
    {ArtifactKind::CharacterSheet, "character_sheet"},
    {ArtifactKind::EnvironmentDesign, "environment_design"},
    {ArtifactKind::HeroImage, "hero_image"},
    {ArtifactKind::Styleframe, "styleframe"},
    {ArtifactKind::StoryboardSequence, "storyboard_sequence"},
}}};

constexpr NameTable<StageStatus, 3> kStatusNames{{{
    {StageStatus::NotStarted, "not-started"},
    {StageStatus::InProgress, "in-progress"},
    {StageStatus::Complete, "complete"},
}}};

constexpr NameTable<EventKind, 8> kEventNames{{{
    {EventKind::AgentStatus, "agent-status"},
    {EventKind::ChatMessage, "chat-message"},
    {EventKind::BlockPublished, "block-published"},
    {EventKind::BlockUpdated, "block-updated"},
    {EventKind::StageChanged, "stage-changed"},
    {EventKind::ApprovalRequest, "approval-request"},
    {EventKind::Error, "error"},
    {EventKind::Done, "done"},
}}};

constexpr NameTable<PublicationIntent::Type, 3> kIntentNames{{{
    {PublicationIntent::Type::NewRoot, "new-root"},
    {PublicationIntent::Type::ChildOf, "child-of"},
    {PublicationIntent::Type::OverwriteArtifact, "overwrite-artifact"},
}}};

constexpr NameTable<ContentType, 2> kContentNames{{{
    {ContentType::Text, "text"},
    {ContentType::Image, "image"},
}}};

constexpr NameTable<Severity, 3> kSeverityNames{{{
    {Severity::Info, "info"},
    {Severity::Warning, "warning"},
    {Severity::Error, "error"},
}}};

template <typename Enum, std::size_t N>
Enum parse_or_throw(const NameTable<Enum, N>& table, const json& j, std::string_view what) {
    const auto text = j.get<std::string>();
    if (auto v = table.parse(text)) return *v;
    throw Error(Errc::FormatError, "unknown " + std::string(what) + " '" + text + "'");
}

std::string title_case(std::string_view snake) {
    std::string out;
    bool upper = true;
    for (char c : snake) {
        if (c == '_') {
            out.push_back(' ');
            upper = true;
        } else {
            out.push_back(upper ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : c);
            upper = false;
        }
    }
    return out;
}

} // namespace

std::string_view to_string(Stage s) noexcept { return kStageNames.name(s); }
std::string_view to_string(AgentRole r) noexcept { return kRoleNames.name(r); }
std::string_view to_string(ArtifactKind k) noexcept { return kKindNames.name(k); }
std::string_view to_string(StageStatus s) noexcept { return kStatusNames.name(s); }
std::string_view to_string(EventKind k) noexcept { return kEventNames.name(k); }
std::string_view to_string(PublicationIntent::Type t) noexcept { return kIntentNames.name(t); }

std::optional<Stage> parse_stage(std::string_view text) noexcept { return kStageNames.parse(text); }
std::optional<AgentRole> parse_role(std::string_view text) noexcept { return kRoleNames.parse(text); }
std::optional<ArtifactKind> parse_kind(std::string_view text) noexcept { return kKindNames.parse(text); }
std::optional<StageStatus> parse_stage_status(std::string_view text) noexcept {
    return kStatusNames.parse(text);
}
std::optional<EventKind> parse_event_kind(std::string_view text) noexcept {
    return kEventNames.parse(text);
}

std::string display_name(ArtifactKind k) {
    if (k == ArtifactKind::ThreeActStructure) return "Three Act Structure";
    return title_case(to_string(k));
}

std::string display_name(Stage s) { return title_case(to_string(s)); }

std::string display_name(AgentRole r) { return title_case(to_string(r)) + " Agent"; }

int stage_order(Stage s) noexcept { return static_cast<int>(s); }

Stage board_of(ArtifactKind k) noexcept {
    switch (k) {
    case ArtifactKind::Logline:
    case ArtifactKind::StoryConcept:
    case ArtifactKind::WorldConcept:
    case ArtifactKind::StyleDescription:
    case ArtifactKind::CharacterConcept:
        return Stage::Ideation;
    case ArtifactKind::ThreeActStructure:
    case ArtifactKind::StoryOutline:
    case ArtifactKind::SceneList:
    case ArtifactKind::Script:
        return Stage::Scripting;
    case ArtifactKind::CharacterSheet:
    case ArtifactKind::EnvironmentDesign:
    case ArtifactKind::HeroImage:
        return Stage::Design;
    case ArtifactKind::Styleframe:
    case ArtifactKind::StoryboardSequence:
        return Stage::Storyboard;
    }
    return Stage::Ideation;
}

AgentRole owner_of(ArtifactKind k) noexcept {
    switch (k) {
    case ArtifactKind::Logline:
    case ArtifactKind::StoryConcept:
    case ArtifactKind::WorldConcept:
    case ArtifactKind::StyleDescription:
    case ArtifactKind::CharacterConcept:
        return AgentRole::Ideation;
    case ArtifactKind::ThreeActStructure:
    case ArtifactKind::StoryOutline:
    case ArtifactKind::SceneList:
    case ArtifactKind::Script:
        return AgentRole::Scripting;
    case ArtifactKind::CharacterSheet:
    case ArtifactKind::EnvironmentDesign:
        return AgentRole::Design;
    case ArtifactKind::HeroImage:
    case ArtifactKind::Styleframe:
    case ArtifactKind::StoryboardSequence:
        return AgentRole::Art;
    }
    return AgentRole::Ideation;
}

bool is_multi_instance(ArtifactKind k) noexcept {
    switch (k) {
    case ArtifactKind::CharacterSheet:
    case ArtifactKind::EnvironmentDesign:
    case ArtifactKind::HeroImage:
    case ArtifactKind::Styleframe:
    case ArtifactKind::StoryboardSequence:
        return true;
    default:
        return false;
    }
}

bool produces_images(ArtifactKind k) noexcept {
    switch (k) {
    case ArtifactKind::CharacterSheet:
    case ArtifactKind::EnvironmentDesign:
    case ArtifactKind::HeroImage:
    case ArtifactKind::Styleframe:
    case ArtifactKind::StoryboardSequence:
        return true;
    default:
        return false;
    }
}

std::string ValidationReport::feedback() const {
    std::string out;
    for (const auto& m : messages) {
        if (m.severity != Severity::Error) continue;
        if (!out.empty()) out += "\n";
        out += "- [" + m.check + "] " + m.text;
    }
    return out;
}

std::optional<std::string> ProgressRecord::canonical_block(ArtifactKind k) const {
    const auto stage_it = canonical.find(board_of(k));
    if (stage_it == canonical.end()) return std::nullopt;
    const auto it = stage_it->second.find(k);
    if (it == stage_it->second.end()) return std::nullopt;
    return it->second;
}

StageStatus ProgressRecord::status(Stage s) const {
    const auto it = stage_status.find(s);
    return it == stage_status.end() ? StageStatus::NotStarted : it->second;
}

std::string IdGenerator::next(std::string_view prefix) {
    const auto n = ++counters_[std::string(prefix)];
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04lld", static_cast<long long>(n));
    return std::string(prefix) + "-" + buf;
}

// --- JSON ---------------------------------------------------------------

void to_json(json& j, Stage v) { j = to_string(v); }
void from_json(const json& j, Stage& v) { v = parse_or_throw(kStageNames, j, "stage"); }
void to_json(json& j, AgentRole v) { j = to_string(v); }
void from_json(const json& j, AgentRole& v) { v = parse_or_throw(kRoleNames, j, "role"); }
void to_json(json& j, ArtifactKind v) { j = to_string(v); }
void from_json(const json& j, ArtifactKind& v) { v = parse_or_throw(kKindNames, j, "artifact kind"); }
void to_json(json& j, StageStatus v) { j = to_string(v); }
void from_json(const json& j, StageStatus& v) { v = parse_or_throw(kStatusNames, j, "stage status"); }
void to_json(json& j, ContentType v) { j = kContentNames.name(v); }
void from_json(const json& j, ContentType& v) { v = parse_or_throw(kContentNames, j, "content type"); }
void to_json(json& j, Severity v) { j = kSeverityNames.name(v); }
void from_json(const json& j, Severity& v) { v = parse_or_throw(kSeverityNames, j, "severity"); }
void to_json(json& j, EventKind v) { j = to_string(v); }
void from_json(const json& j, EventKind& v) { v = parse_or_throw(kEventNames, j, "event kind"); }

void to_json(json& j, const Element& v) {
    j = json{{"element_id", v.element_id},
             {"kind", v.kind},
             {"content_type", v.content_type},
             {"content", v.content},
             {"attributes", v.attributes}};
}

void from_json(const json& j, Element& v) {
    j.at("element_id").get_to(v.element_id);
    j.at("kind").get_to(v.kind);
    v.content_type = j.value("content_type", ContentType::Text);
    v.content = j.value("content", std::string{});
    v.attributes = j.value("attributes", std::map<std::string, std::string>{});
}

void to_json(json& j, const BlockVersion& v) {
    j = json{{"version_index", v.version_index},
             {"elements", v.elements},
             {"created_at", v.created_at},
             {"origin_task", v.origin_task}};
}

void from_json(const json& j, BlockVersion& v) {
    j.at("version_index").get_to(v.version_index);
    j.at("elements").get_to(v.elements);
    v.created_at = j.value("created_at", Timestamp{0});
    v.origin_task = j.value("origin_task", std::string{});
}

void to_json(json& j, const Block& v) {
    j = json{{"block_id", v.block_id},
             {"stage", v.stage},
             {"kind", v.kind},
             {"parent_id", v.parent_id ? json(*v.parent_id) : json(nullptr)},
             {"versions", v.versions},
             {"active_version", v.active_version},
             {"pinned", v.pinned},
             {"collapsed", v.collapsed}};
}

void from_json(const json& j, Block& v) {
    j.at("block_id").get_to(v.block_id);
    j.at("stage").get_to(v.stage);
    j.at("kind").get_to(v.kind);
    if (auto it = j.find("parent_id"); it != j.end() && !it->is_null()) {
        v.parent_id = it->get<std::string>();
    } else {
        v.parent_id.reset();
    }
    j.at("versions").get_to(v.versions);
    v.active_version = j.value("active_version", 0);
    v.pinned = j.value("pinned", false);
    v.collapsed = j.value("collapsed", false);
}

void to_json(json& j, const Selection& v) {
    j = json{{"block_id", v.block_id},
             {"version_index", v.version_index},
             {"element_ids", v.element_ids}};
}

void from_json(const json& j, Selection& v) {
    j.at("block_id").get_to(v.block_id);
    v.version_index = j.value("version_index", 0);
    v.element_ids = j.value("element_ids", std::vector<std::string>{});
}

void to_json(json& j, const ContextItem& v) {
    j = json{{"label", v.label},
             {"content_type", v.content_type},
             {"content", v.content},
             {"source", v.source}};
}

void from_json(const json& j, ContextItem& v) {
    j.at("label").get_to(v.label);
    v.content_type = j.value("content_type", ContentType::Text);
    v.content = j.value("content", std::string{});
    v.source = j.value("source", std::string{});
}

void to_json(json& j, const PublicationIntent& v) {
    j = json{{"type", to_string(v.type)}};
    if (v.type == PublicationIntent::Type::ChildOf) j["parent_id"] = v.parent_id;
    if (v.type == PublicationIntent::Type::OverwriteArtifact && v.kind) j["kind"] = *v.kind;
}

void from_json(const json& j, PublicationIntent& v) {
    v.type = parse_or_throw(kIntentNames, j.at("type"), "publication intent");
    v.parent_id = j.value("parent_id", std::string{});
    if (auto it = j.find("kind"); it != j.end() && !it->is_null()) {
        v.kind = it->get<ArtifactKind>();
    } else {
        v.kind.reset();
    }
}

void to_json(json& j, const TaskSpec& v) {
    j = json{{"task_id", v.task_id},
             {"target_role", v.target_role},
             {"task_kind", v.task_kind ? json(*v.task_kind) : json("direct-chat")},
             {"instruction", v.instruction},
             {"context_payload", v.context_payload},
             {"publication_intent", v.publication_intent},
             {"stage", v.stage},
             {"slots", v.slots}};
}

void from_json(const json& j, TaskSpec& v) {
    j.at("task_id").get_to(v.task_id);
    j.at("target_role").get_to(v.target_role);
    const auto kind = j.at("task_kind").get<std::string>();
    if (kind == "direct-chat") {
        v.task_kind.reset();
    } else {
        v.task_kind = j.at("task_kind").get<ArtifactKind>();
    }
    j.at("instruction").get_to(v.instruction);
    v.context_payload = j.value("context_payload", std::vector<ContextItem>{});
    v.publication_intent = j.value("publication_intent", PublicationIntent{});
    j.at("stage").get_to(v.stage);
    v.slots = j.value("slots", std::map<std::string, std::string>{});
}

void to_json(json& j, const ValidationMessage& v) {
    j = json{{"check", v.check}, {"severity", v.severity}, {"text", v.text}};
}

void from_json(const json& j, ValidationMessage& v) {
    j.at("check").get_to(v.check);
    j.at("severity").get_to(v.severity);
    j.at("text").get_to(v.text);
}

void to_json(json& j, const ValidationReport& v) {
    j = json{{"format_ok", v.format_ok},
             {"spec_ok", v.spec_ok},
             {"consistency_ok", v.consistency_ok},
             {"messages", v.messages}};
    if (v.approved()) {
        j["verdict"] = json{{"type", "approve"}};
    } else {
        j["verdict"] = json{{"type", "request-revision"}, {"feedback", v.feedback()}};
    }
}

void from_json(const json& j, ValidationReport& v) {
    j.at("format_ok").get_to(v.format_ok);
    j.at("spec_ok").get_to(v.spec_ok);
    j.at("consistency_ok").get_to(v.consistency_ok);
    v.messages = j.value("messages", std::vector<ValidationMessage>{});
}

void to_json(json& j, const ProgressRecord& v) {
    json canonical = json::object();
    for (const auto& [stage, kinds] : v.canonical) {
        json m = json::object();
        for (const auto& [kind, id] : kinds) m[std::string(to_string(kind))] = id;
        canonical[std::string(to_string(stage))] = std::move(m);
    }
    json status = json::object();
    for (const auto& [stage, st] : v.stage_status) status[std::string(to_string(stage))] = st;
    j = json{{"canonical", canonical}, {"stage_status", status}, {"project_brief", v.project_brief}};
}

void from_json(const json& j, ProgressRecord& v) {
    v = {};
    const json canonical_map = j.value("canonical", json::object());
    for (const auto& [stage_name, kinds] : canonical_map.items()) {
        const Stage stage = json(stage_name).get<Stage>();
        auto& m = v.canonical[stage];
        for (const auto& [kind_name, id] : kinds.items()) {
            m[json(kind_name).get<ArtifactKind>()] = id.get<std::string>();
        }
    }
    const json status_map = j.value("stage_status", json::object());
    for (const auto& [stage_name, st] : status_map.items()) {
        v.stage_status[json(stage_name).get<Stage>()] = st.get<StageStatus>();
    }
    v.project_brief = j.value("project_brief", std::string{});
}

void to_json(json& j, const SessionEvent& v) {
    j = json{{"event_seq", v.event_seq},
             {"event_kind", v.event_kind},
             {"payload", v.payload},
             {"agent", v.agent},
             {"session_id", v.session_id},
             {"timestamp", v.timestamp}};
}

void from_json(const json& j, SessionEvent& v) {
    j.at("event_seq").get_to(v.event_seq);
    j.at("event_kind").get_to(v.event_kind);
    v.payload = j.value("payload", json::object());
    j.at("agent").get_to(v.agent);
    j.at("session_id").get_to(v.session_id);
    v.timestamp = j.value("timestamp", Timestamp{0});
}

} // namespace preprod
