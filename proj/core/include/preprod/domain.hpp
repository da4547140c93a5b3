#pragma once

// Shared domain vocabulary: stages, roles, artifact kinds and the value types
// that every module exchanges. All types serialize to the canonical JSON
// dialect used for persistence and for event payloads.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace preprod {

using json = nlohmann::json;

/// UTC milliseconds since the Unix epoch.
using Timestamp = std::int64_t;

enum class Stage { Planning, Ideation, Scripting, Design, Storyboard };

enum class AgentRole { Core, Ideation, Scripting, Design, Art };

enum class ArtifactKind {
    Logline,
    StoryConcept,
    WorldConcept,
    StyleDescription,
    CharacterConcept,
    ThreeActStructure,
    StoryOutline,
    SceneList,
    Script,
    CharacterSheet,
    EnvironmentDesign,
    HeroImage,
    Styleframe,
    StoryboardSequence,
};

enum class StageStatus { NotStarted, InProgress, Complete };

inline constexpr std::array kAllStages{Stage::Planning, Stage::Ideation, Stage::Scripting,
                                       Stage::Design, Stage::Storyboard};

inline constexpr std::array kBoardStages{Stage::Ideation, Stage::Scripting, Stage::Design,
                                         Stage::Storyboard};

inline constexpr std::array kSpecialistRoles{AgentRole::Ideation, AgentRole::Scripting,
                                             AgentRole::Design, AgentRole::Art};

inline constexpr std::array kAllKinds{
    ArtifactKind::Logline,           ArtifactKind::StoryConcept,
    ArtifactKind::WorldConcept,      ArtifactKind::StyleDescription,
    ArtifactKind::CharacterConcept,  ArtifactKind::ThreeActStructure,
    ArtifactKind::StoryOutline,      ArtifactKind::SceneList,
    ArtifactKind::Script,            ArtifactKind::CharacterSheet,
    ArtifactKind::EnvironmentDesign, ArtifactKind::HeroImage,
    ArtifactKind::Styleframe,        ArtifactKind::StoryboardSequence,
};

std::string_view to_string(Stage s) noexcept;
std::string_view to_string(AgentRole r) noexcept;
std::string_view to_string(ArtifactKind k) noexcept;
std::string_view to_string(StageStatus s) noexcept;

/// Human-facing names ("Story Outline", "Scripting Agent").
std::string display_name(ArtifactKind k);
std::string display_name(Stage s);
std::string display_name(AgentRole r);

std::optional<Stage> parse_stage(std::string_view text) noexcept;
std::optional<AgentRole> parse_role(std::string_view text) noexcept;
std::optional<ArtifactKind> parse_kind(std::string_view text) noexcept;
std::optional<StageStatus> parse_stage_status(std::string_view text) noexcept;

/// Position in the workflow; used to tell forward from backward transitions.
int stage_order(Stage s) noexcept;

/// Planning is handled by the Core alone and has no board.
constexpr bool has_board(Stage s) noexcept { return s != Stage::Planning; }

/// The board every artifact kind is published on.
Stage board_of(ArtifactKind k) noexcept;

/// The specialized role that owns the tool producing `k`.
AgentRole owner_of(ArtifactKind k) noexcept;

/// Kinds of which a project normally holds several instances (one sheet per
/// character, one styleframe per scene); a new request adds rather than redoes.
bool is_multi_instance(ArtifactKind k) noexcept;

/// Kinds whose tool produces images through the image provider.
bool produces_images(ArtifactKind k) noexcept;

enum class ContentType { Text, Image };

struct Element {
    std::string element_id;
    std::string kind;
    ContentType content_type = ContentType::Text;
    /// Text body, or the relative asset path for image content.
    std::string content;
    std::map<std::string, std::string> attributes;

    bool operator==(const Element&) const = default;
};

struct BlockVersion {
    int version_index = 0;
    std::vector<Element> elements;
    Timestamp created_at = 0;
    /// Task id, or "user-edit".
    std::string origin_task;

    bool operator==(const BlockVersion&) const = default;
};

struct Block {
    std::string block_id;
    Stage stage = Stage::Ideation;
    ArtifactKind kind = ArtifactKind::StoryConcept;
    std::optional<std::string> parent_id;
    std::vector<BlockVersion> versions;
    int active_version = 0;
    bool pinned = false;
    bool collapsed = false;

    const BlockVersion& active() const { return versions.at(static_cast<std::size_t>(active_version)); }

    bool operator==(const Block&) const = default;
};

struct Selection {
    std::string block_id;
    int version_index = 0;
    /// Empty means the whole block.
    std::vector<std::string> element_ids;

    bool operator==(const Selection&) const = default;
};

/// One packaged piece of context handed to an agent.
struct ContextItem {
    std::string label;
    ContentType content_type = ContentType::Text;
    std::string content;
    /// "brief", "prior-stage", "selection", "recent", "upload" or "channel".
    std::string source;

    bool operator==(const ContextItem&) const = default;
};

struct PublicationIntent {
    enum class Type { NewRoot, ChildOf, OverwriteArtifact };
    Type type = Type::NewRoot;
    std::string parent_id;     // ChildOf
    std::optional<ArtifactKind> kind;  // OverwriteArtifact

    static PublicationIntent new_root() { return {}; }
    static PublicationIntent child_of(std::string parent) {
        return {Type::ChildOf, std::move(parent), std::nullopt};
    }
    static PublicationIntent overwrite(ArtifactKind k) { return {Type::OverwriteArtifact, {}, k}; }

    bool operator==(const PublicationIntent&) const = default;
};

std::string_view to_string(PublicationIntent::Type t) noexcept;

struct TaskSpec {
    std::string task_id;
    AgentRole target_role = AgentRole::Ideation;
    /// nullopt means a direct-chat task with no tool.
    std::optional<ArtifactKind> task_kind;
    std::string instruction;
    std::vector<ContextItem> context_payload;
    PublicationIntent publication_intent;
    Stage stage = Stage::Planning;
    /// Structured requirements checked by spec compliance: "count", "name",
    /// "scene number".
    std::map<std::string, std::string> slots;

    bool operator==(const TaskSpec&) const = default;
};

enum class Severity { Info, Warning, Error };

struct ValidationMessage {
    std::string check;  // "format", "spec", "consistency"
    Severity severity = Severity::Info;
    std::string text;

    bool operator==(const ValidationMessage&) const = default;
};

struct ValidationReport {
    bool format_ok = true;
    bool spec_ok = true;
    bool consistency_ok = true;
    std::vector<ValidationMessage> messages;

    bool approved() const noexcept { return format_ok && spec_ok && consistency_ok; }
    /// Error messages joined into revision feedback; empty when approved.
    std::string feedback() const;

    bool operator==(const ValidationReport&) const = default;
};

struct ProgressRecord {
    std::map<Stage, std::map<ArtifactKind, std::string>> canonical;
    std::map<Stage, StageStatus> stage_status;
    std::string project_brief;

    std::optional<std::string> canonical_block(ArtifactKind k) const;
    StageStatus status(Stage s) const;

    bool operator==(const ProgressRecord&) const = default;
};

enum class EventKind {
    AgentStatus,
    ChatMessage,
    BlockPublished,
    BlockUpdated,
    StageChanged,
    ApprovalRequest,
    Error,
    Done,
};

std::string_view to_string(EventKind k) noexcept;
std::optional<EventKind> parse_event_kind(std::string_view text) noexcept;

struct SessionEvent {
    std::int64_t event_seq = 0;
    EventKind event_kind = EventKind::AgentStatus;
    json payload = json::object();
    AgentRole agent = AgentRole::Core;
    std::string session_id;
    Timestamp timestamp = 0;

    bool operator==(const SessionEvent&) const = default;
};

void to_json(json& j, Stage v);
void from_json(const json& j, Stage& v);
void to_json(json& j, AgentRole v);
void from_json(const json& j, AgentRole& v);
void to_json(json& j, ArtifactKind v);
void from_json(const json& j, ArtifactKind& v);
void to_json(json& j, StageStatus v);
void from_json(const json& j, StageStatus& v);
void to_json(json& j, ContentType v);
void from_json(const json& j, ContentType& v);
void to_json(json& j, Severity v);
void from_json(const json& j, Severity& v);
void to_json(json& j, EventKind v);
void from_json(const json& j, EventKind& v);

void to_json(json& j, const Element& v);
void from_json(const json& j, Element& v);
void to_json(json& j, const BlockVersion& v);
void from_json(const json& j, BlockVersion& v);
void to_json(json& j, const Block& v);
void from_json(const json& j, Block& v);
void to_json(json& j, const Selection& v);
void from_json(const json& j, Selection& v);
void to_json(json& j, const ContextItem& v);
void from_json(const json& j, ContextItem& v);
void to_json(json& j, const PublicationIntent& v);
void from_json(const json& j, PublicationIntent& v);
void to_json(json& j, const TaskSpec& v);
void from_json(const json& j, TaskSpec& v);
void to_json(json& j, const ValidationMessage& v);
void from_json(const json& j, ValidationMessage& v);
void to_json(json& j, const ValidationReport& v);
void from_json(const json& j, ValidationReport& v);
void to_json(json& j, const ProgressRecord& v);
void from_json(const json& j, ProgressRecord& v);
void to_json(json& j, const SessionEvent& v);
void from_json(const json& j, SessionEvent& v);

/// Deterministic counter-based identifiers ("blk-0001"). Persisted with the
/// project so ids stay unique across save/load.
class IdGenerator {
public:
    std::string next(std::string_view prefix);

    const std::map<std::string, std::int64_t>& counters() const noexcept { return counters_; }
    void restore(std::map<std::string, std::int64_t> counters) { counters_ = std::move(counters); }

    bool operator==(const IdGenerator&) const = default;

private:
    std::map<std::string, std::int64_t> counters_;
};

} // namespace preprod
