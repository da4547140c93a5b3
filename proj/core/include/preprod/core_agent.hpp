#pragma once

// The project-manager agent: reads each user turn, decides what to do,
// packages work for the specialists, checks what comes back and publishes it.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "preprod/agents.hpp"
#include "preprod/cancellation.hpp"
#include "preprod/config.hpp"
#include "preprod/domain.hpp"
#include "preprod/memory.hpp"
#include "preprod/project.hpp"
#include "preprod/prompts.hpp"
#include "preprod/provider.hpp"

namespace preprod {

class AssetStore;

struct PendingProposal {
    std::optional<Stage> switch_to;
    std::vector<TaskSpec> specs;
    std::string text;

    bool operator==(const PendingProposal&) const = default;
};

/// All mutable state of a session: snapshotted before each request and
/// restored wholesale when the request fails.
struct Workspace {
    ProjectState project;
    std::optional<PendingProposal> pending;
    std::map<AgentRole, ContextWindow> contexts;
    std::optional<DirectChannel> channel;

    bool operator==(const Workspace&) const = default;
};

json workspace_to_json(const Workspace& ws);

struct UserTurn {
    std::string text;
    std::optional<Selection> selection;
    /// Asset references of uploaded images (already stored).
    std::vector<std::string> uploads;
};

// --- decisions ----------------------------------------------------------------

struct RespondDirectly {
    std::string text;
    /// Ask the text provider for the reply instead of using `text`.
    bool use_provider = false;
};

struct Delegate {
    std::vector<TaskSpec> specs;
    /// Stage entered before delegating (approved or explicitly requested).
    std::optional<Stage> enter_stage;
    std::string cause;
    std::string note;
};

struct SwitchStage {
    Stage stage = Stage::Planning;
    std::string reason;
    std::string cause;
};

struct OpenDirectChannel {
    AgentRole role = AgentRole::Scripting;
};

struct AskApproval {
    PendingProposal proposal;
};

using Decision = std::variant<RespondDirectly, Delegate, SwitchStage, OpenDirectChannel, AskApproval>;

std::string_view decision_name(const Decision& d) noexcept;

// --- intent parsing -------------------------------------------------------------

struct ParsedIntent {
    bool approve = false;
    bool reject = false;
    std::vector<ArtifactKind> kinds;
    std::optional<int> count;
    std::optional<Stage> explicit_stage;
    std::optional<AgentRole> open_channel;
    bool close_channel = false;
    bool refinement = false;
    /// Set when the request named no kind clearly ("I want the story").
    bool ambiguous = false;
    std::string ambiguity;

    bool operator==(const ParsedIntent&) const = default;
};

class IntentParser {
public:
    virtual ~IntentParser() = default;
    virtual ParsedIntent parse(const std::string& message, Stage current, const RequestControl& control) = 0;
};

/// Deterministic keyword table.
class KeywordIntentParser final : public IntentParser {
public:
    ParsedIntent parse(const std::string& message, Stage current, const RequestControl& control) override;
};

/// Asks the text provider for a JSON intent object:
/// {"approve", "reject", "kinds": [...], "count", "stage", "open_channel",
///  "close_channel", "refinement"}. Unparseable replies are malformed-output.
class ProviderIntentParser final : public IntentParser {
public:
    explicit ProviderIntentParser(std::shared_ptr<TextProvider> provider) : provider_(std::move(provider)) {}
    ParsedIntent parse(const std::string& message, Stage current, const RequestControl& control) override;

private:
    std::shared_ptr<TextProvider> provider_;
};

ParsedIntent intent_from_json(const json& j);

// --- stage resolution -------------------------------------------------------------

struct StageResolution {
    Stage stage = Stage::Planning;
    bool explicit_request = false;
    /// A forward move was held back because the current stage is incomplete.
    bool gated = false;
    std::optional<Stage> wanted;
    std::vector<ArtifactKind> unmet;
    bool ambiguous = false;
};

StageResolution determine_stage(const ParsedIntent& intent, Stage current, const ProjectState& state,
                                const EngineConfig& config);
/// Convenience overload using the keyword table.
StageResolution determine_stage(const std::string& request, Stage current, const ProjectState& state,
                                const EngineConfig& config);

/// Kinds of the completion criteria for `stage` without a canonical block.
std::vector<ArtifactKind> unmet_completion(const ProjectState& state, const EngineConfig& config, Stage stage);

// --- task specs -------------------------------------------------------------------

struct SpecRequest {
    ArtifactKind kind = ArtifactKind::StoryConcept;
    Stage stage = Stage::Planning;
    std::string instruction;
    std::optional<Selection> selection;
    std::vector<std::string> uploads;
    bool refinement = false;
    std::map<std::string, std::string> slots;
};

/// First unmet hard dependency group of `kind`; empty when satisfied.
std::vector<ArtifactKind> missing_dependency(ArtifactKind kind, const ProjectState& state,
                                             const EngineConfig& config);

/// Throws missing-dependency (details: kind names of the unmet group) when a
/// hard prerequisite is absent. Draws the task id from state.ids.
TaskSpec build_task_spec(const SpecRequest& request, ProjectState& state, const EngineConfig& config);

/// build_task_spec plus fan-out: one CharacterSheet spec per roster character
/// (restricted to selected character entries), one Styleframe or
/// StoryboardSequence spec per selected scene entry.
std::vector<TaskSpec> build_task_specs(const SpecRequest& request, ProjectState& state, const EngineConfig& config);

PublicationIntent derive_intent(const SpecRequest& request, const ProjectState& state);

/// Character names from the canonical CharacterConcept and every CharacterSheet.
std::vector<std::string> character_roster(const ProjectState& state);

// --- validation / publication ----------------------------------------------------

/// Rule-based format, spec and consistency checks, plus the judged check when
/// `judge` is set. A failing judge leaves the rule-based verdict and adds a
/// degraded-mode warning.
ValidationReport validate_result(const std::vector<Element>& elements, const TaskSpec& spec,
                                 const ProjectState& state, const AssetStore* assets,
                                 const std::shared_ptr<TextProvider>& judge = nullptr,
                                 const RequestControl& control = {});

struct PublishOutcome {
    std::string block_id;
    /// "root", "child" or "version".
    std::string effect;
    int version_index = 0;
    std::optional<std::string> parent_id;
    /// Other blocks changed by this publication (scene list styleframe slot).
    std::vector<std::string> updated_blocks;
};

/// Atomic: on any error `state` is unchanged.
PublishOutcome publish_result(ProjectState& state, const AgentResult& result, const TaskSpec& spec,
                              const EngineConfig& config, const AssetStore* assets, Timestamp now);

/// The structural effect publish_result would have; a pure function of the
/// progress record and intent.
std::string publication_effect(const PublicationIntent& intent, ArtifactKind kind, const ProgressRecord& progress);

struct Suggestion {
    std::string text;
    std::optional<Stage> next_stage;
    std::vector<ArtifactKind> kinds;
};

Suggestion suggest_next(const ProjectState& state, Stage current, const EngineConfig& config);

// --- the agent ---------------------------------------------------------------------

/// Per-request plumbing handed to handle_turn by the session.
struct TurnIO {
    std::function<void(EventKind, AgentRole, json)> emit;
    RequestControl control;
    const AssetStore* assets = nullptr;
    std::function<Timestamp()> now;
};

struct RevisionOutcome {
    TaskSpec spec;
    std::optional<AgentResult> result;
    ValidationReport last_report;
    int rounds = 0;
    bool approved() const noexcept { return result.has_value(); }
};

class CoreAgent {
public:
    CoreAgent(EngineConfig config, PromptSet prompts, Providers providers);

    const EngineConfig& config() const noexcept { return config_; }
    const PromptSet& prompts() const noexcept { return prompts_; }
    const Providers& providers() const noexcept { return providers_; }

    ParsedIntent parse_intent(const std::string& message, Stage current, const RequestControl& control) const;

    /// One Decision per turn. May draw task ids from ws.project.ids.
    Decision interpret_request(const UserTurn& turn, Workspace& ws, const RequestControl& control = {}) const;

    /// Runs specs through execute -> validate -> revise until approved or
    /// max_revision_rounds is spent. Faults propagate.
    std::vector<RevisionOutcome> run_revisions(const std::vector<TaskSpec>& specs, Workspace& ws, TurnIO& io) const;
    RevisionOutcome revision_loop(const TaskSpec& spec, Workspace& ws, TurnIO& io) const;

    /// Full pipeline for one user turn; mutates `ws` and emits events.
    void handle_turn(Workspace& ws, const UserTurn& turn, TurnIO& io) const;

    /// Records the brief and emits the opening chat for a new project.
    void start_project(Workspace& ws, const std::string& brief, TurnIO& io) const;

private:
    AgentEnvironment environment(const TurnIO& io) const;
    void execute(const Decision& d, Workspace& ws, const UserTurn& turn, TurnIO& io) const;
    void delegate(const Delegate& d, Workspace& ws, TurnIO& io) const;
    void change_stage(Workspace& ws, Stage to, const std::string& reason, const std::string& cause,
                      TurnIO& io) const;
    void direct_turn(Workspace& ws, const UserTurn& turn, TurnIO& io) const;
    void core_reply(Workspace& ws, const std::string& text, TurnIO& io) const;
    std::string chat_with_provider(Workspace& ws, const UserTurn& turn, TurnIO& io) const;
    void remember(Workspace& ws, AgentRole role, EntryKind kind, const std::string& text, Timestamp now) const;

    EngineConfig config_;
    PromptSet prompts_;
    Providers providers_;
    std::unique_ptr<IntentParser> parser_;
};

} // namespace preprod
