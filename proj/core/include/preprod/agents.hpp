#pragma once

// Role-scoped executors. Each specialist owns one make_<kind> tool per
// artifact kind it produces; results go back to the Core, never to a board.

#include <exception>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "preprod/cancellation.hpp"
#include "preprod/domain.hpp"
#include "preprod/prompts.hpp"
#include "preprod/provider.hpp"

namespace preprod {

class AssetStore;

struct ToolDef {
    std::string name;
    AgentRole owning_role = AgentRole::Ideation;
    ArtifactKind output_kind = ArtifactKind::StoryConcept;
};

/// One tool per artifact kind, in kAllKinds order.
const std::vector<ToolDef>& tool_registry();
/// nullptr when `role` does not own the tool for `kind`.
const ToolDef* find_tool(AgentRole role, ArtifactKind kind);

struct AgentResult {
    std::string task_id;
    AgentRole role = AgentRole::Ideation;
    ArtifactKind kind = ArtifactKind::StoryConcept;
    std::vector<Element> elements;
    int rounds_used = 1;
    /// Text completions issued (1, or 2 after a malformed-output re-prompt).
    int provider_calls = 0;
    std::string raw_output;
};

struct AgentEnvironment {
    const PromptSet* prompts = nullptr;
    Providers providers;
    const AssetStore* assets = nullptr;
    RequestControl control;
    std::size_t parallel_limit = 4;
};

/// Parses the {"elements": [...]} contract. Tolerates surrounding prose or
/// code fences; anything else is malformed-output. Image elements carry their
/// image prompt in `content` until generated.
std::vector<Element> parse_agent_output(std::string_view text);

/// Runs the owning tool for spec.task_kind: one text completion (plus one
/// re-prompt on malformed output), then one image generation per image
/// element using the context's image items as references.
/// Throws no-such-tool, provider-failure, malformed-output, cancelled.
AgentResult execute_task(const TaskSpec& spec, const AgentEnvironment& env);

struct SlotResult {
    std::optional<AgentResult> result;
    std::exception_ptr error;

    bool ok() const noexcept { return result.has_value(); }
    /// Error code of a failed slot; nullopt for success or non-engine exceptions.
    std::optional<Errc> error_code() const;
};

/// Runs specs on up to env.parallel_limit workers. Slot i answers specs[i];
/// a failing slot does not affect its siblings. Once the request is
/// cancelled, unstarted slots fail with cancelled. Throws
/// all-slots-cancelled when every slot ended cancelled.
std::vector<SlotResult> parallel_execute(const std::vector<TaskSpec>& specs, const AgentEnvironment& env);

// --- direct channel ---------------------------------------------------------

struct DirectChannel {
    AgentRole role = AgentRole::Scripting;
    /// Project context forwarded when the channel opened.
    std::vector<ContextItem> context;

    bool operator==(const DirectChannel&) const = default;
};

/// Throws role-invalid for Core, channel-already-open when `current` is set.
DirectChannel open_direct_channel(AgentRole role, std::vector<ContextItem> context,
                                  const std::optional<DirectChannel>& current);

struct ToolCallRequest {
    ArtifactKind kind = ArtifactKind::StoryConcept;
    std::string instruction;
};

struct DirectReply {
    std::string text;
    std::optional<ToolCallRequest> tool_call;
};

/// One conversational turn with the channel's agent. The agent answers
/// plain text, or {"message": ..., "tool_call": {"tool": "make_x",
/// "instruction": ...}} to request a tool run that the Core then validates
/// and publishes. A tool outside the role's registry is no-such-tool.
DirectReply chat_direct(const DirectChannel& channel, Stage stage, const std::string& text,
                        const AgentEnvironment& env);

void to_json(json& j, const DirectChannel& c);
void from_json(const json& j, DirectChannel& c);

} // namespace preprod
