#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "preprod/domain.hpp"

namespace preprod {

/// Editable prompt texts: the Core's base prompt, one prompt per stage, one
/// system prompt per specialized role and one template per tool. Tool
/// templates use the slots {task}, {context} and {prior_stage_input}.
///
/// On disk: base.txt, stage-<stage>.txt, role-<role>.txt, tool-make_<kind>.txt.
struct PromptSet {
    std::string base;
    std::map<Stage, std::string> stage;
    std::map<AgentRole, std::string> role;
    std::map<ArtifactKind, std::string> tool;

    /// The prompts shipped with the engine.
    static PromptSet defaults();
    /// Throws missing-prompt-file naming the first absent file.
    static PromptSet load(const std::filesystem::path& dir);
    void save(const std::filesystem::path& dir) const;

    bool operator==(const PromptSet&) const = default;
};

/// "make_scene_list" for SceneList.
std::string tool_name(ArtifactKind kind);

/// Renders context items as "- label: content" lines, images as
/// "- label [image]: ref", in payload order. "(none)" when empty.
std::string render_context(const std::vector<ContextItem>& items);

/// Builds the agent prompt. Section order is fixed:
///   ### ROLE, ### STAGE: <stage>, then either ### TOOL: make_<kind> (the tool
///   template with its slots filled: {task} = instruction, {context} = items
///   not sourced from prior stages, {prior_stage_input} = prior-stage items)
///   or, for direct chat, ### TASK and ### CONTEXT.
/// Pure function of its inputs. Throws missing-prompt-file when a needed
/// prompt is absent from the set.
std::string assemble_prompt(AgentRole role, Stage stage, const TaskSpec& spec, const PromptSet& prompts);

/// Core prompt: ### BASE, ### STAGE: <stage>, ### REQUEST, ### CONTEXT.
std::string assemble_core_prompt(Stage stage, const std::string& request,
                                 const std::vector<ContextItem>& context, const PromptSet& prompts);

} // namespace preprod
