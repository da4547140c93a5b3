#include "preprod/prompts.hpp"

#include <fstream>
#include <iterator>

#include "preprod/error.hpp"
#include "preprod/schema.hpp"

namespace preprod {

namespace fs = std::filesystem;

namespace {

std::string replace_all(std::string text, std::string_view slot, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(slot, pos)) != std::string::npos) {
        text.replace(pos, slot.size(), value);
        pos += value.size();
    }
    return text;
}

std::string schema_hint(ArtifactKind kind) {
    const auto& schema = element_schema(kind);
    std::string out;
    for (const auto& r : schema.requirements) {
        out += "- \"" + r.element_kind + "\" (";
        out += r.content_type == ContentType::Image ? "give \"image_prompt\"" : "give \"text\"";
        out += ", count " + std::to_string(r.min_count);
        out += r.max_count ? (r.max_count == r.min_count ? "" : ".." + std::to_string(*r.max_count)) : "+";
        out += ")";
        if (!r.attributes.empty()) {
            out += " attributes:";
            for (const auto& a : r.attributes) out += " \"" + a + "\"";
        }
        out += "\n";
    }
    return out;
}

std::string default_tool_template(ArtifactKind kind) {
    return "Produce a " + display_name(kind) +
           ".\n\nTask:\n{task}\n\nContext:\n{context}\n\nPrior-stage input:\n{prior_stage_input}\n\n"
           "Answer with a single JSON object {\"elements\": [...]}; each element has \"kind\", "
           "\"text\" or \"image_prompt\", and \"attributes\" (string map). Required elements:\n" +
           schema_hint(kind);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::MissingPromptFile, "missing prompt file " + path.string(), {path.string()});
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
}

} // namespace

std::string tool_name(ArtifactKind kind) { return "make_" + std::string(to_string(kind)); }

PromptSet PromptSet::defaults() {
    PromptSet p;
    p.base =
        "You are the Core Agent, the project manager of an animation pre-production team. "
        "You talk with the creator, decide whether to answer yourself or hand work to a specialist "
        "(Ideation, Scripting, Design, Art), package the context each specialist needs, review what "
        "comes back for format, fit to the task and consistency with earlier stages, and publish "
        "approved work to the stage boards. Ask before switching stages or launching several tasks. "
        "Specialists never talk to each other; everything passes through you.";

    p.stage[Stage::Planning] =
        "Responsibilities: capture the project brief (format, length, audience, tone).\n"
        "Tasks: record the brief; propose the first ideation tasks.\n"
        "Delegation: none; planning is yours alone.\n"
        "Validation: the brief states what is being made.";
    p.stage[Stage::Ideation] =
        "Responsibilities: widen the space of possibilities.\n"
        "Tasks: loglines, story concepts, world concepts, style descriptions, character concepts.\n"
        "Delegation: Ideation Agent; ask for several options per request.\n"
        "Validation: options are distinct and respect the brief.";
    p.stage[Stage::Scripting] =
        "Responsibilities: converge on a coherent narrative.\n"
        "Tasks: three act structure, story outline, scene list, script.\n"
        "Delegation: Scripting Agent with the chosen concept and characters.\n"
        "Validation: structure follows the outline; scenes only use known characters.";
    p.stage[Stage::Design] =
        "Responsibilities: turn concepts into concrete visual designs.\n"
        "Tasks: character sheets, environment designs, hero images.\n"
        "Delegation: Design Agent (sheets, environments), Art Agent (hero images).\n"
        "Validation: designs match character concepts and the style description.";
    p.stage[Stage::Storyboard] =
        "Responsibilities: keep visuals and narrative consistent shot by shot.\n"
        "Tasks: styleframes per scene, storyboard sequences.\n"
        "Delegation: Art Agent with the scene list, designs and style description.\n"
        "Validation: every panel belongs to an existing scene and uses known characters.";

    p.role[AgentRole::Ideation] =
        "You are the Ideation Agent. Generate several clearly different options for every request; "
        "favour range over polish. You only produce ideation artifacts.";
    p.role[AgentRole::Scripting] =
        "You are the Scripting Agent. Turn chosen ideas into ordered, consistent narrative structure: "
        "act structures, outlines, scene lists and scripts. Keep every scene traceable to the outline.";
    p.role[AgentRole::Design] =
        "You are the Design Agent. Produce concrete visual designs for characters and environments "
        "that follow the established concepts and style.";
    p.role[AgentRole::Art] =
        "You are the Art Agent. Produce finished images: hero images, styleframes and storyboard panels, "
        "composed to match the script and the approved designs.";

    for (ArtifactKind k : kAllKinds) p.tool[k] = default_tool_template(k);
    return p;
}

PromptSet PromptSet::load(const fs::path& dir) {
    PromptSet p;
    p.base = read_file(dir / "base.txt");
    for (Stage s : kAllStages) p.stage[s] = read_file(dir / ("stage-" + std::string(to_string(s)) + ".txt"));
    for (AgentRole r : kSpecialistRoles) p.role[r] = read_file(dir / ("role-" + std::string(to_string(r)) + ".txt"));
    for (ArtifactKind k : kAllKinds) p.tool[k] = read_file(dir / ("tool-" + tool_name(k) + ".txt"));
    return p;
}

void PromptSet::save(const fs::path& dir) const {
    std::error_code ec;
    fs::create_directories(dir, ec);
    write_file(dir / "base.txt", base);
    for (const auto& [s, text] : stage) write_file(dir / ("stage-" + std::string(to_string(s)) + ".txt"), text);
    for (const auto& [r, text] : role) write_file(dir / ("role-" + std::string(to_string(r)) + ".txt"), text);
    for (const auto& [k, text] : tool) write_file(dir / ("tool-" + tool_name(k) + ".txt"), text);
}

std::string render_context(const std::vector<ContextItem>& items) {
    if (items.empty()) return "(none)";
    std::string out;
    for (const auto& item : items) {
        if (!out.empty()) out += "\n";
        if (item.content_type == ContentType::Image) {
            out += "- " + item.label + " [image]: " + item.content;
        } else {
            out += "- " + item.label + ": " + replace_all(item.content, "\n", "\n  ");
        }
    }
    return out;
}

std::string assemble_prompt(AgentRole role, Stage stage, const TaskSpec& spec, const PromptSet& prompts) {
    const auto role_it = prompts.role.find(role);
    if (role_it == prompts.role.end()) {
        throw Error(Errc::MissingPromptFile, "no prompt for role " + std::string(to_string(role)),
                    {"role-" + std::string(to_string(role)) + ".txt"});
    }
    const auto stage_it = prompts.stage.find(stage);
    if (stage_it == prompts.stage.end()) {
        throw Error(Errc::MissingPromptFile, "no prompt for stage " + std::string(to_string(stage)),
                    {"stage-" + std::string(to_string(stage)) + ".txt"});
    }

    std::string out = "### ROLE\n" + role_it->second + "\n\n### STAGE: " + display_name(stage) + "\n" +
                      stage_it->second + "\n\n";

    if (!spec.task_kind) {
        out += "### TASK\n" + spec.instruction + "\n\n### CONTEXT\n" + render_context(spec.context_payload) + "\n";
        return out;
    }

    const auto tool_it = prompts.tool.find(*spec.task_kind);
    if (tool_it == prompts.tool.end()) {
        throw Error(Errc::MissingPromptFile, "no template for " + tool_name(*spec.task_kind),
                    {"tool-" + tool_name(*spec.task_kind) + ".txt"});
    }
    std::vector<ContextItem> prior;
    std::vector<ContextItem> other;
    for (const auto& item : spec.context_payload) {
        (item.source == "prior-stage" ? prior : other).push_back(item);
    }
    // Fill {task} last so instruction text cannot inject slot markers.
    std::string body = tool_it->second;
    body = replace_all(std::move(body), "{context}", render_context(other));
    body = replace_all(std::move(body), "{prior_stage_input}", render_context(prior));
    body = replace_all(std::move(body), "{task}", spec.instruction);
    out += "### TOOL: " + tool_name(*spec.task_kind) + "\n" + body + "\n";
    return out;
}

std::string assemble_core_prompt(Stage stage, const std::string& request,
                                 const std::vector<ContextItem>& context, const PromptSet& prompts) {
    const auto stage_it = prompts.stage.find(stage);
    if (stage_it == prompts.stage.end()) {
        throw Error(Errc::MissingPromptFile, "no prompt for stage " + std::string(to_string(stage)));
    }
    return "### BASE\n" + prompts.base + "\n\n### STAGE: " + display_name(stage) + "\n" + stage_it->second +
           "\n\n### REQUEST\n" + request + "\n\n### CONTEXT\n" + render_context(context) + "\n";
}

} // namespace preprod
