#include <algorithm>
#include <cctype>

#include "preprod/assets.hpp"
#include "preprod/board_store.hpp"
#include "preprod/core_agent.hpp"
#include "preprod/error.hpp"
#include "preprod/schema.hpp"

namespace preprod {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string block_title(const Block& b) {
    return display_name(b.kind) + " " + b.block_id + " v" + std::to_string(b.active_version);
}

void push_artifact(std::vector<ContextItem>& items, const Block& b, const std::string& label,
                   const std::string& source) {
    std::vector<Element> text;
    for (const auto& e : b.active().elements) {
        if (e.content_type == ContentType::Image) {
            const auto name = e.attributes.contains("name") ? " " + e.attributes.at("name") : std::string{};
            items.push_back({label + name + " image " + e.element_id, ContentType::Image, e.content, source});
        } else {
            text.push_back(e);
        }
    }
    if (!text.empty()) items.push_back({label, ContentType::Text, render_elements(text), source});
}

const Block* canonical_block(const ProjectState& state, ArtifactKind kind) {
    const auto id = state.progress.canonical_block(kind);
    return id ? state.boards.find(*id) : nullptr;
}

std::vector<const Block*> blocks_of(const ProjectState& state, ArtifactKind kind) {
    std::vector<const Block*> out;
    const auto& board = state.boards.board(board_of(kind));
    for (const auto& id : board.order) {
        const auto& b = board.blocks.at(id);
        if (b.kind == kind) out.push_back(&b);
    }
    return out;
}

std::vector<std::string> concept_roster(const ProjectState& state) {
    std::vector<std::string> out;
    if (const auto* b = canonical_block(state, ArtifactKind::CharacterConcept)) {
        for (const auto& e : b->active().elements) {
            if (e.kind != "character-entry") continue;
            if (const auto it = e.attributes.find("name"); it != e.attributes.end() && !it->second.empty()) {
                out.push_back(it->second);
            }
        }
    }
    return out;
}

bool in_roster(const std::vector<std::string>& roster, const std::string& name) {
    const auto n = lower(trim(name));
    return std::any_of(roster.begin(), roster.end(), [&](const std::string& r) { return lower(r) == n; });
}

std::vector<std::string> split_names(const std::string& text) {
    std::string s = text;
    for (std::size_t pos; (pos = s.find(" and ")) != std::string::npos;) s.replace(pos, 5, ",");
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto end = s.find_first_of(",;", start);
        if (end == std::string::npos) end = s.size();
        auto name = trim(std::string_view(s).substr(start, end - start));
        if (!name.empty() && lower(name) != "none") out.push_back(std::move(name));
        start = end + 1;
    }
    return out;
}

std::vector<std::string> scene_numbers(const ProjectState& state) {
    std::vector<std::string> out;
    if (const auto* b = canonical_block(state, ArtifactKind::SceneList)) {
        for (const auto& e : b->active().elements) {
            if (e.kind != "scene-entry") continue;
            if (const auto it = e.attributes.find("scene number"); it != e.attributes.end()) {
                out.push_back(trim(it->second));
            }
        }
    }
    return out;
}

} // namespace

std::string_view decision_name(const Decision& d) noexcept {
    switch (d.index()) {
    case 0: return "respond-directly";
    case 1: return "delegate";
    case 2: return "switch-stage";
    case 3: return "open-direct-channel";
    default: return "ask-approval";
    }
}

json workspace_to_json(const Workspace& ws) {
    json pending = nullptr;
    if (ws.pending) {
        pending = json{{"switch_to", ws.pending->switch_to ? json(*ws.pending->switch_to) : json(nullptr)},
                       {"specs", ws.pending->specs},
                       {"text", ws.pending->text}};
    }
    json contexts = json::object();
    for (const auto& [role, window] : ws.contexts) contexts[std::string(to_string(role))] = window;
    return json{{"project", project_to_json(ws.project)},
                {"pending", pending},
                {"contexts", contexts},
                {"channel", ws.channel ? json(*ws.channel) : json(nullptr)}};
}

std::vector<std::string> character_roster(const ProjectState& state) {
    auto out = concept_roster(state);
    for (const auto* b : blocks_of(state, ArtifactKind::CharacterSheet)) {
        for (const auto& e : b->active().elements) {
            const auto it = e.attributes.find("name");
            if (it != e.attributes.end() && !it->second.empty() && !in_roster(out, it->second)) {
                out.push_back(it->second);
            }
        }
    }
    return out;
}

std::vector<ArtifactKind> missing_dependency(ArtifactKind kind, const ProjectState& state,
                                             const EngineConfig& config) {
    const auto it = config.dependencies.find(kind);
    if (it == config.dependencies.end() || it->second.soft) return {};
    for (const auto& group : it->second.groups) {
        const bool met = std::any_of(group.begin(), group.end(),
                                     [&](ArtifactKind k) { return state.progress.canonical_block(k).has_value(); });
        if (!met) return group;
    }
    return {};
}

PublicationIntent derive_intent(const SpecRequest& req, const ProjectState& state) {
    if (req.selection) {
        const auto* b = state.boards.find(req.selection->block_id);
        if (b != nullptr && b->kind == req.kind) return PublicationIntent::child_of(b->block_id);
    } else if (req.refinement && state.last_published) {
        const auto* b = state.boards.find(*state.last_published);
        if (b != nullptr && b->kind == req.kind) return PublicationIntent::child_of(b->block_id);
    }
    if (state.progress.canonical_block(req.kind) && !is_multi_instance(req.kind)) {
        return PublicationIntent::overwrite(req.kind);
    }
    return PublicationIntent::new_root();
}

TaskSpec build_task_spec(const SpecRequest& req, ProjectState& state, const EngineConfig& config) {
    if (const auto missing = missing_dependency(req.kind, state, config); !missing.empty()) {
        std::vector<std::string> names;
        std::string text;
        for (ArtifactKind k : missing) {
            names.emplace_back(to_string(k));
            text += (text.empty() ? "" : " or ") + display_name(k);
        }
        throw Error(Errc::MissingDependency, display_name(req.kind) + " needs a " + text + " first", names);
    }

    TaskSpec spec;
    spec.task_id = state.ids.next("task");
    spec.target_role = owner_of(req.kind);
    spec.task_kind = req.kind;
    spec.instruction = req.instruction;
    spec.stage = req.stage;
    spec.slots = req.slots;

    auto& ctx = spec.context_payload;
    if (!state.progress.project_brief.empty()) {
        ctx.push_back({"Project brief", ContentType::Text, state.progress.project_brief, "brief"});
    }
    if (const auto it = config.context_kinds.find(req.kind); it != config.context_kinds.end()) {
        for (ArtifactKind k : it->second) {
            if (is_multi_instance(k)) {
                for (const auto* b : blocks_of(state, k)) push_artifact(ctx, *b, block_title(*b), "prior-stage");
            } else if (const auto* b = canonical_block(state, k)) {
                push_artifact(ctx, *b, block_title(*b), "prior-stage");
            }
        }
    }
    if (req.selection) {
        auto items = state.boards.resolve_selection(*req.selection);
        ctx.insert(ctx.end(), items.begin(), items.end());
    } else if (state.last_published) {
        if (const auto* b = state.boards.find(*state.last_published)) {
            push_artifact(ctx, *b, "Most recent result: " + block_title(*b), "recent");
        }
    }
    for (const auto& ref : req.uploads) {
        ctx.push_back({"Uploaded reference " + ref.substr(ref.rfind('/') + 1), ContentType::Image, ref, "upload"});
    }
    spec.publication_intent = derive_intent(req, state);
    return spec;
}

std::vector<TaskSpec> build_task_specs(const SpecRequest& req, ProjectState& state, const EngineConfig& config) {
    std::vector<SpecRequest> parts;
    const Block* selected = req.selection ? state.boards.find(req.selection->block_id) : nullptr;

    if (req.kind == ArtifactKind::CharacterSheet && !req.slots.contains("name")) {
        auto names = concept_roster(state);
        if (selected != nullptr && selected->kind == ArtifactKind::CharacterConcept &&
            !req.selection->element_ids.empty()) {
            const auto& version = selected->versions.at(static_cast<std::size_t>(req.selection->version_index));
            names.clear();
            for (const auto& e : version.elements) {
                const bool picked = std::find(req.selection->element_ids.begin(), req.selection->element_ids.end(),
                                              e.element_id) != req.selection->element_ids.end();
                if (picked && e.attributes.contains("name")) names.push_back(e.attributes.at("name"));
            }
        }
        std::vector<std::string> mentioned;
        const auto text = lower(req.instruction);
        for (const auto& n : names) {
            if (text.find(lower(n)) != std::string::npos) mentioned.push_back(n);
        }
        if (!mentioned.empty()) names = mentioned;
        for (const auto& n : names) {
            SpecRequest r = req;
            r.slots["name"] = n;
            r.instruction += "\nCharacter: " + n;
            parts.push_back(std::move(r));
        }
    } else if ((req.kind == ArtifactKind::Styleframe || req.kind == ArtifactKind::StoryboardSequence) &&
               selected != nullptr && selected->kind == ArtifactKind::SceneList &&
               !req.selection->element_ids.empty() && !req.slots.contains("scene number")) {
        const auto& version = selected->versions.at(static_cast<std::size_t>(req.selection->version_index));
        for (const auto& id : req.selection->element_ids) {
            for (const auto& e : version.elements) {
                if (e.element_id != id || e.kind != "scene-entry" || !e.attributes.contains("scene number")) continue;
                SpecRequest r = req;
                r.slots["scene number"] = trim(e.attributes.at("scene number"));
                r.instruction += "\nScene: " + r.slots["scene number"];
                parts.push_back(std::move(r));
            }
        }
    }
    if (parts.empty()) parts.push_back(req);

    std::vector<TaskSpec> specs;
    for (const auto& p : parts) specs.push_back(build_task_spec(p, state, config));
    return specs;
}

ValidationReport validate_result(const std::vector<Element>& elements, const TaskSpec& spec,
                                 const ProjectState& state, const AssetStore* assets,
                                 const std::shared_ptr<TextProvider>& judge, const RequestControl& control) {
    ValidationReport r;
    if (!spec.task_kind) {
        r.format_ok = false;
        r.messages.push_back({"format", Severity::Error, "task has no artifact kind"});
        return r;
    }
    const ArtifactKind kind = *spec.task_kind;
    const auto& schema = element_schema(kind);

    for (auto& v : schema_violations(kind, elements)) {
        r.format_ok = false;
        r.messages.push_back({"format", Severity::Error, std::move(v)});
    }
    for (const auto& e : elements) {
        if (e.content_type == ContentType::Image && assets != nullptr && !assets->resolves(e.content)) {
            r.format_ok = false;
            r.messages.push_back({"format", Severity::Error,
                                  "element " + e.element_id + " image '" + e.content + "' does not resolve"});
        }
    }

    // Spec compliance: structured slots.
    if (const auto it = spec.slots.find("count"); it != spec.slots.end()) {
        const auto want = static_cast<std::size_t>(std::max(0, std::atoi(it->second.c_str())));
        const auto got = static_cast<std::size_t>(std::count_if(
            elements.begin(), elements.end(), [&](const Element& e) { return e.kind == schema.primary_element; }));
        if (got < want) {
            r.spec_ok = false;
            r.messages.push_back({"spec", Severity::Error,
                                  "expected " + std::to_string(want) + " " + schema.primary_element +
                                      " elements, got " + std::to_string(got)});
        }
    }
    if (const auto it = spec.slots.find("name"); it != spec.slots.end()) {
        const auto name = lower(it->second);
        const bool covered = std::any_of(elements.begin(), elements.end(), [&](const Element& e) {
            const auto a = e.attributes.find("name");
            return (a != e.attributes.end() && lower(a->second) == name) ||
                   (e.content_type == ContentType::Text && lower(e.content).find(name) != std::string::npos);
        });
        if (!covered) {
            r.spec_ok = false;
            r.messages.push_back({"spec", Severity::Error, "result does not cover character '" + it->second + "'"});
        }
    }
    if (const auto it = spec.slots.find("scene number"); it != spec.slots.end()) {
        bool any = false;
        for (const auto& e : elements) {
            const auto a = e.attributes.find("scene number");
            if (a == e.attributes.end()) continue;
            any = true;
            if (trim(a->second) != it->second) {
                r.spec_ok = false;
                r.messages.push_back({"spec", Severity::Error,
                                      "element " + e.element_id + " belongs to scene " + a->second +
                                          ", expected scene " + it->second});
            }
        }
        if (!any) {
            r.spec_ok = false;
            r.messages.push_back({"spec", Severity::Error, "no element names scene " + it->second});
        }
    }

    // Consistency: referenced characters and scenes must exist upstream.
    if (kind != ArtifactKind::CharacterConcept) {
        const auto roster = character_roster(state);
        for (const auto& e : elements) {
            const auto a = e.attributes.find("characters");
            if (a == e.attributes.end()) continue;
            for (const auto& name : split_names(a->second)) {
                if (!in_roster(roster, name)) {
                    r.consistency_ok = false;
                    r.messages.push_back({"consistency", Severity::Error,
                                          "character '" + name + "' in element " + e.element_id +
                                              " is not in the character roster"});
                }
            }
        }
    }
    if (kind == ArtifactKind::CharacterSheet) {
        const auto roster = concept_roster(state);
        for (const auto& e : elements) {
            const auto a = e.attributes.find("name");
            if (a == e.attributes.end() || roster.empty() || e.content_type != ContentType::Image) continue;
            if (!in_roster(roster, a->second)) {
                r.consistency_ok = false;
                r.messages.push_back({"consistency", Severity::Error,
                                      "character sheet for '" + a->second + "' has no character concept"});
            }
        }
    }
    if (kind == ArtifactKind::Styleframe || kind == ArtifactKind::StoryboardSequence) {
        const auto scenes = scene_numbers(state);
        for (const auto& e : elements) {
            const auto a = e.attributes.find("scene number");
            if (a == e.attributes.end() || scenes.empty()) continue;
            if (std::find(scenes.begin(), scenes.end(), trim(a->second)) == scenes.end()) {
                r.consistency_ok = false;
                r.messages.push_back({"consistency", Severity::Error,
                                      "element " + e.element_id + " refers to unknown scene " + a->second});
            }
        }
    }

    if (judge) {
        ProviderRequest req;
        req.role = AgentRole::Core;
        req.stage = spec.stage;
        req.task_kind = kind;
        req.purpose = "judge";
        req.instruction = spec.instruction;
        req.prompt = "Does this " + display_name(kind) + " fulfil the task and stay consistent with the project? "
                     "Reply PASS, or FAIL: <reason>.\n\nTask:\n" + spec.instruction + "\n\nResult:\n" +
                     render_elements(elements) + "\n";
        try {
            control.checkpoint("before-provider-call");
            const auto verdict = trim(judge->complete(req, control.cancel));
            control.checkpoint("after-provider-response");
            if (verdict.starts_with("PASS")) {
                r.messages.push_back({"spec", Severity::Info, "judged check passed"});
            } else if (verdict.starts_with("FAIL")) {
                r.spec_ok = false;
                auto reason = trim(std::string_view(verdict).substr(4));
                if (reason.starts_with(":")) reason = trim(std::string_view(reason).substr(1));
                r.messages.push_back({"spec", Severity::Error, "judged: " + reason});
            } else {
                r.messages.push_back({"spec", Severity::Warning, "judged check gave no verdict; rule-based result stands"});
            }
        } catch (const Error& e) {
            if (e.code() != Errc::ProviderFailure) throw;
            r.messages.push_back({"spec", Severity::Warning,
                                  std::string("judged checks skipped (degraded mode): ") + e.what()});
        }
    }
    return r;
}

std::string publication_effect(const PublicationIntent& intent, ArtifactKind kind, const ProgressRecord& progress) {
    switch (intent.type) {
    case PublicationIntent::Type::ChildOf: return "child";
    case PublicationIntent::Type::OverwriteArtifact:
        return progress.canonical_block(intent.kind.value_or(kind)) ? "version" : "root";
    case PublicationIntent::Type::NewRoot: break;
    }
    return "root";
}

PublishOutcome publish_result(ProjectState& state, const AgentResult& result, const TaskSpec& spec,
                              const EngineConfig& config, const AssetStore* assets, Timestamp now) {
    if (!spec.task_kind) throw Error(Errc::PreconditionViolation, "cannot publish a task without a kind");
    const ArtifactKind kind = *spec.task_kind;
    const Stage stage = board_of(kind);
    ProjectState next = state;
    PublishOutcome out;
    out.effect = publication_effect(spec.publication_intent, kind, next.progress);

    if (out.effect == "child") {
        const auto& b = next.boards.create_block(stage, kind, spec.publication_intent.parent_id, result.elements,
                                                 spec.task_id, now, assets);
        out.block_id = b.block_id;
        out.parent_id = b.parent_id;
        next.progress.canonical[stage][kind] = b.block_id;
    } else if (out.effect == "version") {
        out.block_id = *next.progress.canonical_block(kind);
        out.version_index = next.boards.add_version(out.block_id, result.elements, spec.task_id, now, assets);
        out.parent_id = next.boards.block(out.block_id).parent_id;
    } else {
        const auto& b = next.boards.create_block(stage, kind, std::nullopt, result.elements, spec.task_id, now, assets);
        out.block_id = b.block_id;
        next.progress.canonical[stage][kind] = b.block_id;
    }

    if (kind == ArtifactKind::Styleframe) {
        // Attach the styleframe to its scene entry through a new scene list version.
        std::string scene;
        for (const auto& e : result.elements) {
            if (e.content_type == ContentType::Image && e.attributes.contains("scene number")) {
                scene = trim(e.attributes.at("scene number"));
            }
        }
        const auto list_id = next.progress.canonical_block(ArtifactKind::SceneList);
        if (!scene.empty() && list_id) {
            auto elements = next.boards.block(*list_id).active().elements;
            bool attached = false;
            for (auto& e : elements) {
                if (e.kind == "scene-entry" && e.attributes.contains("scene number") &&
                    trim(e.attributes.at("scene number")) == scene) {
                    e.attributes["styleframe slot"] = out.block_id;
                    attached = true;
                }
            }
            if (attached) {
                next.boards.add_version(*list_id, std::move(elements), spec.task_id, now, assets);
                out.updated_blocks.push_back(*list_id);
            }
        }
    }

    next.last_published = out.block_id;
    refresh_stage_status(next, config);
    state = std::move(next);
    return out;
}

Suggestion suggest_next(const ProjectState& state, Stage current, const EngineConfig& config) {
    Suggestion s;
    if (state.progress.project_brief.empty()) {
        s.text = "Tell me about the project first: what you are making, how long it runs, who it is for and the tone.";
        s.next_stage = Stage::Planning;
        return s;
    }
    auto list = [](const std::vector<ArtifactKind>& kinds) {
        std::string out;
        for (std::size_t i = 0; i < kinds.size(); ++i) {
            if (i > 0) out += i + 1 == kinds.size() ? " and " : ", ";
            out += display_name(kinds[i]);
        }
        return out;
    };
    if (has_board(current)) {
        if (auto unmet = unmet_completion(state, config, current); !unmet.empty()) {
            s.text = "To wrap up " + display_name(current) + " we still need: " + list(unmet) + ".";
            s.next_stage = current;
            s.kinds = std::move(unmet);
            return s;
        }
    }
    std::vector<std::pair<Stage, std::vector<ArtifactKind>>> open;
    for (Stage st : kBoardStages) {
        if (st == current) continue;
        if (auto unmet = unmet_completion(state, config, st); !unmet.empty()) open.emplace_back(st, std::move(unmet));
    }
    if (open.empty()) {
        s.text = "Every stage has its core artifacts. Review the storyboard panels, or select any block to refine it.";
        return s;
    }
    if (open.size() > 2) open.resize(2);
    s.next_stage = open.front().first;
    std::string options;
    for (std::size_t i = 0; i < open.size(); ++i) {
        if (i > 0) options += " or ";
        options += display_name(open[i].first) + " (" + list(open[i].second) + ")";
        s.kinds.insert(s.kinds.end(), open[i].second.begin(), open[i].second.end());
    }
    s.text = current == Stage::Planning
                 ? "Brief recorded. Next we could start " + options + "."
                 : display_name(current) + " is complete. We could move to " + options + ".";
    return s;
}

} // namespace preprod
