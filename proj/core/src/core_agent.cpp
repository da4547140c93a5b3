#include "preprod/core_agent.hpp"

#include <algorithm>

#include "preprod/assets.hpp"
#include "preprod/board_store.hpp"
#include "preprod/error.hpp"

namespace preprod {

namespace {

std::string kind_list(const std::vector<ArtifactKind>& kinds) {
    std::string out;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        if (i > 0) out += i + 1 == kinds.size() ? " and " : ", ";
        out += display_name(kinds[i]);
    }
    return out;
}

std::string task_summary(const std::vector<TaskSpec>& specs) {
    std::string out;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (i > 0) out += i + 1 == specs.size() ? " and " : ", ";
        const auto& s = specs[i];
        out += "a " + display_name(*s.task_kind);
        if (const auto it = s.slots.find("name"); it != s.slots.end()) out += " for " + it->second;
        if (const auto it = s.slots.find("scene number"); it != s.slots.end()) out += " for scene " + it->second;
        out += " from the " + display_name(s.target_role);
    }
    return out;
}

json task_refs(const std::vector<TaskSpec>& specs) {
    json out = json::array();
    for (const auto& s : specs) {
        out.push_back({{"task_id", s.task_id},
                       {"role", s.target_role},
                       {"kind", s.task_kind ? json(*s.task_kind) : json(nullptr)},
                       {"stage", s.stage},
                       {"intent", s.publication_intent}});
    }
    return out;
}

std::string preview(const Block& b) {
    std::size_t images = 0;
    for (const auto& e : b.active().elements) {
        if (e.content_type == ContentType::Image) {
            ++images;
            continue;
        }
        auto text = e.content.substr(0, e.content.find('\n'));
        if (text.size() > 100) text = text.substr(0, 97) + "...";
        return text;
    }
    return std::to_string(images) + (images == 1 ? " image" : " images");
}

} // namespace

CoreAgent::CoreAgent(EngineConfig config, PromptSet prompts, Providers providers)
    : config_(std::move(config)), prompts_(std::move(prompts)), providers_(std::move(providers)) {
    if (config_.intent_parser == "provider" && providers_.text) {
        parser_ = std::make_unique<ProviderIntentParser>(providers_.text);
    } else {
        parser_ = std::make_unique<KeywordIntentParser>();
    }
}

ParsedIntent CoreAgent::parse_intent(const std::string& message, Stage current, const RequestControl& control) const {
    return parser_->parse(message, current, control);
}

AgentEnvironment CoreAgent::environment(const TurnIO& io) const {
    AgentEnvironment env;
    env.prompts = &prompts_;
    env.providers = providers_;
    env.assets = io.assets;
    env.control = io.control;
    env.parallel_limit = config_.parallel_limit;
    return env;
}

Decision CoreAgent::interpret_request(const UserTurn& turn, Workspace& ws, const RequestControl& control) const {
    auto& project = ws.project;
    const Stage current = project.current_stage;
    ParsedIntent intent = parse_intent(turn.text, current, control);

    if (ws.pending && intent.approve) {
        const auto& p = *ws.pending;
        if (p.specs.empty() && p.switch_to) return SwitchStage{*p.switch_to, "approved by the user", "approval"};
        return Delegate{p.specs, p.switch_to, p.switch_to ? "approval" : "", ""};
    }
    if (ws.pending && intent.reject) {
        return RespondDirectly{"Understood, I'll hold off. " + suggest_next(project, current, config_).text};
    }
    if (intent.open_channel) return OpenDirectChannel{*intent.open_channel};

    if (intent.kinds.empty() && intent.refinement) {
        const Block* base = nullptr;
        if (turn.selection) {
            base = project.boards.find(turn.selection->block_id);
        } else if (project.last_published) {
            base = project.boards.find(*project.last_published);
        }
        if (base != nullptr) intent.kinds.push_back(base->kind);
    }

    if (intent.kinds.empty()) {
        if (intent.explicit_stage) {
            if (*intent.explicit_stage == current) {
                return RespondDirectly{"We are already in " + display_name(current) + ". " +
                                       suggest_next(project, current, config_).text};
            }
            return SwitchStage{*intent.explicit_stage, "requested by the user", "explicit-request"};
        }
        if (intent.approve) {
            return RespondDirectly{"There is nothing waiting for approval. " +
                                   suggest_next(project, current, config_).text};
        }
        return RespondDirectly{{}, true};
    }

    const auto res = determine_stage(intent, current, project, config_);
    const Stage exec_stage = res.gated ? *res.wanted : res.stage;

    // One board per decision: kinds belonging elsewhere are mentioned, not run.
    std::vector<ArtifactKind> kinds;
    std::vector<ArtifactKind> dropped;
    for (ArtifactKind k : intent.kinds) {
        (board_of(k) == board_of(intent.kinds.front()) ? kinds : dropped).push_back(k);
    }

    std::string note;
    if (intent.ambiguous) note += intent.ambiguity + " ";
    if (!dropped.empty()) note += "I'll start with the " + kind_list(kinds) + "; ask again for the " + kind_list(dropped) + ". ";

    std::vector<TaskSpec> specs;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        SpecRequest req;
        req.kind = kinds[i];
        req.stage = exec_stage;
        req.instruction = turn.text;
        req.selection = turn.selection;
        req.uploads = turn.uploads;
        req.refinement = intent.refinement;
        if (i == 0 && intent.count) req.slots["count"] = std::to_string(*intent.count);
        try {
            auto built = build_task_specs(req, project, config_);
            specs.insert(specs.end(), built.begin(), built.end());
        } catch (const Error& e) {
            if (e.code() != Errc::MissingDependency) throw;
            // Walk the dependency table down to something buildable.
            ArtifactKind want = kinds[i];
            ArtifactKind prereq = *parse_kind(e.details().front());
            for (int depth = 0; depth < 8; ++depth) {
                const auto deeper = missing_dependency(prereq, project, config_);
                if (deeper.empty()) break;
                want = prereq;
                prereq = deeper.front();
            }
            SpecRequest pre;
            pre.kind = prereq;
            pre.stage = board_of(prereq);
            pre.instruction = "Produce a " + display_name(prereq) + " so we can make the " + display_name(want) +
                              ".\nCreator request: " + turn.text;
            pre.uploads = turn.uploads;
            PendingProposal p;
            p.specs = build_task_specs(pre, project, config_);
            if (pre.stage != current) p.switch_to = pre.stage;
            p.text = note + std::string(e.what()).substr(std::string(to_string(e.code())).size() + 2) +
                     ". Shall I ask the " + display_name(owner_of(prereq)) + " for a " + display_name(prereq) +
                     (p.switch_to ? " in " + display_name(*p.switch_to) : std::string{}) + "?";
            return AskApproval{std::move(p)};
        }
    }

    const std::optional<Stage> switch_to = exec_stage != current ? std::optional(exec_stage) : std::nullopt;
    const bool needs_approval = (switch_to && !res.explicit_request) || specs.size() > 1 || res.gated;
    if (!needs_approval) {
        return Delegate{std::move(specs), switch_to, switch_to ? "explicit-request" : "", note};
    }

    PendingProposal p;
    p.switch_to = switch_to;
    p.specs = std::move(specs);
    if (res.gated) {
        p.text = note + display_name(current) + " is not complete yet (missing " + kind_list(res.unmet) +
                 "). Shall I move to " + display_name(*res.wanted) + " anyway and ask for " +
                 task_summary(p.specs) + "?";
    } else if (switch_to && !res.explicit_request) {
        p.text = note + "That belongs to " + display_name(*switch_to) + ". Shall I move to " +
                 display_name(*switch_to) + " and ask for " + task_summary(p.specs) + "?";
    } else {
        p.text = note + "I would hand out " + std::to_string(p.specs.size()) + " tasks: " + task_summary(p.specs) +
                 ". Shall I go ahead?";
    }
    return AskApproval{std::move(p)};
}

void CoreAgent::remember(Workspace& ws, AgentRole role, EntryKind kind, const std::string& text, Timestamp now) const {
    auto [it, inserted] = ws.contexts.try_emplace(role);
    if (inserted) {
        it->second.owner = role;
        it->second.budget = config_.context_budget;
    }
    it->second.append({kind, text, now});
}

void CoreAgent::core_reply(Workspace& ws, const std::string& text, TurnIO& io) const {
    const auto now = io.now();
    io.emit(EventKind::ChatMessage, AgentRole::Core, json{{"speaker", "core"}, {"text", text}});
    remember(ws, AgentRole::Core, EntryKind::Message, text, now);
    ws.project.memory.record("core", text, now);
}

void CoreAgent::change_stage(Workspace& ws, Stage to, const std::string& reason, const std::string& cause,
                             TurnIO& io) const {
    const Stage from = ws.project.current_stage;
    ws.project.current_stage = to;
    refresh_stage_status(ws.project, config_);
    io.emit(EventKind::StageChanged, AgentRole::Core,
            json{{"from", from}, {"to", to}, {"reason", reason}, {"cause", cause}, {"progress", ws.project.progress}});
    remember(ws, AgentRole::Core, EntryKind::Message,
             "stage " + std::string(to_string(from)) + " -> " + std::string(to_string(to)), io.now());
}

std::string CoreAgent::chat_with_provider(Workspace& ws, const UserTurn& turn, TurnIO& io) const {
    const auto& project = ws.project;
    std::vector<ContextItem> ctx;
    if (!project.progress.project_brief.empty()) {
        ctx.push_back({"Project brief", ContentType::Text, project.progress.project_brief, "brief"});
    }
    if (project.memory.store.size() > 0) {
        IdentityExpander expander;
        TokenHashEmbedder embedder(config_.memory.embedding_dim);
        for (const auto& hit : retrieve(project.memory.store, turn.text, std::max<std::size_t>(config_.memory.top_k, 1),
                                        expander, embedder)) {
            ctx.push_back({"Earlier conversation " + hit.chunk.chunk_id, ContentType::Text, hit.chunk.summary, "recent"});
        }
    }
    if (turn.selection) {
        auto items = project.boards.resolve_selection(*turn.selection);
        ctx.insert(ctx.end(), items.begin(), items.end());
    } else if (project.last_published) {
        if (const auto* b = project.boards.find(*project.last_published)) {
            ctx.push_back({"Most recent result: " + display_name(b->kind) + " " + b->block_id, ContentType::Text,
                           render_elements(b->active().elements), "recent"});
        }
    }
    ProviderRequest req;
    req.role = AgentRole::Core;
    req.stage = project.current_stage;
    req.purpose = "chat";
    req.instruction = turn.text;
    req.prompt = assemble_core_prompt(project.current_stage, turn.text, ctx, prompts_);
    io.control.checkpoint("before-provider-call");
    auto reply = providers_.text->complete(req, io.control.cancel);
    io.control.checkpoint("after-provider-response");
    return reply;
}

std::vector<RevisionOutcome> CoreAgent::run_revisions(const std::vector<TaskSpec>& specs, Workspace& ws,
                                                      TurnIO& io) const {
    const auto env = environment(io);
    std::vector<RevisionOutcome> outcomes(specs.size());
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        outcomes[i].spec = specs[i];
        pending.push_back(i);
    }

    for (int round = 1; round <= config_.max_revision_rounds && !pending.empty(); ++round) {
        std::vector<TaskSpec> batch;
        for (auto i : pending) {
            const auto& s = outcomes[i].spec;
            io.emit(EventKind::AgentStatus, s.target_role,
                    json{{"status", "executing"}, {"task_id", s.task_id}, {"kind", *s.task_kind}, {"round", round}});
            remember(ws, s.target_role, EntryKind::ToolCall, tool_name(*s.task_kind) + ": " + s.instruction, io.now());
            batch.push_back(s);
        }
        auto slots = parallel_execute(batch, env);
        for (auto& slot : slots) {
            if (!slot.ok()) std::rethrow_exception(slot.error);
        }

        std::vector<std::size_t> next;
        for (std::size_t k = 0; k < pending.size(); ++k) {
            const auto i = pending[k];
            auto& o = outcomes[i];
            auto result = std::move(*slots[k].result);
            result.rounds_used = round;
            remember(ws, o.spec.target_role, EntryKind::Output, render_elements(result.elements), io.now());

            o.last_report = validate_result(result.elements, o.spec, ws.project, io.assets, providers_.judge, io.control);
            o.rounds = round;
            const bool ok = o.last_report.approved();
            io.emit(EventKind::AgentStatus, AgentRole::Core,
                    json{{"status", "reviewing"},
                         {"task_id", o.spec.task_id},
                         {"round", round},
                         {"verdict", ok ? "approve" : "request-revision"},
                         {"report", o.last_report}});
            if (ok) {
                o.result = std::move(result);
            } else if (round < config_.max_revision_rounds) {
                o.spec.instruction += "\n\nRevision feedback (round " + std::to_string(round) + "):\n" +
                                      o.last_report.feedback();
                next.push_back(i);
            }
        }
        pending = std::move(next);
    }
    return outcomes;
}

RevisionOutcome CoreAgent::revision_loop(const TaskSpec& spec, Workspace& ws, TurnIO& io) const {
    return run_revisions({spec}, ws, io).front();
}

void CoreAgent::delegate(const Delegate& d, Workspace& ws, TurnIO& io) const {
    json targets = json::array();
    for (const auto& s : d.specs) {
        targets.push_back({{"task_id", s.task_id}, {"role", s.target_role}, {"kind", *s.task_kind}});
    }
    io.emit(EventKind::AgentStatus, AgentRole::Core, json{{"status", "delegating"}, {"targets", targets}});

    const auto outcomes = run_revisions(d.specs, ws, io);
    int published = 0;
    for (const auto& o : outcomes) {
        if (!o.approved()) {
            io.emit(EventKind::Error, AgentRole::Core,
                    json{{"reason", "exhausted-revisions"},
                         {"task_id", o.spec.task_id},
                         {"kind", *o.spec.task_kind},
                         {"rounds", o.rounds},
                         {"message", "No " + display_name(*o.spec.task_kind) + " passed review after " +
                                         std::to_string(o.rounds) + " rounds; nothing was published."},
                         {"report", o.last_report}});
            continue;
        }
        io.control.checkpoint("before-publication");
        const auto pub = publish_result(ws.project, *o.result, o.spec, config_, io.assets, io.now());
        const auto& block = ws.project.boards.block(pub.block_id);
        const auto& board = ws.project.boards.board(block.stage);
        io.emit(EventKind::BlockPublished, o.spec.target_role,
                json{{"task_id", o.spec.task_id},
                     {"effect", pub.effect},
                     {"block_id", pub.block_id},
                     {"version_index", pub.version_index},
                     {"parent_id", pub.parent_id ? json(*pub.parent_id) : json(nullptr)},
                     {"stage", block.stage},
                     {"kind", block.kind},
                     {"placement", board.placement.at(pub.block_id)},
                     {"block", block}});
        for (const auto& u : pub.updated_blocks) {
            const auto& ub = ws.project.boards.block(u);
            io.emit(EventKind::BlockUpdated, AgentRole::Core,
                    json{{"block_id", u}, {"change", "styleframe-slot"}, {"task_id", o.spec.task_id}, {"block", ub}});
        }
        std::string how = pub.effect == "child"   ? "as a branch of " + pub.parent_id.value_or("?")
                          : pub.effect == "version" ? "as version " + std::to_string(pub.version_index)
                                                    : "as a new block";
        core_reply(ws,
                   "Published " + display_name(block.kind) + " " + block.block_id + " on the " +
                       display_name(block.stage) + " board " + how + ": " + preview(block),
                   io);
        ++published;
    }
    if (published > 0) core_reply(ws, suggest_next(ws.project, ws.project.current_stage, config_).text, io);
}

void CoreAgent::direct_turn(Workspace& ws, const UserTurn& turn, TurnIO& io) const {
    const AgentRole role = ws.channel->role;
    const auto intent = parse_intent(turn.text, ws.project.current_stage, io.control);
    if (intent.close_channel) {
        ws.channel.reset();
        io.emit(EventKind::AgentStatus, role, json{{"status", "direct-channel"}, {"open", false}});
        core_reply(ws, "Back with the Core Agent. " + suggest_next(ws.project, ws.project.current_stage, config_).text,
                   io);
        return;
    }

    io.emit(EventKind::AgentStatus, role, json{{"status", "executing"}, {"channel", true}});
    remember(ws, role, EntryKind::Message, "user: " + turn.text, io.now());
    const auto reply = chat_direct(*ws.channel, ws.project.current_stage, turn.text, environment(io));
    if (!reply.text.empty()) {
        const auto now = io.now();
        io.emit(EventKind::ChatMessage, role, json{{"speaker", to_string(role)}, {"text", reply.text}});
        remember(ws, role, EntryKind::Message, reply.text, now);
        ws.project.memory.record(std::string(to_string(role)), reply.text, now);
    }
    if (!reply.tool_call) return;

    SpecRequest req;
    req.kind = reply.tool_call->kind;
    req.stage = ws.project.current_stage;
    req.instruction = reply.tool_call->instruction;
    req.selection = turn.selection;
    req.uploads = turn.uploads;
    auto spec = build_task_spec(req, ws.project, config_);
    spec.target_role = role;
    for (const auto& item : ws.channel->context) {
        auto copy = item;
        copy.source = "channel";
        spec.context_payload.push_back(std::move(copy));
    }
    delegate(Delegate{{std::move(spec)}, std::nullopt, "", ""}, ws, io);
}

void CoreAgent::execute(const Decision& decision, Workspace& ws, const UserTurn& turn, TurnIO& io) const {
    if (const auto* d = std::get_if<RespondDirectly>(&decision)) {
        core_reply(ws, d->use_provider ? chat_with_provider(ws, turn, io) : d->text, io);
    } else if (const auto* d = std::get_if<Delegate>(&decision)) {
        if (d->enter_stage) change_stage(ws, *d->enter_stage, "delegation", d->cause, io);
        if (!d->note.empty()) core_reply(ws, d->note, io);
        delegate(*d, ws, io);
    } else if (const auto* d = std::get_if<SwitchStage>(&decision)) {
        change_stage(ws, d->stage, d->reason, d->cause, io);
        core_reply(ws, suggest_next(ws.project, d->stage, config_).text, io);
    } else if (const auto* d = std::get_if<OpenDirectChannel>(&decision)) {
        std::vector<ContextItem> ctx;
        const auto& project = ws.project;
        if (!project.progress.project_brief.empty()) {
            ctx.push_back({"Project brief", ContentType::Text, project.progress.project_brief, "brief"});
        }
        for (const auto& [stage, kinds] : project.progress.canonical) {
            for (const auto& [kind, id] : kinds) {
                const auto& b = project.boards.block(id);
                ctx.push_back({display_name(kind) + " " + id, ContentType::Text, render_elements(b.active().elements),
                               "prior-stage"});
            }
        }
        if (turn.selection) {
            auto items = project.boards.resolve_selection(*turn.selection);
            ctx.insert(ctx.end(), items.begin(), items.end());
        }
        ws.channel = open_direct_channel(d->role, std::move(ctx), ws.channel);
        io.emit(EventKind::AgentStatus, d->role, json{{"status", "direct-channel"}, {"open", true}});
        remember(ws, d->role, EntryKind::InterAgent, "direct channel opened with project context", io.now());
        core_reply(ws,
                   "You are now talking directly with the " + display_name(d->role) +
                       ". Its outputs still come back through me for review. Say \"back to the core\" to return.",
                   io);
    } else if (const auto* d = std::get_if<AskApproval>(&decision)) {
        ws.pending = d->proposal;
        io.emit(EventKind::ApprovalRequest, AgentRole::Core,
                json{{"text", d->proposal.text},
                     {"switch_to", d->proposal.switch_to ? json(*d->proposal.switch_to) : json(nullptr)},
                     {"tasks", task_refs(d->proposal.specs)}});
        remember(ws, AgentRole::Core, EntryKind::Message, d->proposal.text, io.now());
        ws.project.memory.record("core", d->proposal.text, io.now());
    }
}

void CoreAgent::handle_turn(Workspace& ws, const UserTurn& turn, TurnIO& io) const {
    io.emit(EventKind::AgentStatus, AgentRole::Core, json{{"status", "thinking"}});
    json echo{{"speaker", "user"}, {"text", turn.text}};
    if (turn.selection) echo["selection"] = *turn.selection;
    if (!turn.uploads.empty()) echo["uploads"] = turn.uploads;
    io.emit(EventKind::ChatMessage, AgentRole::Core, echo);

    const auto now = io.now();
    remember(ws, AgentRole::Core, EntryKind::Message, "user: " + turn.text, now);
    ws.project.memory.record("user", turn.text, now);

    if (ws.channel) {
        ws.pending.reset();
        direct_turn(ws, turn, io);
    } else {
        const auto decision = interpret_request(turn, ws, io.control);
        ws.pending.reset();
        execute(decision, ws, turn, io);
    }

    PrefixSummarizer summarizer(config_.memory.summary_chars);
    TokenHashEmbedder embedder(config_.memory.embedding_dim);
    chunk_and_index(ws.project.memory, summarizer, embedder, config_.memory);
}

void CoreAgent::start_project(Workspace& ws, const std::string& brief, TurnIO& io) const {
    ws.project.progress.project_brief = brief;
    ws.project.current_stage = Stage::Planning;
    ws.project.memory.record("user", brief, io.now());
    refresh_stage_status(ws.project, config_);
    io.emit(EventKind::StageChanged, AgentRole::Core,
            json{{"from", nullptr},
                 {"to", Stage::Planning},
                 {"reason", "new project"},
                 {"cause", "session-start"},
                 {"progress", ws.project.progress}});
    core_reply(ws, "Project brief: " + brief + ". " + suggest_next(ws.project, Stage::Planning, config_).text, io);
}

} // namespace preprod
