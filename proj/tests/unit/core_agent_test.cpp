#include <doctest.h>

#include "fixtures.hpp"
#include "preprod/core_agent.hpp"
#include "preprod/error.hpp"
#include "rig.hpp"

using namespace preprod;
using namespace fixtures;

namespace {

ParsedIntent parse(const std::string& text, Stage stage = Stage::Ideation) {
    KeywordIntentParser p;
    return p.parse(text, stage, {});
}

/// Ideation complete: story concept, style description and a roster.
ProjectState ideation_done(const std::vector<std::string>& roster = {"Mira", "Otto", "Vale"}) {
    ProjectState s;
    s.progress.project_brief = "a short film";
    make_canonical(s, ArtifactKind::StoryConcept, valid_elements(ArtifactKind::StoryConcept, 3, "concept"));
    make_canonical(s, ArtifactKind::StyleDescription, valid_elements(ArtifactKind::StyleDescription, 1, "style"));
    make_canonical(s, ArtifactKind::CharacterConcept, roster_elements(roster));
    s.current_stage = Stage::Ideation;
    return s;
}

struct Recorder {
    std::vector<std::pair<EventKind, json>> events;
    Timestamp clock = 0;

    TurnIO io(const AssetStore* assets = nullptr) {
        TurnIO t;
        t.emit = [this](EventKind k, AgentRole, json p) { events.emplace_back(k, std::move(p)); };
        t.assets = assets;
        t.now = [this] { return ++clock; };
        return t;
    }
    std::size_t count(EventKind k, const std::string& status = {}) const {
        std::size_t n = 0;
        for (const auto& [kind, p] : events) {
            if (kind == k && (status.empty() || p.value("status", "") == status)) ++n;
        }
        return n;
    }
};

AgentResult result_of(const TaskSpec& spec, std::vector<Element> elements) {
    assign_element_ids(elements);
    AgentResult r;
    r.task_id = spec.task_id;
    r.role = spec.target_role;
    r.kind = *spec.task_kind;
    r.elements = std::move(elements);
    return r;
}

} // namespace

TEST_SUITE("core_agent") {

TEST_CASE("intent table examples") {
    auto i = parse("Give me three story concepts and a visual style description", Stage::Planning);
    CHECK(i.kinds == std::vector{ArtifactKind::StoryConcept, ArtifactKind::StyleDescription});
    CHECK(i.count == 3);
    CHECK_FALSE(i.approve);

    CHECK(parse("Yes, go ahead.").approve);
    CHECK(parse("Sounds good").approve);
    CHECK(parse("No, not now").reject);
    CHECK_FALSE(parse("Now write a story outline").reject);

    i = parse("Make this concept darker");
    CHECK(i.kinds == std::vector{ArtifactKind::StoryConcept});
    CHECK(i.refinement);

    i = parse("Let's move on to scripting");
    CHECK(i.explicit_stage == Stage::Scripting);
    CHECK(i.kinds.empty());
    CHECK(parse("go back to the ideation stage").explicit_stage == Stage::Ideation);

    i = parse("I want to talk to the scripting agent directly.");
    CHECK(i.open_channel == AgentRole::Scripting);
    CHECK(i.kinds.empty());
    CHECK(parse("Take me back to the core.").close_channel);

    i = parse("Write a scene list based on this outline", Stage::Scripting);
    CHECK(i.kinds == std::vector{ArtifactKind::SceneList});

    CHECK(parse("Now write a story outline").kinds == std::vector{ArtifactKind::StoryOutline});
    i = parse("Develop two characters for this story");
    CHECK(i.kinds == std::vector{ArtifactKind::CharacterConcept});
    CHECK(i.count == 2);
    CHECK(parse("Create character design sheets for them").kinds == std::vector{ArtifactKind::CharacterSheet});
    CHECK(parse("Make a storyboard for this scene").kinds == std::vector{ArtifactKind::StoryboardSequence});

    i = parse("I want the story", Stage::Ideation);
    CHECK(i.ambiguous);
    CHECK(i.kinds == std::vector{ArtifactKind::StoryConcept});
    CHECK(parse("I want the story", Stage::Scripting).kinds == std::vector{ArtifactKind::StoryOutline});
}

TEST_CASE("provider intent JSON") {
    const auto i = intent_from_json(json::parse(R"({"approve":false,"kinds":["scene_list"],"count":4,"stage":"scripting"})"));
    CHECK(i.kinds == std::vector{ArtifactKind::SceneList});
    CHECK(i.count == 4);
    CHECK(i.explicit_stage == Stage::Scripting);
    CHECK_THROWS_AS(intent_from_json(json::parse(R"({"kinds":["sandwich"]})")), Error);
    CHECK_THROWS_AS(intent_from_json(json::parse(R"({"stage":"post"})")), Error);
}

TEST_CASE("stage resolution examples") {
    const auto cfg = EngineConfig::defaults();
    auto done = ideation_done();
    auto r = determine_stage("Now write a story outline", Stage::Ideation, done, cfg);
    CHECK(r.stage == Stage::Scripting);
    CHECK_FALSE(r.gated);

    ProjectState partial;
    partial.progress.project_brief = "b";
    make_canonical(partial, ArtifactKind::StoryConcept, valid_elements(ArtifactKind::StoryConcept));
    r = determine_stage("Now write a story outline", Stage::Ideation, partial, cfg);
    CHECK(r.gated);
    CHECK(r.stage == Stage::Ideation);
    CHECK(r.wanted == Stage::Scripting);
    CHECK(r.unmet == std::vector{ArtifactKind::StyleDescription});

    r = determine_stage("give me a logline", Stage::Scripting, partial, cfg);
    CHECK(r.stage == Stage::Ideation);
    CHECK_FALSE(r.gated);

    r = determine_stage("go back to ideation", Stage::Storyboard, partial, cfg);
    CHECK(r.explicit_request);
    CHECK(r.stage == Stage::Ideation);

    r = determine_stage("hello there", Stage::Design, partial, cfg);
    CHECK(r.stage == Stage::Design);

    // Planning is complete once a brief exists.
    r = determine_stage("three story concepts", Stage::Planning, partial, cfg);
    CHECK(r.stage == Stage::Ideation);
    CHECK_FALSE(r.gated);
}

TEST_CASE("task spec packaging") {
    const auto cfg = EngineConfig::defaults();
    auto s = ideation_done();

    SUBCASE("scene list needs an outline") {
        SpecRequest req{ArtifactKind::SceneList, Stage::Scripting, "scenes"};
        try {
            build_task_spec(req, s, cfg);
            FAIL("expected missing-dependency");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::MissingDependency);
            CHECK(e.details() == std::vector<std::string>{"story_outline"});
        }
        CHECK_FALSE(s.ids.counters().contains("task"));
    }
    SUBCASE("scene list with an outline") {
        const auto& outline = make_canonical(s, ArtifactKind::StoryOutline, valid_elements(ArtifactKind::StoryOutline, 3, "beat"));
        SpecRequest req{ArtifactKind::SceneList, Stage::Scripting, "Now break it into a scene list"};
        const auto spec = build_task_spec(req, s, cfg);
        CHECK(spec.task_id == "task-0001");
        CHECK(spec.target_role == AgentRole::Scripting);
        CHECK(spec.task_kind == ArtifactKind::SceneList);
        CHECK(spec.publication_intent == PublicationIntent::new_root());
        REQUIRE(spec.context_payload.size() >= 3);
        CHECK(spec.context_payload[0].source == "brief");
        bool has_outline = false;
        bool has_roster = false;
        for (const auto& item : spec.context_payload) {
            if (item.source != "prior-stage") continue;
            has_outline |= item.label.find(outline.block_id) != std::string::npos && item.content.find("beat outline-beat 3") != std::string::npos;
            has_roster |= item.content.find("Vale") != std::string::npos;
        }
        CHECK(has_outline);
        CHECK(has_roster);
    }
    SUBCASE("storyboard without a scene list") {
        SpecRequest req{ArtifactKind::StoryboardSequence, Stage::Storyboard, "board"};
        try {
            build_task_spec(req, s, cfg);
            FAIL("expected missing-dependency");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::MissingDependency);
            CHECK(e.details() == std::vector<std::string>{"scene_list"});
        }
    }
    SUBCASE("styleframe gets scene, style and sheet images") {
        make_canonical(s, ArtifactKind::StoryOutline, valid_elements(ArtifactKind::StoryOutline));
        const auto& list = make_canonical(s, ArtifactKind::SceneList, {scene_entry("1", "Mira"), scene_entry("2", "Otto")});
        const auto list_id = list.block_id;
        make_canonical(s, ArtifactKind::CharacterSheet,
                       {image_el("image-asset", "assets/img-mira.ppm", {{"name", "Mira"}}), text_el("text-field", "calm")});
        SpecRequest req{ArtifactKind::Styleframe, Stage::Storyboard, "styleframe for this scene"};
        req.selection = Selection{list_id, 0, {"e2"}};
        const auto specs = build_task_specs(req, s, cfg);
        REQUIRE(specs.size() == 1);
        const auto& spec = specs[0];
        CHECK(spec.target_role == AgentRole::Art);
        CHECK(spec.slots.at("scene number") == "2");
        bool scene = false, style = false, image = false, selected = false;
        for (const auto& item : spec.context_payload) {
            scene |= item.source == "prior-stage" && item.content.find("Scene 1") != std::string::npos;
            style |= item.source == "prior-stage" && item.content.find("style style-option 1") != std::string::npos;
            image |= item.content_type == ContentType::Image && item.content == "assets/img-mira.ppm";
            selected |= item.source == "selection" && item.content.find("Scene 2") != std::string::npos;
        }
        CHECK(scene);
        CHECK(style);
        CHECK(image);
        CHECK(selected);
        // Styleframes are multi-instance: always a new root.
        CHECK(spec.publication_intent == PublicationIntent::new_root());
    }
    SUBCASE("character sheets fan out over the roster") {
        SpecRequest req{ArtifactKind::CharacterSheet, Stage::Design, "Create character design sheets for them"};
        auto specs = build_task_specs(req, s, cfg);
        REQUIRE(specs.size() == 3);
        CHECK(specs[0].slots.at("name") == "Mira");
        CHECK(specs[2].slots.at("name") == "Vale");
        CHECK(specs[2].task_id == "task-0003");
        req.instruction = "a sheet for otto please";
        specs = build_task_specs(req, s, cfg);
        REQUIRE(specs.size() == 1);
        CHECK(specs[0].slots.at("name") == "Otto");
    }
    SUBCASE("publication intents") {
        const auto concept_id = *s.progress.canonical_block(ArtifactKind::StoryConcept);
        SpecRequest req{ArtifactKind::StoryConcept, Stage::Ideation, "darker"};
        req.selection = Selection{concept_id, 0, {"e1"}};
        CHECK(derive_intent(req, s) == PublicationIntent::child_of(concept_id));
        req.selection.reset();
        CHECK(derive_intent(req, s) == PublicationIntent::overwrite(ArtifactKind::StoryConcept));
        req.kind = ArtifactKind::Logline;
        CHECK(derive_intent(req, s) == PublicationIntent::new_root());
        // A selection of another kind does not make a branch.
        req.selection = Selection{concept_id, 0, {}};
        CHECK(derive_intent(req, s) == PublicationIntent::new_root());
        req.kind = ArtifactKind::StoryConcept;
        req.selection.reset();
        req.refinement = true;
        s.last_published = concept_id;
        CHECK(derive_intent(req, s) == PublicationIntent::child_of(concept_id));
    }
}

TEST_CASE("validation examples") {
    auto s = ideation_done({"Mira"});
    const auto spec = spec_for(AgentRole::Scripting, ArtifactKind::SceneList, "scenes", "task-0001", Stage::Scripting);

    SUBCASE("missing attribute") {
        auto e = scene_entry("1", "Mira");
        e.attributes.erase("characters");
        e.element_id = "e1";
        const auto r = validate_result({e}, spec, s, nullptr);
        CHECK_FALSE(r.format_ok);
        CHECK_FALSE(r.approved());
        REQUIRE_FALSE(r.messages.empty());
        CHECK(r.messages[0].check == "format");
        CHECK(r.messages[0].text.find("characters") != std::string::npos);
        CHECK(r.feedback().find("[format]") != std::string::npos);
    }
    SUBCASE("unknown character") {
        auto els = std::vector{scene_entry("1", "Mira, Kira")};
        assign_element_ids(els);
        const auto r = validate_result(els, spec, s, nullptr);
        CHECK(r.format_ok);
        CHECK_FALSE(r.consistency_ok);
        REQUIRE(r.messages.size() == 1);
        CHECK(r.messages[0].text.find("Kira") != std::string::npos);
    }
    SUBCASE("conforming") {
        auto els = std::vector{scene_entry("1", "Mira"), scene_entry("2", "mira and MIRA")};
        assign_element_ids(els);
        const auto r = validate_result(els, spec, s, nullptr);
        CHECK(r.approved());
        CHECK(r.messages.empty());
        CHECK(r.feedback().empty());
    }
    SUBCASE("count slot") {
        auto counted = spec;
        counted.slots["count"] = "3";
        auto els = std::vector{scene_entry("1", "Mira"), scene_entry("2", "Mira")};
        assign_element_ids(els);
        const auto r = validate_result(els, counted, s, nullptr);
        CHECK(r.format_ok);
        CHECK_FALSE(r.spec_ok);
    }
    SUBCASE("unresolvable image") {
        TempDir dir("val");
        AssetStore assets(dir.path());
        auto els = valid_elements(ArtifactKind::HeroImage, 1, "x", "assets/missing.ppm");
        assign_element_ids(els);
        const auto r = validate_result(els, spec_for(AgentRole::Art, ArtifactKind::HeroImage), s, &assets);
        CHECK_FALSE(r.format_ok);
    }
    SUBCASE("judged checks") {
        auto els = std::vector{scene_entry("1", "Mira")};
        assign_element_ids(els);
        auto fail = std::make_shared<ScriptedProvider>(ScriptedProgram{{rule(AgentRole::Core, std::nullopt, "FAIL: too short", "judge")}});
        auto r = validate_result(els, spec, s, nullptr, fail);
        CHECK_FALSE(r.spec_ok);
        CHECK(r.feedback().find("judged: too short") != std::string::npos);
        auto pass = std::make_shared<ScriptedProvider>(ScriptedProgram{{rule(AgentRole::Core, std::nullopt, "PASS", "judge")}});
        CHECK(validate_result(els, spec, s, nullptr, pass).approved());
        auto outage = fault_rule(AgentRole::Core, std::nullopt, "provider-failure", "timeout");
        outage.purpose = "judge";
        auto down = std::make_shared<ScriptedProvider>(ScriptedProgram{{outage}});
        r = validate_result(els, spec, s, nullptr, down);
        CHECK(r.approved());
        REQUIRE(r.messages.size() == 1);
        CHECK(r.messages[0].severity == Severity::Warning);
    }
}

TEST_CASE("revision loop") {
    auto bad = rule(AgentRole::Scripting, "scene_list", agent_output({scene_entry("1", "Kira")}));
    bad.times = 1;
    const auto good = rule(AgentRole::Scripting, "scene_list", agent_output({scene_entry("1", "Mira")}));

    SUBCASE("fail then pass") {
        Rig rig({bad, good});
        CoreAgent agent(EngineConfig::defaults(), rig.prompts, Providers::scripted(rig.provider));
        Workspace ws;
        ws.project = ideation_done({"Mira"});
        Recorder rec;
        auto io = rec.io(&rig.assets);
        const auto out = agent.revision_loop(
            spec_for(AgentRole::Scripting, ArtifactKind::SceneList, "scenes", "task-0001", Stage::Scripting), ws, io);
        CHECK(out.approved());
        CHECK(out.rounds == 2);
        CHECK(out.result->rounds_used == 2);
        CHECK(rec.count(EventKind::AgentStatus, "executing") == 2);
        CHECK(rec.count(EventKind::AgentStatus, "reviewing") == 2);
        CHECK(out.spec.instruction.find("Kira") != std::string::npos);
        CHECK(rec.events[1].second.at("verdict") == "request-revision");
        CHECK(rec.events[3].second.at("verdict") == "approve");
    }
    SUBCASE("never passes") {
        bad.times.reset();
        Rig rig({bad});
        auto cfg = EngineConfig::defaults();
        cfg.max_revision_rounds = 3;
        CoreAgent agent(cfg, rig.prompts, Providers::scripted(rig.provider));
        Workspace ws;
        ws.project = ideation_done({"Mira"});
        const auto before = ws.project;
        Recorder rec;
        auto io = rec.io(&rig.assets);
        const auto out = agent.revision_loop(
            spec_for(AgentRole::Scripting, ArtifactKind::SceneList, "scenes", "task-0001", Stage::Scripting), ws, io);
        CHECK_FALSE(out.approved());
        CHECK(out.rounds == 3);
        CHECK_FALSE(out.last_report.consistency_ok);
        CHECK(rec.count(EventKind::AgentStatus, "executing") == 3);
        CHECK(ws.project.boards == before.boards);
    }
}

TEST_CASE("publication effects") {
    const auto cfg = EngineConfig::defaults();
    auto s = ideation_done();
    const auto concept_id = *s.progress.canonical_block(ArtifactKind::StoryConcept);

    SUBCASE("root, version, child") {
        auto spec = spec_for(AgentRole::Ideation, ArtifactKind::Logline);
        auto pub = publish_result(s, result_of(spec, valid_elements(ArtifactKind::Logline)), spec, cfg, nullptr, 5);
        CHECK(pub.effect == "root");
        CHECK(s.progress.canonical_block(ArtifactKind::Logline) == pub.block_id);
        CHECK(s.last_published == pub.block_id);

        spec = spec_for(AgentRole::Ideation, ArtifactKind::StoryConcept);
        spec.publication_intent = PublicationIntent::overwrite(ArtifactKind::StoryConcept);
        pub = publish_result(s, result_of(spec, valid_elements(ArtifactKind::StoryConcept, 2, "v2")), spec, cfg, nullptr, 6);
        CHECK(pub.effect == "version");
        CHECK(pub.block_id == concept_id);
        CHECK(pub.version_index == 1);
        CHECK(s.boards.block(concept_id).versions.size() == 2);
        CHECK(s.boards.block(concept_id).active_version == 1);

        spec.publication_intent = PublicationIntent::child_of(concept_id);
        pub = publish_result(s, result_of(spec, valid_elements(ArtifactKind::StoryConcept, 1, "dark")), spec, cfg, nullptr, 7);
        CHECK(pub.effect == "child");
        CHECK(pub.parent_id == concept_id);
        CHECK(s.progress.canonical_block(ArtifactKind::StoryConcept) == pub.block_id);
        CHECK(s.boards.lineage(pub.block_id) == std::vector<std::string>{concept_id, pub.block_id});
        CHECK(check_project_invariants(s).empty());
    }
    SUBCASE("failures leave the state alone") {
        const auto before = s;
        auto spec = spec_for(AgentRole::Ideation, ArtifactKind::StoryConcept);
        spec.publication_intent = PublicationIntent::child_of("blk-9999");
        CHECK_THROWS_AS(publish_result(s, result_of(spec, valid_elements(ArtifactKind::StoryConcept)), spec, cfg, nullptr, 1),
                        Error);
        CHECK(s == before);
        spec.publication_intent = PublicationIntent::new_root();
        CHECK_THROWS_AS(publish_result(s, result_of(spec, {text_el("story-option", "no title")}), spec, cfg, nullptr, 1),
                        Error);
        CHECK(s == before);
    }
    SUBCASE("styleframe fills the scene list slot") {
        make_canonical(s, ArtifactKind::StoryOutline, valid_elements(ArtifactKind::StoryOutline));
        const auto list_id =
            make_canonical(s, ArtifactKind::SceneList, {scene_entry("1", "Mira"), scene_entry("2", "Otto")}).block_id;
        auto spec = spec_for(AgentRole::Art, ArtifactKind::Styleframe, "frame", "task-0009", Stage::Storyboard);
        const auto pub = publish_result(
            s, result_of(spec, {image_el("image-asset", "assets/f.ppm", {{"scene number", "2"}}), text_el("text-field", "dusk")}),
            spec, cfg, nullptr, 3);
        CHECK(pub.effect == "root");
        CHECK(pub.updated_blocks == std::vector{list_id});
        const auto& list = s.boards.block(list_id);
        CHECK(list.active_version == 1);
        CHECK(list.active().elements[1].attributes.at("styleframe slot") == pub.block_id);
        CHECK(list.active().elements[0].attributes.at("styleframe slot").empty());
    }
}

TEST_CASE("publication effect is a function of intent and progress") {
    ProgressRecord empty;
    ProgressRecord full;
    for (ArtifactKind k : kAllKinds) full.canonical[board_of(k)][k] = "blk-0001";
    for (ArtifactKind k : kAllKinds) {
        CHECK(publication_effect(PublicationIntent::new_root(), k, empty) == "root");
        CHECK(publication_effect(PublicationIntent::new_root(), k, full) == "root");
        CHECK(publication_effect(PublicationIntent::child_of("blk-0001"), k, empty) == "child");
        CHECK(publication_effect(PublicationIntent::child_of("blk-0001"), k, full) == "child");
        CHECK(publication_effect(PublicationIntent::overwrite(k), k, empty) == "root");
        CHECK(publication_effect(PublicationIntent::overwrite(k), k, full) == "version");
    }
}

TEST_CASE("request interpretation") {
    Rig rig(std::vector<ScriptedRule>{});
    CoreAgent agent(EngineConfig::defaults(), rig.prompts, Providers::scripted(rig.provider));
    Workspace ws;
    ws.project.progress.project_brief = "a 5-minute 2D animation";

    auto d = agent.interpret_request({"Give me three story concepts and a visual style description"}, ws);
    REQUIRE(std::holds_alternative<AskApproval>(d));
    const auto p = std::get<AskApproval>(d).proposal;
    CHECK(p.switch_to == Stage::Ideation);
    REQUIRE(p.specs.size() == 2);
    CHECK(p.specs[0].slots.at("count") == "3");
    CHECK_FALSE(p.specs[1].slots.contains("count"));

    ws.pending = p;
    d = agent.interpret_request({"Yes, go ahead."}, ws);
    REQUIRE(std::holds_alternative<Delegate>(d));
    CHECK(std::get<Delegate>(d).specs == p.specs);
    CHECK(std::get<Delegate>(d).enter_stage == Stage::Ideation);

    ws.pending.reset();
    CHECK(decision_name(agent.interpret_request({"hello"}, ws)) == "respond-directly");
    CHECK(std::get<RespondDirectly>(agent.interpret_request({"hello"}, ws)).use_provider);
    CHECK(decision_name(agent.interpret_request({"Yes"}, ws)) == "respond-directly");
    CHECK(decision_name(agent.interpret_request({"move to design"}, ws)) == "switch-stage");
    CHECK(decision_name(agent.interpret_request({"talk to the art agent directly"}, ws)) == "open-direct-channel");

    ws.project = ideation_done();
    d = agent.interpret_request({"Make a storyboard for scene 2"}, ws);
    REQUIRE(std::holds_alternative<AskApproval>(d));
    const auto& pre = std::get<AskApproval>(d).proposal;
    REQUIRE(pre.specs.size() == 1);
    // Storyboard -> scene list -> outline: the first buildable prerequisite.
    CHECK(pre.specs[0].task_kind == ArtifactKind::StoryOutline);
    CHECK(pre.switch_to == Stage::Scripting);
}

TEST_CASE("next step suggestions") {
    const auto cfg = EngineConfig::defaults();
    ProjectState s;
    auto g = suggest_next(s, Stage::Planning, cfg);
    CHECK(g.next_stage == Stage::Planning);
    CHECK(g.text.starts_with("Tell me about the project"));

    s.progress.project_brief = "b";
    g = suggest_next(s, Stage::Planning, cfg);
    CHECK(g.text == "Brief recorded. Next we could start Ideation (Story Concept and Style Description) or "
                    "Scripting (Story Outline and Scene List).");
    CHECK(g.next_stage == Stage::Ideation);

    g = suggest_next(s, Stage::Ideation, cfg);
    CHECK(g.text == "To wrap up Ideation we still need: Story Concept and Style Description.");
    CHECK(g.kinds == std::vector{ArtifactKind::StoryConcept, ArtifactKind::StyleDescription});

    s = ideation_done();
    g = suggest_next(s, Stage::Ideation, cfg);
    CHECK(g.text.starts_with("Ideation is complete. We could move to Scripting"));

    for (ArtifactKind k : kAllKinds) s.progress.canonical[board_of(k)][k] = "blk-0001";
    g = suggest_next(s, Stage::Storyboard, cfg);
    CHECK_FALSE(g.next_stage.has_value());
    CHECK(g.kinds.empty());
}

} // TEST_SUITE
