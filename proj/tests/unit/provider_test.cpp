#include <doctest.h>

#include <thread>

#include "fixtures.hpp"
#include "preprod/assets.hpp"
#include "preprod/error.hpp"
#include "preprod/prompts.hpp"
#include "preprod/provider.hpp"

using namespace preprod;
using fixtures::rule;

namespace {

ProviderRequest tool_request(AgentRole role, ArtifactKind kind, std::string instruction = "go") {
    ProviderRequest r;
    r.role = role;
    r.task_kind = kind;
    r.purpose = "tool";
    r.instruction = std::move(instruction);
    r.prompt = "prompt";
    return r;
}

Errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return Errc::PreconditionViolation;
}

} // namespace

TEST_SUITE("provider") {

TEST_CASE("scripted rule answers verbatim, identically across runs") {
    const std::string canned = R"({"elements":[{"kind":"story-option","text":"a","attributes":{"title":"A"}}]})";
    ScriptedProgram p{{rule(AgentRole::Ideation, "story_concept", canned)}};
    ScriptedProvider a(p);
    ScriptedProvider b(p);
    const auto req = tool_request(AgentRole::Ideation, ArtifactKind::StoryConcept);
    CHECK(a.complete(req) == canned);
    CHECK(b.complete(req) == a.complete(req));
}

TEST_CASE("no matching rule is provider-failure(no-rule)") {
    ScriptedProvider p(ScriptedProgram{{rule(AgentRole::Ideation, "story_concept", "x")}});
    try {
        p.complete(tool_request(AgentRole::Scripting, ArtifactKind::SceneList));
        FAIL("expected provider-failure");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ProviderFailure);
        REQUIRE_FALSE(e.details().empty());
        CHECK(e.details()[0] == "no-rule");
    }
}

TEST_CASE("first match wins and times limits use") {
    auto first = rule(AgentRole::Scripting, "scene_list", "first");
    first.times = 1;
    auto narrow = rule(AgentRole::Scripting, "scene_list", "narrow");
    narrow.instruction_contains = "scene 2";
    ScriptedProvider p(ScriptedProgram{{first, narrow, rule(std::nullopt, std::nullopt, "any")}});
    const auto req = tool_request(AgentRole::Scripting, ArtifactKind::SceneList, "for scene 2");
    CHECK(p.complete(req) == "first");
    CHECK(p.complete(req) == "narrow");
    CHECK(p.complete(tool_request(AgentRole::Scripting, ArtifactKind::SceneList, "other")) == "any");
    CHECK(p.consumed() == std::vector<int>{1, 1, 1});
    p.reset();
    CHECK(p.complete(req) == "first");
}

TEST_CASE("faults") {
    ScriptedProvider p(ScriptedProgram{{fixtures::fault_rule(AgentRole::Art, std::nullopt, "provider-failure", "timeout"),
                                        fixtures::fault_rule(AgentRole::Design, std::nullopt, "exception")}});
    try {
        p.complete(tool_request(AgentRole::Art, ArtifactKind::HeroImage));
        FAIL("expected provider-failure");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ProviderFailure);
        CHECK(e.details().at(0) == "timeout");
    }
    CHECK_THROWS_AS(p.complete(tool_request(AgentRole::Design, ArtifactKind::CharacterSheet)), std::runtime_error);
}

TEST_CASE("empty prompt is rejected before any backend call") {
    ScriptedProvider p(ScriptedProgram{{rule(std::nullopt, std::nullopt, "x")}});
    auto req = tool_request(AgentRole::Ideation, ArtifactKind::Logline);
    req.prompt.clear();
    CHECK(code_of([&] { p.complete(req); }) == Errc::PreconditionViolation);
    CHECK(p.consumed() == std::vector<int>{0});
    // Unroutable endpoint: the guard must fire before any network activity.
    HttpTextProvider live("http://127.0.0.1:9", "k", "m");
    CHECK(code_of([&] { live.complete(req); }) == Errc::PreconditionViolation);
}

TEST_CASE("consumed counters are exact under concurrency") {
    auto limited = rule(AgentRole::Ideation, "logline", "limited");
    limited.times = 50;
    ScriptedProvider p(ScriptedProgram{{limited, rule(AgentRole::Ideation, "logline", "rest")}});
    std::atomic<int> limited_hits{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&] {
            for (int i = 0; i < 25; ++i) {
                if (p.complete(tool_request(AgentRole::Ideation, ArtifactKind::Logline)) == "limited") ++limited_hits;
            }
        });
    }
    for (auto& t : threads) t.join();
    CHECK(limited_hits == 50);
    CHECK(p.consumed() == std::vector<int>{50, 150});
}

TEST_CASE("placeholder images embed the hash of prompt and references") {
    fixtures::TempDir tmp("img");
    AssetStore assets(tmp.path());
    ScriptedProvider p(ScriptedProgram{});
    const auto sheet = p.generate_image("character sheet of Mira", {}, assets);
    CHECK(assets.resolves(sheet));
    CHECK(placeholder_digest(assets.read(sheet)) == sha256_hex("prompt:character sheet of Mira\n"));

    const auto frame = p.generate_image("styleframe scene 1", {sheet}, assets);
    const auto expected = sha256_hex("prompt:styleframe scene 1\nref:" + sheet + "\n");
    CHECK(placeholder_digest(assets.read(frame)) == expected);
    CHECK(frame == "assets/img-" + expected.substr(0, 16) + ".ppm");
    // Same inputs give the same file.
    CHECK(p.generate_image("styleframe scene 1", {sheet}, assets) == frame);

    CHECK(code_of([&] { p.generate_image("x", {"assets/nope.ppm"}, assets); }) == Errc::PreconditionViolation);
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("program JSON round trip") {
    auto r = rule(AgentRole::Art, "styleframe", "out");
    r.instruction_contains = "scene";
    r.times = 2;
    r.delay_ms = 5;
    r.fault = ScriptedFault{"provider-failure", "refusal"};
    ScriptedProgram p{{r, rule(std::nullopt, std::nullopt, "x", std::nullopt)}};
    CHECK(json(p).get<ScriptedProgram>() == p);
}

TEST_CASE("assemble_prompt section order") {
    const auto prompts = PromptSet::defaults();
    TaskSpec spec;
    spec.task_id = "task-0001";
    spec.target_role = AgentRole::Scripting;
    spec.task_kind = ArtifactKind::SceneList;
    spec.instruction = "Break the outline into scenes";
    spec.stage = Stage::Scripting;
    spec.context_payload = {{"Project brief", ContentType::Text, "a short film", "brief"},
                            {"Story Outline", ContentType::Text, "beat one", "prior-stage"}};
    const auto text = assemble_prompt(AgentRole::Scripting, Stage::Scripting, spec, prompts);
    const auto role = text.find(prompts.role.at(AgentRole::Scripting));
    const auto stage = text.find(prompts.stage.at(Stage::Scripting));
    const auto instr = text.find("Break the outline into scenes");
    const auto outline = text.find("- Story Outline: beat one");
    REQUIRE(role != std::string::npos);
    REQUIRE(stage != std::string::npos);
    REQUIRE(instr != std::string::npos);
    REQUIRE(outline != std::string::npos);
    CHECK(role < stage);
    CHECK(stage < instr);
    CHECK(text.find("make_scene_list") != std::string::npos);
    CHECK(assemble_prompt(AgentRole::Scripting, Stage::Scripting, spec, prompts) == text);
}

TEST_CASE("image references are listed by label in payload order") {
    TaskSpec spec;
    spec.task_kind = ArtifactKind::Styleframe;
    spec.target_role = AgentRole::Art;
    spec.instruction = "frame";
    spec.context_payload = {{"Character Sheet blk-0004", ContentType::Image, "assets/a.ppm", "selection"},
                            {"Character Sheet blk-0005", ContentType::Image, "assets/b.ppm", "selection"}};
    const auto text = assemble_prompt(AgentRole::Art, Stage::Storyboard, spec, PromptSet::defaults());
    const std::string expected =
        "- Character Sheet blk-0004 [image]: assets/a.ppm\n- Character Sheet blk-0005 [image]: assets/b.ppm";
    CHECK(text.find(expected) != std::string::npos);
}

TEST_CASE("instruction text cannot inject slots") {
    TaskSpec spec;
    spec.task_kind = ArtifactKind::Logline;
    spec.target_role = AgentRole::Ideation;
    spec.instruction = "say {context}";
    const auto text = assemble_prompt(AgentRole::Ideation, Stage::Ideation, spec, PromptSet::defaults());
    CHECK(text.find("say {context}") != std::string::npos);
}

TEST_CASE("prompt files round trip and missing files are reported") {
    fixtures::TempDir tmp("pr");
    const auto p = PromptSet::defaults();
    p.save(tmp.path());
    const auto loaded = PromptSet::load(tmp.path());
    CHECK(loaded.base == p.base);
    CHECK(loaded.stage == p.stage);
    CHECK(loaded.role == p.role);
    CHECK(loaded.tool == p.tool);
    CHECK(loaded.stage.size() == 5);
    std::filesystem::remove(tmp.path() / "stage-design.txt");
    CHECK(code_of([&] { PromptSet::load(tmp.path()); }) == Errc::MissingPromptFile);

    PromptSet partial = p;
    partial.role.erase(AgentRole::Art);
    TaskSpec spec;
    spec.task_kind = ArtifactKind::HeroImage;
    CHECK(code_of([&] { assemble_prompt(AgentRole::Art, Stage::Storyboard, spec, partial); }) ==
          Errc::MissingPromptFile);
}

} // TEST_SUITE
