// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "board_ops.hpp"
#include "fixtures.hpp"
#include "memory_oracle.hpp"
#include "rig.hpp"
#include "sse.hpp"

#include "preprod/http_server.hpp"
#include "preprod/scenario.hpp"
#include "preprod/session.hpp"

using namespace preprod;
using namespace fixtures;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool passed = true;
    std::string detail;
    std::vector<std::string> failures;

    void fail(std::string why) {
        passed = false;
        if (failures.size() < 5) failures.push_back(std::move(why));
    }
};

double since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ScriptedProgram golden_program() {
    return ScriptedProgram::load(source_dir() / "scenarios" / "golden_workflow.program.json");
}

// --- golden workflow --------------------------------------------------------

Outcome golden_workflow() {
    Outcome o;
    TempDir dir("acc-golden");
    const auto sc = load_scenario(golden_scenario());
    ScenarioOptions opts;
    opts.work_dir = dir.path();
    const auto rep = run_scenario(sc, opts);
    for (const auto& a : rep.assertions) {
        if (!a.passed) o.fail(a.name + ": " + a.detail);
    }
    if (!rep.passed) o.fail("report not passed");
    if (rep.seconds >= 10.0) o.fail("took " + std::to_string(rep.seconds) + " s");

    // Independent of the scenario file's own expectations.
    std::vector<Stage> stages;
    int storyboards = 0;
    for (const auto& e : rep.events) {
        if (e.event_kind == EventKind::StageChanged) stages.push_back(e.payload.at("to").get<Stage>());
        if (e.event_kind == EventKind::BlockPublished && e.payload.at("kind") == ArtifactKind::StoryboardSequence) {
            ++storyboards;
        }
    }
    const std::vector<Stage> want{Stage::Planning, Stage::Ideation,  Stage::Design,
                                  Stage::Ideation, Stage::Scripting, Stage::Storyboard};
    if (stages != want) o.fail("stage sequence " + json(stages).dump());
    if (storyboards < 1) o.fail("no storyboard sequence published");
    const auto state = project_from_json(rep.project);
    for (auto k : {ArtifactKind::StoryOutline, ArtifactKind::SceneList}) {
        if (!state.progress.canonical_block(k)) o.fail("no canonical " + std::string(to_string(k)));
    }
    int ideation_children = 0;
    for (const auto& [id, b] : state.boards.board(Stage::Ideation).blocks) {
        if (b.parent_id) ++ideation_children;
    }
    if (ideation_children < 1) o.fail("no branch child on the ideation board");
    o.detail = std::to_string(rep.events.size()) + " events, " + std::to_string(rep.seconds) + " s";
    return o;
}

// --- replace vs add ---------------------------------------------------------

Outcome replace_vs_add() {
    Outcome o;
    int runs = 0;
    using T = PublicationIntent::Type;
    for (ArtifactKind kind : kAllKinds) {
        for (bool canonical : {false, true}) {
            for (T type : {T::NewRoot, T::ChildOf, T::OverwriteArtifact}) {
                ++runs;
                const std::string tag = std::string(to_string(kind)) + "/" + std::string(to_string(type)) +
                                        (canonical ? "/canonical" : "/fresh");
                ProjectState state;
                std::string parent;
                if (canonical) {
                    parent = make_canonical(state, kind, valid_elements(kind, 1, "old")).block_id;
                } else if (type == T::ChildOf) {
                    parent = state.boards.create_block(board_of(kind), kind, std::nullopt,
                                                       valid_elements(kind, 1, "loose"), "seed", 0)
                                 .block_id;
                }
                PublicationIntent intent = type == T::NewRoot   ? PublicationIntent::new_root()
                                           : type == T::ChildOf ? PublicationIntent::child_of(parent)
                                                                : PublicationIntent::overwrite(kind);
                const std::string expected = type == T::NewRoot   ? "root"
                                             : type == T::ChildOf ? "child"
                                                                  : (canonical ? "version" : "root");
                const auto table = publication_effect(intent, kind, state.progress);
                if (table != expected) o.fail(tag + ": effect table says " + table);

                auto spec = spec_for(owner_of(kind), kind, "publish", "task-0099", board_of(kind));
                spec.publication_intent = intent;
                AgentResult result;
                result.task_id = spec.task_id;
                result.role = spec.target_role;
                result.kind = kind;
                result.elements = valid_elements(kind, 1, "new");

                const auto before = state;
                const auto count_before = state.boards.board(board_of(kind)).blocks.size();
                PublishOutcome pub;
                try {
                    pub = publish_result(state, result, spec, EngineConfig::defaults(), nullptr, 5);
                } catch (const Error& e) {
                    o.fail(tag + ": " + e.what());
                    continue;
                }
                if (pub.effect != table) o.fail(tag + ": published '" + pub.effect + "' vs table '" + table + "'");
                const auto count_after = state.boards.board(board_of(kind)).blocks.size();
                const auto& b = state.boards.block(pub.block_id);
                if (pub.effect == "root") {
                    if (count_after != count_before + 1 || b.parent_id) o.fail(tag + ": root did not add a parentless block");
                } else if (pub.effect == "child") {
                    if (count_after != count_before + 1 || b.parent_id != parent) o.fail(tag + ": child not under parent");
                } else if (pub.effect == "version") {
                    const auto& old = before.boards.block(parent);
                    if (count_after != count_before || pub.block_id != parent ||
                        b.versions.size() != old.versions.size() + 1 ||
                        b.active_version != static_cast<int>(b.versions.size()) - 1) {
                        o.fail(tag + ": version did not extend the canonical block");
                    }
                }
                if (state.progress.canonical_block(kind) != pub.block_id) o.fail(tag + ": canonical not updated");
                for (const auto& v : check_project_invariants(state)) o.fail(tag + ": " + v);
            }
        }
    }
    o.detail = std::to_string(runs) + " runs";
    return o;
}

// --- board property sequences ---------------------------------------------------

Outcome board_sequences() {
    Outcome o;
    TempDir dir("acc-board");
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t violations = 0;
    for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
        const auto v = random_board_sequence(seed, 40, dir.path());
        violations += v.size();
        for (const auto& s : v) o.fail("seed " + std::to_string(seed) + ": " + s);
    }
    const auto secs = since(t0);
    if (secs >= 60.0) o.fail("took " + std::to_string(secs) + " s");
    o.detail = "1000 sequences, " + std::to_string(violations) + " violations, " + std::to_string(secs) + " s";
    return o;
}

// --- validation loop ------------------------------------------------------------

std::shared_ptr<Session> scripted_session(const fs::path& dir, std::vector<ScriptedRule> rules,
                                          const std::string& brief = "a short film about a lighthouse") {
    SessionOptions so;
    so.providers = Providers::scripted(std::make_shared<ScriptedProvider>(ScriptedProgram{std::move(rules)}));
    so.clock = logical_clock();
    return Session::create("acc", brief, dir, so);
}

/// Posts and waits; false when the post was rejected or the request hung.
bool drive(Session& s, UserTurn turn) {
    try {
        s.post_message(std::move(turn));
    } catch (const Error&) {
        return false;
    }
    return s.wait_idle(30s);
}

/// Log invariants: every publication has an earlier approving review for its
/// task; exhausted tasks never publish; rounds never exceed the limit.
void check_publication_log(const std::vector<SessionEvent>& events, int max_rounds, const std::string& tag, Outcome& o) {
    // Task ids are per request: a rolled-back request hands its ids out again.
    std::set<std::string> approved;
    std::set<std::string> exhausted;
    std::map<std::string, int> executing;
    for (const auto& e : events) {
        const auto& p = e.payload;
        if (e.event_kind == EventKind::Done) {
            approved.clear();
            exhausted.clear();
            executing.clear();
        } else if (e.event_kind == EventKind::AgentStatus && p.value("status", "") == "reviewing" &&
            p.value("verdict", "") == "approve") {
            approved.insert(p.at("task_id").get<std::string>());
        } else if (e.event_kind == EventKind::AgentStatus && p.value("status", "") == "executing") {
            if (++executing[p.at("task_id").get<std::string>()] > max_rounds) {
                o.fail(tag + ": task " + p.at("task_id").get<std::string>() + " exceeded the round limit");
            }
        } else if (e.event_kind == EventKind::Error && p.value("reason", "") == "exhausted-revisions") {
            exhausted.insert(p.at("task_id").get<std::string>());
        } else if (e.event_kind == EventKind::BlockPublished) {
            const auto tid = p.at("task_id").get<std::string>();
            if (!approved.contains(tid)) o.fail(tag + ": " + tid + " published without approval");
            if (exhausted.contains(tid)) o.fail(tag + ": " + tid + " published after exhausting revisions");
        }
    }
}

Outcome validation_loop() {
    Outcome o;
    TempDir dir("acc-validation");
    const auto good = agent_output(valid_elements(ArtifactKind::StoryConcept, 3, "good"));
    // Parses, but every story option lacks its attributes.
    auto stripped = valid_elements(ArtifactKind::StoryConcept, 3, "bad");
    for (auto& e : stripped) e.attributes.clear();
    const auto bad = agent_output(stripped);
    const auto cfg = EngineConfig::defaults();

    auto count = [](const std::vector<SessionEvent>& ev, const std::string& status, const std::string& verdict = "") {
        return std::count_if(ev.begin(), ev.end(), [&](const SessionEvent& e) {
            return e.event_kind == EventKind::AgentStatus && e.payload.value("status", "") == status &&
                   (verdict.empty() || e.payload.value("verdict", "") == verdict);
        });
    };
    auto published = [](const std::vector<SessionEvent>& ev) {
        return std::count_if(ev.begin(), ev.end(),
                             [](const SessionEvent& e) { return e.event_kind == EventKind::BlockPublished; });
    };

    {
        // Fail then pass: approval on round 2.
        auto bad_once = rule(AgentRole::Ideation, "story_concept", bad);
        bad_once.times = 1;
        auto s = scripted_session(dir.path() / "ftp",
                                  {bad_once, rule(AgentRole::Ideation, "story_concept", good),
                                   rule(AgentRole::Core, std::nullopt, "Sure.", std::string("chat"))});
        drive(*s, {"Give me three story concepts"});
        drive(*s, {"Yes, go ahead."});
        const auto ev = s->events().all();
        const auto approve2 = std::any_of(ev.begin(), ev.end(), [](const SessionEvent& e) {
            return e.payload.value("status", "") == "reviewing" && e.payload.value("verdict", "") == "approve" &&
                   e.payload.value("round", 0) == 2;
        });
        if (!approve2) o.fail("fail-then-pass: no approval on round 2");
        if (count(ev, "reviewing", "request-revision") != 1) o.fail("fail-then-pass: expected one revision request");
        if (published(ev) != 1) o.fail("fail-then-pass: expected one publication");
        check_publication_log(ev, cfg.max_revision_rounds, "fail-then-pass", o);
    }
    {
        // Always fail: exhausted revisions, nothing published.
        auto s = scripted_session(dir.path() / "af",
                                  {rule(AgentRole::Ideation, "story_concept", bad),
                                   rule(AgentRole::Core, std::nullopt, "Sure.", std::string("chat"))});
        drive(*s, {"Give me three story concepts"});
        drive(*s, {"Yes, go ahead."});
        const auto ev = s->events().all();
        const auto exhausted = std::any_of(ev.begin(), ev.end(), [](const SessionEvent& e) {
            return e.event_kind == EventKind::Error && e.payload.value("reason", "") == "exhausted-revisions";
        });
        if (!exhausted) o.fail("always-fail: no exhausted-revisions error");
        if (published(ev) != 0) o.fail("always-fail: something was published");
        if (count(ev, "executing") != cfg.max_revision_rounds) o.fail("always-fail: wrong number of rounds");
        if (s->workspace().project.boards.board(Stage::Ideation).blocks.size() != 0) o.fail("always-fail: board not empty");
        check_publication_log(ev, cfg.max_revision_rounds, "always-fail", o);
    }

    // Randomized sessions over the golden program with injected bad outputs and faults.
    const auto base = golden_program();
    const std::vector<std::string> phrases{
        "Give me three story concepts and a visual style description",
        "Give me three story concepts",
        "a visual style description please",
        "Develop three characters for this story",
        "Create character design sheets for them",
        "Make this concept darker",
        "Now write a story outline",
        "Now break it into a scene list",
        "Make a storyboard for this scene",
        "Yes, go ahead.",
        "No, not now.",
        "hello there",
        "go to the scripting stage",
        "go back to ideation",
    };
    std::size_t total_events = 0;
    std::size_t total_published = 0;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        std::mt19937_64 rng(seed);
        auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
        std::vector<ScriptedRule> rules;
        for (const auto& r : base.rules) {
            if (r.purpose == std::optional<std::string>("tool") && pick(2) == 0) {
                ScriptedRule broken = r;
                broken.times = static_cast<int>(1 + pick(3));
                switch (pick(3)) {
                case 0: broken.output = bad; break;
                case 1: broken.output = "no json here"; break;
                default: broken.fault = ScriptedFault{"provider-failure", "flaky"}; break;
                }
                rules.push_back(broken);
            }
            rules.push_back(r);
        }
        const auto tag = "seed " + std::to_string(seed);
        auto s = scripted_session(dir.path() / ("r" + std::to_string(seed)), rules);
        const auto steps = 6 + pick(10);
        for (std::size_t i = 0; i < steps; ++i) {
            UserTurn turn{phrases[pick(phrases.size())]};
            if (pick(3) == 0) {
                const auto ws = s->workspace();
                std::vector<const Block*> blocks;
                for (const auto& [stage, board] : ws.project.boards.boards()) {
                    for (const auto& [id, b] : board.blocks) blocks.push_back(&b);
                }
                if (!blocks.empty()) {
                    const auto* b = blocks[pick(blocks.size())];
                    Selection sel{b->block_id, b->active_version, {}};
                    if (pick(2) == 0) sel.element_ids = {"e1"};
                    turn.selection = sel;
                }
            }
            if (!drive(*s, turn) && s->busy()) o.fail(tag + ": request hung");
        }
        const auto ev = s->events().all();
        total_events += ev.size();
        check_publication_log(ev, cfg.max_revision_rounds, tag, o);
        const auto ws = s->workspace();
        for (const auto& v : check_project_invariants(ws.project)) o.fail(tag + ": " + v);
        for (const auto& [stage, board] : ws.project.boards.boards()) total_published += board.blocks.size();
    }
    o.detail = "200 random sessions, " + std::to_string(total_events) + " events, " + std::to_string(total_published) +
               " blocks on final boards";
    return o;
}

// --- rollback at every safe-point -----------------------------------------------

Outcome rollback_totality() {
    Outcome o;
    TempDir dir("acc-rollback");
    const auto sc = load_scenario(golden_scenario());

    std::atomic<int> hits{0};
    {
        ScenarioOptions opts;
        opts.work_dir = dir.path() / "count";
        opts.hook = [&](std::string_view) { ++hits; };
        const auto rep = run_scenario(sc, opts);
        if (!rep.passed) o.fail("clean run did not pass");
    }
    const int n = hits.load();
    if (n == 0) o.fail("no safe-points reached");

    int injections = 0;
    for (int mode = 0; mode < 3; ++mode) {
        for (int k = 1; k <= n; ++k) {
            ++injections;
            std::atomic<int> seen{0};
            ScenarioOptions opts;
            opts.work_dir = dir.path() / ("m" + std::to_string(mode) + "-" + std::to_string(k));
            opts.stop_on_failure = true;
            opts.record_states = true;
            opts.hook = [&, k, mode](std::string_view label) {
                if (++seen != k) return;
                if (mode == 0) throw Error(Errc::ProviderFailure, "injected at " + std::string(label), {"injected"});
                if (mode == 1) throw Error(Errc::Cancelled, "cancelled at " + std::string(label));
                throw std::runtime_error("crash at " + std::string(label));
            };
            const auto rep = run_scenario(sc, opts);
            const auto tag = "mode " + std::to_string(mode) + " hit " + std::to_string(k);
            const auto failed = std::find_if(rep.actions.begin(), rep.actions.end(),
                                             [](const ActionRecord& a) { return a.status != "ok"; });
            if (failed == rep.actions.end()) {
                o.fail(tag + ": injection did not fail any request");
                continue;
            }
            const std::string want = mode == 1 ? "cancelled" : "failed";
            if (failed->status != want) o.fail(tag + ": status " + failed->status);
            if (!failed->states_equal) o.fail(tag + ": state after action " + std::to_string(failed->index) + " differs");
            for (const auto& v : check_project_invariants(project_from_json(rep.project))) o.fail(tag + ": " + v);
            bool rolled = false;
            for (const auto& e : rep.events) {
                if (e.event_kind == EventKind::Error && e.payload.value("request_id", "") == failed->request_id) {
                    rolled = e.payload.value("rolled_back", false);
                }
            }
            if (!rolled) o.fail(tag + ": no rolled-back error event");
        }
    }
    o.detail = std::to_string(n) + " safe-points x 3 fault modes = " + std::to_string(injections) + " injections";
    return o;
}

// --- memory oracle ----------------------------------------------------------------

Outcome memory_oracle() {
    Outcome o;
    std::mt19937_64 rng(20261016);
    MemoryConfig cfg;
    PrefixSummarizer summarizer(cfg.summary_chars);
    IdentityExpander expander;
    TokenHashEmbedder embedder(cfg.embedding_dim);

    auto mem = random_memory(rng, 1000, cfg);
    const auto added = chunk_and_index(mem, summarizer, embedder, cfg);
    if (added != 1000) o.fail("expected 1000 chunks, got " + std::to_string(added));

    // Coverage: contiguous, disjoint, everything beyond the horizon chunked.
    const auto snap = mem.store.snapshot();
    std::int64_t next = 0;
    for (const auto& c : *snap) {
        if (c.first_index != next) o.fail(c.chunk_id + " leaves a gap");
        if (c.last_index - c.first_index + 1 != static_cast<std::int64_t>(cfg.chunk_size)) o.fail(c.chunk_id + " size");
        if (c.entries.size() != cfg.chunk_size || c.start_time != c.entries.front().timestamp ||
            c.end_time != c.entries.back().timestamp) {
            o.fail(c.chunk_id + " entries or times");
        }
        next = c.last_index + 1;
    }
    if (mem.transcript.size() - mem.chunked_count() != cfg.horizon) o.fail("horizon not respected");
    if (chunk_and_index(mem, summarizer, embedder, cfg) != 0) o.fail("re-indexing added chunks");

    int queries = 0;
    int mismatches = 0;
    for (int q = 0; q < 100; ++q, ++queries) {
        const auto text = random_text(rng, 1 + rng() % 6);
        const std::size_t k = 1 + rng() % 10;
        const auto got = retrieve(mem.store, text, k, expander, embedder);
        const auto want = reference_ranking(*snap, embedder.embed(text), k);
        std::vector<std::string> ids;
        for (const auto& sc : got) ids.push_back(sc.chunk.chunk_id);
        if (ids != want) {
            ++mismatches;
            o.fail("query '" + text + "' k=" + std::to_string(k) + " ranking differs");
        }
        for (const auto& sc : got) {
            if (std::abs(sc.score - reference_cosine(embedder.embed(text), sc.chunk.embedding)) > 1e-12) {
                o.fail("score drift for " + sc.chunk.chunk_id);
            }
        }
    }

    // Smaller random stores too, including ones with fewer chunks than k.
    for (int trial = 0; trial < 50; ++trial) {
        auto small = random_memory(rng, rng() % 30, cfg);
        chunk_and_index(small, summarizer, embedder, cfg);
        const auto text = random_text(rng, 3);
        const auto got = retrieve(small.store, text, cfg.top_k, expander, embedder);
        const auto want = reference_ranking(*small.store.snapshot(), embedder.embed(text), cfg.top_k);
        std::vector<std::string> ids;
        for (const auto& sc : got) ids.push_back(sc.chunk.chunk_id);
        if (ids != want) o.fail("small store trial " + std::to_string(trial) + " differs");
    }

    // Window budget under random appends.
    for (int trial = 0; trial < 200; ++trial) {
        ContextWindow w;
        w.budget = {1 + rng() % 20, 50 + rng() % 500};
        for (int i = 0; i < 100; ++i) {
            const auto kind = static_cast<EntryKind>(rng() % 4);
            w.append({kind, random_text(rng, 1 + rng() % 12), i});
            if (!w.within_budget()) {
                o.fail("window over budget in trial " + std::to_string(trial));
                break;
            }
        }
    }
    o.detail = "1000 chunks, " + std::to_string(queries) + " queries, " + std::to_string(mismatches) + " mismatches";
    return o;
}

// --- event stream over HTTP ---------------------------------------------------------

Outcome event_stream() {
    Outcome o;
    TempDir dir("acc-stream");
    const auto base = golden_program();
    std::atomic<std::uint64_t> program_seed{1};
    SessionManager manager(dir.path(), [&] {
        std::mt19937_64 rng(program_seed++);
        auto program = base;
        for (auto& r : program.rules) r.delay_ms = static_cast<int>(rng() % 15);
        SessionOptions so;
        so.providers = Providers::scripted(std::make_shared<ScriptedProvider>(program));
        so.clock = logical_clock();
        return so;
    });
    HttpServerOptions hopts;
    hopts.heartbeat = 200ms;
    HttpServer server(manager, hopts);
    const int port = server.start();

    const std::vector<std::string> phrases{
        "Give me three story concepts and a visual style description", "Yes, go ahead.", "hello there",
        "Develop three characters for this story", "Now write a story outline", "No, not now."};

    std::mutex fail_mutex;
    auto fail = [&](std::string why) {
        std::lock_guard lock(fail_mutex);
        o.fail(std::move(why));
    };
    std::atomic<std::size_t> frames_seen{0};

    auto one_session = [&](std::uint64_t seed) {
        std::mt19937_64 rng(seed * 7919);
        const auto tag = "session " + std::to_string(seed);
        httplib::Client cli("127.0.0.1", port);
        cli.set_read_timeout(30, 0);
        auto created = cli.Post("/sessions", json{{"brief", "an animated short, take " + std::to_string(seed)}}.dump(),
                                "application/json");
        if (!created || created->status != 201) {
            return fail(tag + ": create failed (" +
                        (created ? "status " + std::to_string(created->status) + " " + created->body
                                 : "transport " + httplib::to_string(created.error())) +
                        ")");
        }
        const auto sid = json::parse(created->body).at("session_id").get<std::string>();
        const auto path = "/sessions/" + sid + "/events";
        auto session = manager.get(sid);

        std::vector<std::string> texts{phrases[0], phrases[1]};
        const auto extra = rng() % 3;
        for (std::size_t i = 0; i < extra; ++i) texts.push_back(phrases[rng() % phrases.size()]);

        // The final request id is only known once posted; subscribers stop on a flag.
        std::atomic<bool> finished{false};
        std::atomic<std::int64_t> final_seq{0};
        auto until_final = [&](const std::vector<SseFrame>& frames) {
            return finished.load() && !frames.empty() && frames.back().id >= final_seq.load();
        };

        const std::size_t cut = 3 + rng() % 12;
        SseParser b;
        SseParser a1;
        SseParser a2;
        std::thread tb([&] { b = read_sse(port, path, {}, until_final); });
        std::thread ta([&] {
            a1 = read_sse(port, path, {}, [&](const std::vector<SseFrame>& f) { return f.size() >= cut || until_final(f); });
            const auto last = a1.frames.empty() ? 0 : a1.frames.back().id;
            if (until_final(a1.frames)) return;
            a2 = read_sse(port, path, {{"Last-Event-ID", std::to_string(last)}}, until_final);
        });

        for (const auto& t : texts) {
            auto res = cli.Post("/sessions/" + sid + "/messages", json{{"text", t}}.dump(), "application/json");
            if (!res || res->status != 202) {
                fail(tag + ": post failed (" +
                     (res ? "status " + std::to_string(res->status) + " " + res->body
                          : "transport " + httplib::to_string(res.error())) +
                     ")");
                break;
            }
            if (!session->wait_idle(30s)) fail(tag + ": request hung");
        }
        final_seq = session->events().last_seq();
        finished = true;
        tb.join();
        ta.join();

        const auto log = session->events().all();
        std::vector<SseFrame> a = a1.frames;
        a.insert(a.end(), a2.frames.begin(), a2.frames.end());
        auto check = [&](const std::vector<SseFrame>& frames, const std::string& who) {
            if (frames.size() != log.size()) {
                fail(tag + " " + who + ": " + std::to_string(frames.size()) + " frames vs " + std::to_string(log.size()) +
                     " events");
                return;
            }
            for (std::size_t i = 0; i < frames.size(); ++i) {
                if (frames[i].id != static_cast<std::int64_t>(i + 1)) {
                    fail(tag + " " + who + ": gap or reorder at " + std::to_string(i));
                    return;
                }
                if (frames[i].data != json(log[i])) {
                    fail(tag + " " + who + ": payload differs at " + std::to_string(i + 1));
                    return;
                }
            }
        };
        check(b.frames, "subscriber B");
        check(a, "subscriber A with reconnect");
        frames_seen += b.frames.size() + a.size();
    };

    constexpr std::uint64_t kSessions = 50;
    constexpr std::uint64_t kBatch = 10;
    for (std::uint64_t start = 1; start <= kSessions; start += kBatch) {
        std::vector<std::thread> batch;
        for (std::uint64_t s = start; s < start + kBatch && s <= kSessions; ++s) batch.emplace_back(one_session, s);
        for (auto& t : batch) t.join();
    }
    server.stop();
    o.detail = std::to_string(kSessions) + " sessions, " + std::to_string(frames_seen.load()) + " frames checked";
    return o;
}

// --- determinism ---------------------------------------------------------------------

Outcome determinism() {
    Outcome o;
    TempDir dir("acc-determinism");
    const auto sc = load_scenario(golden_scenario());
    struct Run {
        std::string events;
        std::string report;
        std::string project;
        std::map<std::string, std::string> assets;
    };
    auto run = [&](const std::string& name) {
        ScenarioOptions opts;
        opts.work_dir = dir.path() / name;
        opts.save_to = dir.path() / (name + ".project.json");
        const auto rep = run_scenario(sc, opts);
        Run r;
        json ev = json::array();
        for (const auto& e : rep.events) ev.push_back(e);
        r.events = mask_timestamps(ev).dump();
        r.report = report_to_json(rep).dump();
        r.project = read_bytes(*opts.save_to);
        for (const auto& entry : fs::recursive_directory_iterator(opts.work_dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
                r.assets[entry.path().filename().string()] = read_bytes(entry.path());
            }
        }
        return r;
    };
    const auto a = run("first");
    const auto b = run("second");
    if (a.events != b.events) o.fail("event sequences differ");
    if (a.report != b.report) o.fail("reports differ");
    if (a.project.empty() || a.project != b.project) o.fail("project files differ");
    if (a.assets != b.assets) o.fail("image assets differ");
    o.detail = std::to_string(a.events.size()) + " event bytes, " + std::to_string(a.project.size()) +
               " project bytes, " + std::to_string(a.assets.size()) + " images";
    return o;
}

} // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {"golden-workflow", golden_workflow},
        {"replace-vs-add", replace_vs_add},
        {"board-lineage-properties", board_sequences},
        {"validation-loop", validation_loop},
        {"rollback-totality", rollback_totality},
        {"memory-oracle", memory_oracle},
        {"event-stream-contract", event_stream},
        {"scripted-determinism", determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out.fail(std::string("threw: ") + e.what());
        }
        const auto secs = since(t0);
        std::printf("%s %s (%s; %.2f s)\n", out.passed ? "PASS" : "FAIL", c.name, out.detail.c_str(), secs);
        for (const auto& f : out.failures) std::printf("    %s\n", f.c_str());
        std::fflush(stdout);
        if (!out.passed) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
