#include "preprod/scenario.hpp"

#include <fstream>
#include <set>

#include "preprod/error.hpp"
#include "preprod/project.hpp"
#include "preprod/session.hpp"

namespace preprod {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error(Errc::ScenarioMalformed, what); }

template <typename T, typename Parse>
T parse_name(const json& v, Parse parse, const std::string& what) {
    if (!v.is_string()) malformed(what + " must be a string");
    const auto out = parse(v.get<std::string>());
    if (!out) malformed("unknown " + what + " '" + v.get<std::string>() + "'");
    return *out;
}

ArtifactKind kind_of(const json& v) { return parse_name<ArtifactKind>(v, parse_kind, "kind"); }
Stage stage_of(const json& v) { return parse_name<Stage>(v, parse_stage, "stage"); }

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
    return out;
}

} // namespace

std::size_t ScenarioExpect::count() const {
    std::size_t n = canonical.size() + lineage.size();
    for (const auto& [stage, kinds] : board_counts) n += kinds.size();
    n += branch_children.size();
    if (stage_sequence) ++n;
    if (event_kinds) ++n;
    if (request_status) ++n;
    if (max_seconds) ++n;
    return n;
}

Scenario scenario_from_json(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) malformed("scenario must be a JSON object");
    Scenario sc;
    try {
        sc.name = j.value("name", std::string{});
        if (sc.name.empty()) malformed("scenario needs a name");
        sc.brief = j.value("brief", std::string{});
        if (j.contains("config")) sc.config = j.at("config").get<EngineConfig>();
        if (j.contains("program")) {
            sc.program = j.at("program").get<ScriptedProgram>();
        } else if (j.contains("program_file")) {
            sc.program = ScriptedProgram::load(base_dir / j.at("program_file").get<std::string>());
        }

        std::set<std::string> labels;
        for (const auto& a : j.value("actions", json::array())) {
            ScenarioAction act;
            act.type = a.value("type", std::string("message"));
            act.text = a.value("text", std::string{});
            if (act.type == "approve") {
                if (act.text.empty()) act.text = "Yes, go ahead.";
            } else if (act.type == "open_channel") {
                act.role = parse_name<AgentRole>(a.at("role"), parse_role, "role");
                if (act.text.empty()) act.text = "I want to talk to the " + std::string(to_string(*act.role)) + " agent directly.";
            } else if (act.type == "close_channel") {
                if (act.text.empty()) act.text = "Take me back to the core.";
            } else if (act.type == "message" || act.type == "cancel") {
                if (act.text.empty()) malformed("a " + act.type + " action needs text");
                act.cancel_on_status = a.value("cancel_on_status", act.cancel_on_status);
            } else {
                malformed("unknown action type '" + act.type + "'");
            }
            if (a.contains("select")) {
                const auto& s = a.at("select");
                ScenarioSelect sel;
                sel.label = s.at("label").get<std::string>();
                if (!labels.contains(sel.label)) malformed("selection label '" + sel.label + "' is not defined earlier");
                sel.elements = s.value("elements", std::vector<std::string>{});
                if (s.contains("version")) sel.version = s.at("version").get<int>();
                act.select = std::move(sel);
            }
            const json label_map = a.value("labels", json::object());
            for (const auto& [label, kind] : label_map.items()) {
                act.labels[label] = kind_of(kind);
            }
            for (const auto& [label, kind] : act.labels) labels.insert(label);
            sc.actions.push_back(std::move(act));
        }

        const auto e = j.value("expect", json::object());
        if (e.contains("stage_sequence")) {
            std::vector<Stage> seq;
            for (const auto& s : e.at("stage_sequence")) seq.push_back(stage_of(s));
            sc.expect.stage_sequence = std::move(seq);
        }
        if (e.contains("event_kinds")) {
            std::vector<EventKind> kinds;
            for (const auto& k : e.at("event_kinds")) kinds.push_back(parse_name<EventKind>(k, parse_event_kind, "event kind"));
            sc.expect.event_kinds = std::move(kinds);
        }
        for (const auto& k : e.value("canonical", json::array())) sc.expect.canonical.push_back(kind_of(k));
        const json counts = e.value("board_counts", json::object());
        for (const auto& [stage, kinds] : counts.items()) {
            for (const auto& [kind, n] : kinds.items()) sc.expect.board_counts[stage_of(stage)][kind_of(kind)] = n.get<int>();
        }
        const json branches = e.value("branch_children", json::object());
        for (const auto& [stage, n] : branches.items()) {
            sc.expect.branch_children[stage_of(stage)] = n.get<int>();
        }
        for (const auto& l : e.value("lineage", json::array())) {
            LineageExpectation le{l.at("child").get<std::string>(), l.at("parent").get<std::string>()};
            if (!labels.contains(le.child) || !labels.contains(le.parent)) {
                malformed("lineage expectation uses an undefined label");
            }
            sc.expect.lineage.push_back(std::move(le));
        }
        if (e.contains("request_status")) sc.expect.request_status = e.at("request_status").get<std::vector<std::string>>();
        if (e.contains("max_seconds")) sc.expect.max_seconds = e.at("max_seconds").get<double>();
    } catch (const json::exception& ex) {
        malformed(std::string("scenario field has the wrong shape: ") + ex.what());
    } catch (const Error& ex) {
        if (ex.code() == Errc::ScenarioMalformed) throw;
        malformed(ex.what());
    }
    if (!sc.actions.empty() && sc.brief.find_first_not_of(" \t\r\n") == std::string::npos) {
        malformed("scenario with actions needs a brief");
    }
    return sc;
}

Scenario load_scenario(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(Errc::IoFailure, "cannot read scenario " + file.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        malformed(file.string() + " is not JSON: " + e.what());
    }
    return scenario_from_json(doc, file.parent_path());
}

json mask_timestamps(json value) {
    if (value.is_object()) {
        for (auto& [key, v] : value.items()) {
            if (key == "timestamp" || key == "created_at" || key == "start_time" || key == "end_time") {
                v = 0;
            } else {
                v = mask_timestamps(std::move(v));
            }
        }
    } else if (value.is_array()) {
        for (auto& v : value) v = mask_timestamps(std::move(v));
    }
    return value;
}

ScenarioReport run_scenario(const Scenario& sc, const ScenarioOptions& options) {
    const auto started = std::chrono::steady_clock::now();
    ScenarioReport report;
    report.name = sc.name;

    if (sc.actions.empty() && sc.expect.count() == 0) {
        report.warnings.push_back("scenario has no actions and no assertions; passing vacuously");
        return report;
    }

    const auto dir = (options.work_dir.empty() ? fs::temp_directory_path() : options.work_dir) / sc.name;
    std::error_code ec;
    fs::remove_all(dir, ec);
    fs::create_directories(dir, ec);

    auto provider = std::make_shared<ScriptedProvider>(sc.program);
    SessionOptions so;
    so.config = sc.config;
    so.providers = Providers::scripted(provider);
    so.clock = logical_clock();
    so.hook = options.hook;
    auto session = Session::create("scenario", sc.brief, dir, so);

    std::map<std::string, std::string> labels;
    bool timed_out = false;
    for (std::size_t i = 0; i < sc.actions.size(); ++i) {
        const auto& act = sc.actions[i];
        ActionRecord rec;
        rec.index = i;
        rec.type = act.type;
        if (options.record_states) rec.pre_state = workspace_to_json(session->workspace());

        UserTurn turn;
        turn.text = act.text;
        if (act.select) {
            const auto it = labels.find(act.select->label);
            if (it == labels.end()) malformed("label '" + act.select->label + "' was never published");
            const auto ws = session->workspace();
            const auto& block = ws.project.boards.block(it->second);
            turn.selection = Selection{block.block_id, act.select->version.value_or(block.active_version),
                                       act.select->elements};
        }

        const auto from_seq = session->events().last_seq() + 1;
        rec.request_id = session->post_message(std::move(turn));
        if (act.type == "cancel") {
            auto sub = session->events().subscribe(from_seq);
            while (auto e = sub.next(options.action_timeout)) {
                if (e->event_kind == EventKind::Done) break;
                if (e->event_kind == EventKind::AgentStatus && e->payload.value("status", "") == act.cancel_on_status) {
                    try {
                        session->cancel(rec.request_id);
                    } catch (const Error&) {
                    }
                    break;
                }
            }
        }
        if (!session->wait_idle(options.action_timeout)) {
            timed_out = true;
            report.warnings.push_back("action " + std::to_string(i) + " timed out");
            break;
        }

        for (const auto& e : session->events().since(from_seq)) {
            if (e.event_kind == EventKind::Done) rec.status = e.payload.value("status", "");
            if (e.event_kind != EventKind::BlockPublished) continue;
            for (const auto& [label, kind] : act.labels) {
                if (!labels.contains(label) && e.payload.value("kind", "") == to_string(kind)) {
                    labels[label] = e.payload.value("block_id", "");
                }
            }
        }
        for (const auto& [label, kind] : act.labels) {
            if (!labels.contains(label)) {
                report.warnings.push_back("action " + std::to_string(i) + " published no " +
                                          std::string(to_string(kind)) + " for label '" + label + "'");
            }
        }
        if (options.record_states) {
            rec.post_state = workspace_to_json(session->workspace());
            rec.states_equal = rec.pre_state == rec.post_state;
        }
        const bool failed = rec.status != "ok";
        report.actions.push_back(std::move(rec));
        if (failed && options.stop_on_failure) break;
    }

    session->wait_idle(options.action_timeout);
    report.events = session->events().all();
    const auto ws = session->workspace();
    report.project = project_to_json(ws.project);
    if (options.save_to) session->save(*options.save_to);
    session.reset();
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    auto add = [&](std::string name, bool ok, std::string detail, std::optional<Divergence> div = std::nullopt) {
        report.assertions.push_back({name, ok, detail});
        if (!ok) {
            report.passed = false;
            if (!report.first_divergence) {
                report.first_divergence = div ? *div : Divergence{std::move(name), 0, "", std::move(detail)};
            }
        }
    };
    auto compare = [&](const std::string& name, const std::vector<std::string>& expected,
                       const std::vector<std::string>& actual) {
        const auto n = std::max(expected.size(), actual.size());
        for (std::size_t k = 0; k < n; ++k) {
            const auto want = k < expected.size() ? expected[k] : "<end>";
            const auto got = k < actual.size() ? actual[k] : "<end>";
            if (want != got) {
                add(name, false, "index " + std::to_string(k) + ": expected " + want + ", got " + got,
                    Divergence{name, k, want, got});
                return;
            }
        }
        add(name, true, join(actual));
    };

    if (timed_out) add("completion", false, "an action did not finish in time");

    if (sc.expect.stage_sequence) {
        std::vector<std::string> expected, actual;
        for (Stage s : *sc.expect.stage_sequence) expected.emplace_back(to_string(s));
        for (const auto& e : report.events) {
            if (e.event_kind == EventKind::StageChanged) actual.push_back(e.payload.value("to", ""));
        }
        compare("stage_sequence", expected, actual);
    }
    if (sc.expect.event_kinds) {
        std::vector<std::string> expected, actual;
        for (EventKind k : *sc.expect.event_kinds) expected.emplace_back(to_string(k));
        for (const auto& e : report.events) actual.emplace_back(to_string(e.event_kind));
        compare("event_kinds", expected, actual);
    }
    if (sc.expect.request_status) {
        std::vector<std::string> actual;
        for (const auto& a : report.actions) actual.push_back(a.status);
        compare("request_status", *sc.expect.request_status, actual);
    }
    for (ArtifactKind k : sc.expect.canonical) {
        const auto id = ws.project.progress.canonical_block(k);
        add("canonical " + std::string(to_string(k)), id.has_value(), id.value_or("none"));
    }
    for (const auto& [stage, kinds] : sc.expect.board_counts) {
        for (const auto& [kind, want] : kinds) {
            int n = 0;
            for (const auto& [id, b] : ws.project.boards.board(stage).blocks) n += b.kind == kind ? 1 : 0;
            add("board " + std::string(to_string(stage)) + " " + std::string(to_string(kind)) + " >= " +
                    std::to_string(want),
                n >= want, std::to_string(n));
        }
    }
    for (const auto& [stage, want] : sc.expect.branch_children) {
        int n = 0;
        for (const auto& [id, b] : ws.project.boards.board(stage).blocks) n += b.parent_id ? 1 : 0;
        add("branch children " + std::string(to_string(stage)) + " >= " + std::to_string(want), n >= want,
            std::to_string(n));
    }
    for (const auto& l : sc.expect.lineage) {
        const auto c = labels.find(l.child);
        const auto p = labels.find(l.parent);
        bool ok = false;
        std::string detail = "label unresolved";
        if (c != labels.end() && p != labels.end()) {
            const auto* child = ws.project.boards.find(c->second);
            ok = child != nullptr && child->parent_id == p->second;
            detail = c->second + " parent " + (child && child->parent_id ? *child->parent_id : std::string("none"));
        }
        add("lineage " + l.child + " <- " + l.parent, ok, detail);
    }
    if (sc.expect.max_seconds) {
        add("max_seconds", report.seconds < *sc.expect.max_seconds, "within limit");
    }
    if (report.assertions.empty()) report.warnings.push_back("scenario has no assertions; passing vacuously");
    return report;
}

json report_to_json(const ScenarioReport& r, bool include_timing) {
    json assertions = json::array();
    for (const auto& a : r.assertions) assertions.push_back({{"name", a.name}, {"passed", a.passed}, {"detail", a.detail}});
    json actions = json::array();
    for (const auto& a : r.actions) {
        actions.push_back({{"index", a.index}, {"type", a.type}, {"request_id", a.request_id}, {"status", a.status}});
    }
    json out{{"name", r.name},
             {"passed", r.passed},
             {"assertions", assertions},
             {"warnings", r.warnings},
             {"actions", actions},
             {"event_count", r.events.size()}};
    if (r.first_divergence) {
        const auto& d = *r.first_divergence;
        out["first_divergence"] = {{"assertion", d.assertion}, {"index", d.index}, {"expected", d.expected}, {"actual", d.actual}};
    } else {
        out["first_divergence"] = nullptr;
    }
    if (include_timing) out["seconds"] = r.seconds;
    return out;
}

} // namespace preprod
