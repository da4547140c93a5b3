// preprod: serve sessions over HTTP, run scenarios, export default prompts.

#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "preprod/error.hpp"
#include "preprod/http_server.hpp"
#include "preprod/prompts.hpp"
#include "preprod/scenario.hpp"
#include "preprod/session.hpp"

namespace fs = std::filesystem;
using namespace preprod;

namespace {

HttpServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

int print_report(const ScenarioReport& r, bool as_json) {
    if (as_json) {
        std::cout << report_to_json(r, true).dump(2) << "\n";
    } else {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.events.size() << " events, "
                  << r.seconds << " s)\n";
        for (const auto& a : r.assertions) {
            if (!a.passed) std::cout << "  failed: " << a.name << ": " << a.detail << "\n";
        }
        for (const auto& w : r.warnings) std::cout << "  warning: " << w << "\n";
        if (r.first_divergence) {
            const auto& d = *r.first_divergence;
            std::cout << "  first divergence: " << d.assertion << " at " << d.index << " expected " << d.expected
                      << " got " << d.actual << "\n";
        }
    }
    return r.passed ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"preprod: multi-agent animation pre-production engine"};
    app.require_subcommand(1);

    auto* serve = app.add_subcommand("serve", "Serve sessions over HTTP + SSE");
    int port = 8080;
    std::string host = "127.0.0.1";
    std::string root = "sessions";
    std::string config_file;
    std::string prompts_dir;
    std::string scripted_file;
    serve->add_option("--port", port, "Listen port");
    serve->add_option("--host", host, "Listen address");
    serve->add_option("--root", root, "Directory for session projects");
    serve->add_option("--config", config_file, "Engine config JSON")->check(CLI::ExistingFile);
    serve->add_option("--prompts", prompts_dir, "Prompt directory")->check(CLI::ExistingDirectory);
    serve->add_option("--scripted", scripted_file, "Use a scripted provider program instead of live providers")
        ->check(CLI::ExistingFile);

    auto* scenario = app.add_subcommand("scenario", "Scenario harness");
    scenario->require_subcommand(1);
    auto* run = scenario->add_subcommand("run", "Run one scenario file");
    auto* run_all = scenario->add_subcommand("run-all", "Run every *.json scenario in a directory");
    std::string scenario_path;
    std::string work_dir = "build/scenario-work";
    std::string save_to;
    std::string events_out;
    bool as_json = false;
    run->add_option("file", scenario_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
    run->add_option("--save", save_to, "Save the final project to this file");
    run->add_option("--events", events_out, "Write the event log (timestamps masked) to this file");
    run_all->add_option("dir", scenario_path, "Scenario directory")->required()->check(CLI::ExistingDirectory);
    for (auto* c : {run, run_all}) {
        c->add_option("--work-dir", work_dir, "Where scenario projects are created");
        c->add_flag("--json", as_json, "Print machine-readable reports");
    }

    auto* prompts = app.add_subcommand("prompts", "Prompt files");
    prompts->require_subcommand(1);
    auto* exp = prompts->add_subcommand("export", "Write the default prompt set");
    std::string export_dir;
    exp->add_option("dir", export_dir)->required();

    auto* config = app.add_subcommand("config", "Engine configuration");
    config->require_subcommand(1);
    auto* cexp = config->add_subcommand("export", "Write the default engine config");
    std::string config_out;
    cexp->add_option("file", config_out)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*serve) {
            const auto cfg = config_file.empty() ? EngineConfig::defaults() : EngineConfig::load(config_file);
            const auto pset = prompts_dir.empty() ? PromptSet::defaults() : PromptSet::load(prompts_dir);
            std::optional<ScriptedProgram> program;
            if (!scripted_file.empty()) program = ScriptedProgram::load(scripted_file);
            // Fail at startup, not on the first session.
            if (!program) (void)Providers::from_environment();
            SessionManager sessions(root, [=] {
                SessionOptions o;
                o.config = cfg;
                o.prompts = pset;
                o.providers = program ? Providers::scripted(std::make_shared<ScriptedProvider>(*program))
                                      : Providers::from_environment();
                return o;
            });
            HttpServerOptions opts;
            opts.host = host;
            HttpServer server(sessions, opts);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "listening on " << host << ":" << port << "\n";
            server.run(port);
            g_server = nullptr;
            return 0;
        }
        if (*run) {
            ScenarioOptions opts;
            opts.work_dir = work_dir;
            if (!save_to.empty()) opts.save_to = fs::path(save_to);
            const auto report = run_scenario(load_scenario(scenario_path), opts);
            if (!events_out.empty()) {
                std::ofstream out(events_out);
                out << mask_timestamps(json(report.events)).dump(2) << "\n";
            }
            return print_report(report, as_json);
        }
        if (*run_all) {
            std::vector<fs::path> files;
            for (const auto& e : fs::directory_iterator(scenario_path)) {
                if (e.is_regular_file() && e.path().extension() == ".json" &&
                    e.path().filename().string().find(".program.") == std::string::npos) {
                    files.push_back(e.path());
                }
            }
            std::sort(files.begin(), files.end());
            ScenarioOptions opts;
            opts.work_dir = work_dir;
            int failed = 0;
            for (const auto& f : files) failed += print_report(run_scenario(load_scenario(f), opts), as_json);
            std::cout << files.size() - failed << "/" << files.size() << " scenarios passed\n";
            return failed == 0 ? 0 : 1;
        }
        if (*exp) {
            PromptSet::defaults().save(export_dir);
            return 0;
        }
        if (*cexp) {
            std::ofstream out(config_out);
            out << json(EngineConfig::defaults()).dump(2) << "\n";
            return out ? 0 : 1;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
