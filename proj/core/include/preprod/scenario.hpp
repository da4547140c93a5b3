#pragma once

// Data-driven end-to-end scenarios: scripted user actions against a real
// session with a scripted provider, followed by assertions on the outcome.

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "preprod/cancellation.hpp"
#include "preprod/config.hpp"
#include "preprod/domain.hpp"
#include "preprod/event_log.hpp"
#include "preprod/provider.hpp"

namespace preprod {

struct ScenarioSelect {
    std::string label;
    /// Empty means the whole block.
    std::vector<std::string> elements;
    /// Defaults to the block's active version.
    std::optional<int> version;
};

struct ScenarioAction {
    /// "message", "approve", "cancel", "open_channel", "close_channel".
    std::string type = "message";
    std::string text;
    std::optional<ScenarioSelect> select;
    /// Labels for blocks published by this action: label -> kind (first
    /// block of that kind published during the action).
    std::map<std::string, ArtifactKind> labels;
    /// cancel: agent status that triggers the cancel ("executing" default).
    std::string cancel_on_status = "executing";
    /// open_channel: role to open.
    std::optional<AgentRole> role;
};

struct LineageExpectation {
    std::string child;
    std::string parent;
};

struct ScenarioExpect {
    std::optional<std::vector<Stage>> stage_sequence;
    std::optional<std::vector<EventKind>> event_kinds;
    std::vector<ArtifactKind> canonical;
    /// stage -> kind -> minimum block count.
    std::map<Stage, std::map<ArtifactKind, int>> board_counts;
    /// stage -> minimum number of blocks with a parent.
    std::map<Stage, int> branch_children;
    std::vector<LineageExpectation> lineage;
    /// Expected done status per action ("ok", "failed", "cancelled").
    std::optional<std::vector<std::string>> request_status;
    std::optional<double> max_seconds;

    std::size_t count() const;
};

struct Scenario {
    std::string name;
    std::string brief;
    EngineConfig config = EngineConfig::defaults();
    ScriptedProgram program;
    std::vector<ScenarioAction> actions;
    ScenarioExpect expect;
};

/// Throws scenario-malformed on structural problems.
Scenario scenario_from_json(const json& j, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& file);

struct AssertionResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct Divergence {
    std::string assertion;
    std::size_t index = 0;
    std::string expected;
    std::string actual;
};

struct ActionRecord {
    std::size_t index = 0;
    std::string type;
    std::string request_id;
    std::string status;
    /// Workspace JSON before/after, when ScenarioOptions::record_states.
    json pre_state;
    json post_state;
    bool states_equal = false;
};

struct ScenarioReport {
    std::string name;
    bool passed = true;
    std::vector<AssertionResult> assertions;
    std::optional<Divergence> first_divergence;
    std::vector<std::string> warnings;
    std::vector<ActionRecord> actions;
    std::vector<SessionEvent> events;
    json project;
    double seconds = 0.0;
};

struct ScenarioOptions {
    /// Parent of the scenario's project directory (created fresh).
    std::filesystem::path work_dir;
    SafePointHook hook;
    /// Stop after the first action whose request does not finish ok.
    bool stop_on_failure = false;
    bool record_states = false;
    std::chrono::milliseconds action_timeout{30000};
    /// Saves the final project here when set.
    std::optional<std::filesystem::path> save_to;
};

ScenarioReport run_scenario(const Scenario& scenario, const ScenarioOptions& options);

/// Deterministic machine-readable report (no timing unless asked).
json report_to_json(const ScenarioReport& report, bool include_timing = false);

/// Event JSON with timestamps replaced by 0.
json mask_timestamps(json value);

} // namespace preprod
