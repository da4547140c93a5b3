#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "preprod/board_store.hpp"
#include "preprod/config.hpp"
#include "preprod/domain.hpp"
#include "preprod/memory.hpp"

namespace preprod {

class AssetStore;

inline constexpr int kProjectFormatVersion = 1;

/// Everything persisted in a project file.
struct ProjectState {
    BoardStore boards;
    ProgressRecord progress;
    LongTermMemory memory;
    IdGenerator ids;
    Stage current_stage = Stage::Planning;
    /// Block referenced by the latest publication (default context).
    std::optional<std::string> last_published;

    bool operator==(const ProjectState&) const = default;
};

json project_to_json(const ProjectState& state);
/// Throws format-version-mismatch when the document's version differs.
ProjectState project_from_json(const json& doc);

/// Writes the project JSON to `file` and copies assets next to it
/// (`<dir of file>/assets/`).
void save_project(const std::filesystem::path& file, const ProjectState& state, const AssetStore& assets);
ProjectState load_project(const std::filesystem::path& file);

/// Recomputes stage_status from the completion criteria and current stage.
void refresh_stage_status(ProjectState& state, const EngineConfig& config);

/// True when every completion kind for `stage` has a canonical block
/// (Planning: a brief exists).
bool stage_complete(const ProjectState& state, const EngineConfig& config, Stage stage);

/// Invariants across boards and progress record (canonical ids exist with
/// matching kinds, board invariants).
std::vector<std::string> check_project_invariants(const ProjectState& state);

} // namespace preprod
