#include "preprod/project.hpp"

#include <fstream>

#include "preprod/assets.hpp"
#include "preprod/error.hpp"

namespace preprod {

json project_to_json(const ProjectState& s) {
    return json{
        {"format", "preprod-project"},
        {"format_version", kProjectFormatVersion},
        {"current_stage", s.current_stage},
        {"last_published", s.last_published ? json(*s.last_published) : json(nullptr)},
        {"progress", s.progress},
        {"board_store", s.boards},
        {"memory", s.memory},
        {"id_counters", s.ids.counters()},
    };
}

ProjectState project_from_json(const json& doc) {
    const int version = doc.value("format_version", -1);
    if (version != kProjectFormatVersion) {
        throw Error(Errc::FormatVersionMismatch, "project format version " + std::to_string(version) +
                                                     " is not supported (expected " +
                                                     std::to_string(kProjectFormatVersion) + ")");
    }
    try {
        ProjectState s;
        s.current_stage = doc.value("current_stage", Stage::Planning);
        if (auto it = doc.find("last_published"); it != doc.end() && !it->is_null()) {
            s.last_published = it->get<std::string>();
        }
        s.progress = doc.value("progress", ProgressRecord{});
        s.boards = doc.at("board_store").get<BoardStore>();
        s.memory = doc.value("memory", LongTermMemory{});
        s.ids.restore(doc.value("id_counters", std::map<std::string, std::int64_t>{}));
        return s;
    } catch (const json::exception& e) {
        throw Error(Errc::FormatError, std::string("malformed project document: ") + e.what());
    }
}

void save_project(const std::filesystem::path& file, const ProjectState& state, const AssetStore& assets) {
    std::error_code ec;
    const auto dir = file.has_parent_path() ? file.parent_path() : std::filesystem::path(".");
    std::filesystem::create_directories(dir, ec);
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out << project_to_json(state).dump(2) << "\n";
    if (!out) throw Error(Errc::IoFailure, "cannot write project " + file.string());
    out.close();
    assets.copy_to(dir);
}

ProjectState load_project(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(Errc::IoFailure, "cannot read project " + file.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(Errc::FormatError, "project " + file.string() + " is not JSON: " + e.what());
    }
    return project_from_json(doc);
}

bool stage_complete(const ProjectState& state, const EngineConfig& config, Stage stage) {
    if (stage == Stage::Planning) return !state.progress.project_brief.empty();
    const auto it = config.completion.find(stage);
    if (it == config.completion.end() || it->second.empty()) return false;
    for (ArtifactKind k : it->second) {
        if (!state.progress.canonical_block(k)) return false;
    }
    return true;
}

void refresh_stage_status(ProjectState& state, const EngineConfig& config) {
    for (Stage s : kAllStages) {
        StageStatus st = StageStatus::NotStarted;
        if (stage_complete(state, config, s)) {
            st = StageStatus::Complete;
        } else if (s == state.current_stage || (has_board(s) && !state.boards.board(s).blocks.empty())) {
            st = StageStatus::InProgress;
        }
        state.progress.stage_status[s] = st;
    }
}

std::vector<std::string> check_project_invariants(const ProjectState& state) {
    auto out = state.boards.check_invariants();
    for (const auto& [stage, kinds] : state.progress.canonical) {
        for (const auto& [kind, id] : kinds) {
            const auto* b = state.boards.find(id);
            if (b == nullptr) {
                out.push_back("canonical " + std::string(to_string(kind)) + " -> missing block " + id);
            } else if (b->kind != kind || b->stage != stage) {
                out.push_back("canonical " + std::string(to_string(kind)) + " -> block " + id + " of another kind");
            }
        }
    }
    return out;
}

} // namespace preprod
