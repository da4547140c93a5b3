#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "preprod/domain.hpp"

namespace preprod {

/// Prerequisites for producing a kind: every group must have at least one
/// canonical member. Soft rules only warn.
struct DependencyRule {
    std::vector<std::vector<ArtifactKind>> groups;
    bool soft = false;

    bool operator==(const DependencyRule&) const = default;
};

struct MemoryConfig {
    std::size_t chunk_size = 10;
    /// The most recent `horizon` transcript entries stay unchunked.
    std::size_t horizon = 20;
    std::size_t top_k = 3;
    std::size_t embedding_dim = 256;
    std::size_t summary_chars = 240;

    bool operator==(const MemoryConfig&) const = default;
};

struct ContextBudget {
    std::size_t max_entries = 40;
    std::size_t max_chars = 24000;

    bool operator==(const ContextBudget&) const = default;
};

/// Project configuration with documented defaults; see data/config/project.json.
struct EngineConfig {
    std::map<ArtifactKind, DependencyRule> dependencies;
    /// Canonical artifacts packaged as prior-stage context per requested kind.
    std::map<ArtifactKind, std::vector<ArtifactKind>> context_kinds;
    /// A stage is complete once every listed kind has a canonical block.
    std::map<Stage, std::vector<ArtifactKind>> completion;
    int max_revision_rounds = 2;
    std::size_t parallel_limit = 4;
    MemoryConfig memory;
    ContextBudget context_budget;
    std::size_t event_payload_cap = 256 * 1024;
    std::size_t max_events_per_request = 1000;
    /// "table" (deterministic keyword table) or "provider" (JSON intent contract).
    std::string intent_parser = "table";

    static EngineConfig defaults();
    static EngineConfig load(const std::filesystem::path& path);

    bool operator==(const EngineConfig&) const = default;
};

void to_json(json& j, const EngineConfig& c);
void from_json(const json& j, EngineConfig& c);

} // namespace preprod
