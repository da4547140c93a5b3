#pragma once

#include <optional>
#include <string>
#include <vector>

#include "preprod/domain.hpp"

namespace preprod {

/// Scene attributes carried by every scene-entry element.
inline const std::vector<std::string> kSceneAttributes{
    "scene number", "location", "time of day", "characters", "description", "styleframe slot"};

struct ElementRequirement {
    std::string element_kind;
    ContentType content_type = ContentType::Text;
    std::size_t min_count = 1;
    std::optional<std::size_t> max_count;
    /// Keys that must be present (values may be empty).
    std::vector<std::string> attributes;

    bool operator==(const ElementRequirement&) const = default;
};

struct ElementSchema {
    ArtifactKind kind;
    /// The element kind holding the artifact's selectable options or entries.
    std::string primary_element;
    std::vector<ElementRequirement> requirements;

    const ElementRequirement* find(std::string_view element_kind) const;

    bool operator==(const ElementSchema&) const = default;
};

/// Declared element structure for each artifact kind. Total and stable.
const ElementSchema& element_schema(ArtifactKind kind);

/// Schema conformance problems, one human-readable line per violation; each
/// line names the offending element kind or attribute. Empty when valid.
std::vector<std::string> schema_violations(ArtifactKind kind, const std::vector<Element>& elements);

json to_json(const ElementSchema& schema);

} // namespace preprod
