#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace preprod {

enum class Errc {
    UnknownParent,
    UnknownBlock,
    SchemaViolation,
    StageKindMismatch,
    BadIndex,
    StaleSelection,
    InvalidSelection,
    IoFailure,
    FormatVersionMismatch,
    FormatError,
    ProviderFailure,
    MalformedOutput,
    NoSuchTool,
    AllSlotsCancelled,
    ChannelAlreadyOpen,
    NoChannel,
    RoleInvalid,
    MissingDependency,
    ExhaustedRevisions,
    MissingPromptFile,
    PreconditionViolation,
    AssetWriteFailure,
    Busy,
    NoSuchRequest,
    UnknownSession,
    BadBrief,
    Cancelled,
    ScenarioMalformed,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure surfaced by the engine. `details` carries machine-readable
/// specifics (missing attributes, provider fault reason, ...).
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message, std::vector<std::string> details = {});

    Errc code() const noexcept { return code_; }
    const std::vector<std::string>& details() const noexcept { return details_; }

private:
    Errc code_;
    std::vector<std::string> details_;
};

} // namespace preprod
