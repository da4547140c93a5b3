#include "preprod/error.hpp"

namespace preprod {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
    case Errc::UnknownParent: return "unknown-parent";
    case Errc::UnknownBlock: return "unknown-block";
    case Errc::SchemaViolation: return "schema-violation";
    case Errc::StageKindMismatch: return "stage-kind-mismatch";
    case Errc::BadIndex: return "bad-index";
    case Errc::StaleSelection: return "stale-selection";
    case Errc::InvalidSelection: return "invalid-selection";
    case Errc::IoFailure: return "io-failure";
    case Errc::FormatVersionMismatch: return "format-version-mismatch";
    case Errc::FormatError: return "format-error";
    case Errc::ProviderFailure: return "provider-failure";
    case Errc::MalformedOutput: return "malformed-output";
    case Errc::NoSuchTool: return "no-such-tool";
    case Errc::AllSlotsCancelled: return "all-slots-cancelled";
    case Errc::ChannelAlreadyOpen: return "channel-already-open";
    case Errc::NoChannel: return "no-channel";
    case Errc::RoleInvalid: return "role-invalid";
    case Errc::MissingDependency: return "missing-dependency";
    case Errc::ExhaustedRevisions: return "exhausted-revisions";
    case Errc::MissingPromptFile: return "missing-prompt-file";
    case Errc::PreconditionViolation: return "precondition-violation";
    case Errc::AssetWriteFailure: return "asset-write-failure";
    case Errc::Busy: return "busy";
    case Errc::NoSuchRequest: return "no-such-request";
    case Errc::UnknownSession: return "unknown-session";
    case Errc::BadBrief: return "bad-brief";
    case Errc::Cancelled: return "cancelled";
    case Errc::ScenarioMalformed: return "scenario-malformed";
    }
    return "unknown";
}

Error::Error(Errc code, const std::string& message, std::vector<std::string> details)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      details_(std::move(details)) {}

} // namespace preprod
