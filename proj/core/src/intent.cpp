#include <algorithm>
#include <cctype>

#include "preprod/core_agent.hpp"
#include "preprod/error.hpp"

namespace preprod {

namespace {

using K = ArtifactKind;

struct Phrase {
    std::string_view text;
    ArtifactKind kind;
};

// Longest phrases first so "story outline" wins over "story" and
// "character design" over "character".
const std::vector<Phrase>& kind_table() {
    static const std::vector<Phrase> table = [] {
        std::vector<Phrase> t{
            {"three act structure", K::ThreeActStructure}, {"three act", K::ThreeActStructure},
            {"3 act", K::ThreeActStructure},               {"act structure", K::ThreeActStructure},
            {"story outline", K::StoryOutline},            {"outline", K::StoryOutline},
            {"scene list", K::SceneList},                  {"scene breakdown", K::SceneList},
            {"list of scenes", K::SceneList},              {"shot list", K::StoryboardSequence},
            {"storyboard sequence", K::StoryboardSequence}, {"storyboard panel", K::StoryboardSequence},
            {"storyboard", K::StoryboardSequence},         {"panel", K::StoryboardSequence},
            {"styleframe", K::Styleframe},                 {"style frame", K::Styleframe},
            {"hero image", K::HeroImage},                  {"key art", K::HeroImage},
            {"poster", K::HeroImage},                      {"character sheet", K::CharacterSheet},
            {"character design", K::CharacterSheet},       {"design sheet", K::CharacterSheet},
            {"turnaround", K::CharacterSheet},             {"environment design", K::EnvironmentDesign},
            {"location design", K::EnvironmentDesign},     {"set design", K::EnvironmentDesign},
            {"environment", K::EnvironmentDesign},         {"character concept", K::CharacterConcept},
            {"character", K::CharacterConcept},            {"story concept", K::StoryConcept},
            {"story idea", K::StoryConcept},               {"concept", K::StoryConcept},
            {"premise", K::StoryConcept},                  {"logline", K::Logline},
            {"world concept", K::WorldConcept},            {"world building", K::WorldConcept},
            {"worldbuilding", K::WorldConcept},            {"world", K::WorldConcept},
            {"setting", K::WorldConcept},                  {"style description", K::StyleDescription},
            {"visual style", K::StyleDescription},         {"art style", K::StyleDescription},
            {"look and feel", K::StyleDescription},        {"style", K::StyleDescription},
            {"screenplay", K::Script},                     {"full script", K::Script},
            {"script", K::Script},
        };
        std::stable_sort(t.begin(), t.end(),
                         [](const Phrase& a, const Phrase& b) { return a.text.size() > b.text.size(); });
        return t;
    }();
    return table;
}

const std::vector<std::pair<std::string_view, Stage>> kStageWords{
    {"planning", Stage::Planning},     {"ideation", Stage::Ideation},     {"scripting", Stage::Scripting},
    {"design", Stage::Design},         {"storyboarding", Stage::Storyboard}, {"storyboard", Stage::Storyboard},
};

const std::vector<std::string_view> kStageVerbs{
    "move on to", "move to", "moving to", "move into", "go back to", "go to", "switch back to", "switch to",
    "back to",    "advance to", "proceed to", "jump to", "return to", "head to", "start",
};

const std::vector<std::string_view> kApprovals{
    "yes", "yeah", "yep", "yup", "ok", "okay", "sure", "go ahead", "proceed", "approve", "approved",
    "sounds good", "do it", "lets do it", "let s do it", "please do", "please proceed", "absolutely",
};

const std::vector<std::string_view> kRejections{
    "no", "nope", "not now", "cancel that", "don t", "dont", "never mind", "skip it", "hold off",
};

const std::vector<std::string_view> kRefinements{
    "darker", "lighter", "refine", "revise", "rewrite", "change", "tweak", "improve", "redo", "again",
    "another version", "funnier", "sadder", "shorter", "longer", "simpler", "more", "less", "adjust",
    "edit", "alternative", "variation", "make it", "make this", "make them",
};

const std::vector<std::pair<std::string_view, AgentRole>> kRoleWords{
    {"ideation", AgentRole::Ideation}, {"scripting", AgentRole::Scripting}, {"design", AgentRole::Design},
    {"art", AgentRole::Art},           {"core", AgentRole::Core},
};

const std::vector<std::string_view> kChannelTriggers{
    "directly", "talk to", "talk with", "chat with", "speak to", "speak with", "direct chat", "direct channel",
    "open a chat",
};

const std::vector<std::string_view> kChannelClose{
    "close the channel", "close channel", "end the chat", "back to the core", "return to the core",
    "back to core", "leave the channel", "exit the channel",
};

const std::vector<std::pair<std::string_view, int>> kNumbers{
    {"one", 1}, {"two", 2}, {"three", 3}, {"four", 4}, {"five", 5}, {"six", 6}, {"seven", 7},
    {"eight", 8}, {"nine", 9}, {"ten", 10}, {"a couple of", 2}, {"several", 3},
};

/// " lower case words separated by single spaces ".
std::string normalize(std::string_view text) {
    std::string out = " ";
    for (char c : text) {
        const auto uc = static_cast<unsigned char>(c);
        if (std::isalnum(uc)) {
            out.push_back(static_cast<char>(std::tolower(uc)));
        } else if (out.back() != ' ') {
            out.push_back(' ');
        }
    }
    if (out.back() != ' ') out.push_back(' ');
    return out;
}

bool contains_word(const std::string& s, std::string_view phrase) {
    return s.find(" " + std::string(phrase) + " ") != std::string::npos;
}

bool starts_with_word(const std::string& s, std::string_view phrase) {
    return s.starts_with(" " + std::string(phrase) + " ");
}

struct Match {
    std::size_t pos = 0;
    std::size_t len = 0;
};

/// Whole-word match, allowing a plural "s"/"es". Returns the earliest hit.
std::optional<Match> find_phrase(const std::string& s, std::string_view phrase) {
    std::optional<Match> best;
    for (std::string_view suffix : {"", "s", "es"}) {
        const std::string needle = " " + std::string(phrase) + std::string(suffix) + " ";
        const auto pos = s.find(needle);
        if (pos != std::string::npos && (!best || pos + 1 < best->pos)) best = Match{pos + 1, needle.size() - 2};
    }
    return best;
}

void mask(std::string& s, const Match& m) { std::fill_n(s.begin() + static_cast<std::ptrdiff_t>(m.pos), m.len, '_'); }

std::optional<int> number_before(const std::string& s, std::size_t pos) {
    // Up to three words before the phrase: "three story concepts",
    // "two more loglines", "3 new character concepts".
    std::vector<std::string> words;
    std::size_t end = pos;
    while (words.size() < 3 && end > 1) {
        const auto stop = end - 1;  // the space before the word at `end`
        const auto start = s.rfind(' ', stop - 1);
        if (start == std::string::npos || stop <= start + 1) break;
        words.push_back(s.substr(start + 1, stop - start - 1));
        end = start + 1;
    }
    for (const auto& w : words) {
        for (const auto& [name, value] : kNumbers) {
            if (w == name) return value;
        }
        if (!w.empty() && std::all_of(w.begin(), w.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }) &&
            w.size() <= 2) {
            const int v = std::stoi(w);
            if (v >= 1 && v <= 20) return v;
        }
    }
    return std::nullopt;
}

const std::vector<std::string_view> kReferenceMarkers{
    "this", "that", "these", "those", "selected", "current", "existing", "our", "my", "from", "on", "using",
};

/// The words right before `pos` point at existing work ("based on this
/// concept") rather than ask for new work.
bool is_reference(const std::string& s, std::size_t pos) {
    const auto before = s.substr(0, pos);
    for (auto w : kReferenceMarkers) {
        const std::string one = " " + std::string(w) + " ";
        if (before.ends_with(one)) return true;
        const auto cut = before.rfind(' ', before.size() >= 2 ? before.size() - 2 : 0);
        if (cut != std::string::npos && cut > 0 && before.substr(0, cut + 1).ends_with(one)) return true;
    }
    return false;
}

ArtifactKind story_kind_for(Stage s) {
    switch (s) {
    case Stage::Scripting: return K::StoryOutline;
    case Stage::Storyboard: return K::StoryboardSequence;
    default: return K::StoryConcept;
    }
}

} // namespace

ParsedIntent KeywordIntentParser::parse(const std::string& message, Stage current, const RequestControl&) {
    ParsedIntent out;
    std::string s = normalize(message);

    for (auto w : kApprovals) {
        if (starts_with_word(s, w)) out.approve = true;
    }
    if (!out.approve) {
        for (auto w : kRejections) {
            if (starts_with_word(s, w)) out.reject = true;
        }
    }
    for (auto w : kChannelClose) {
        if (contains_word(s, w)) out.close_channel = true;
    }

    const bool channel_trigger =
        std::any_of(kChannelTriggers.begin(), kChannelTriggers.end(), [&](auto w) { return contains_word(s, w); });
    if (channel_trigger && !out.close_channel) {
        for (const auto& [word, role] : kRoleWords) {
            const std::string phrase = std::string(word) + " agent";
            if (auto m = find_phrase(s, phrase)) {
                out.open_channel = role;
                mask(s, *m);
                break;
            }
        }
    }

    // Explicit stage requests: "<verb> [the] <stage> [stage]" or "<stage> stage".
    for (const auto& [word, stage] : kStageWords) {
        if (out.explicit_stage) break;
        for (auto verb : kStageVerbs) {
            for (std::string_view article : {"", "the "}) {
                const auto phrase = std::string(verb) + " " + std::string(article) + std::string(word);
                const auto stage_phrase = phrase + " stage";
                std::optional<Match> m = find_phrase(s, stage_phrase);
                if (!m && verb != "start") m = find_phrase(s, phrase);
                if (m) {
                    out.explicit_stage = stage;
                    mask(s, *m);
                    break;
                }
            }
            if (out.explicit_stage) break;
        }
        if (!out.explicit_stage) {
            if (auto m = find_phrase(s, std::string(word) + " stage")) {
                out.explicit_stage = stage;
                mask(s, *m);
            }
        }
    }

    // Masking keeps offsets, so match positions index the original text.
    const std::string original = normalize(message);
    std::vector<std::pair<std::size_t, ArtifactKind>> found;
    for (const auto& p : kind_table()) {
        while (auto m = find_phrase(s, p.text)) {
            const auto known = std::find_if(found.begin(), found.end(), [&](const auto& f) { return f.second == p.kind; });
            if (known == found.end()) {
                found.emplace_back(m->pos, p.kind);
            } else {
                known->first = std::min(known->first, m->pos);
            }
            mask(s, *m);
        }
    }
    std::stable_sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    if (found.size() > 1) {
        decltype(found) requested;
        for (const auto& f : found) {
            if (!is_reference(original, f.first)) requested.push_back(f);
        }
        if (!requested.empty()) found = std::move(requested);
    }
    for (const auto& f : found) out.kinds.push_back(f.second);
    if (!found.empty()) out.count = number_before(original, found.front().first);

    for (auto w : kRefinements) {
        if (contains_word(s, w)) out.refinement = true;
    }

    if (out.kinds.empty() && !out.approve && !out.reject && contains_word(s, "story")) {
        const ArtifactKind k = story_kind_for(current);
        out.kinds.push_back(k);
        out.ambiguous = true;
        out.ambiguity = "\"story\" could mean several artifacts; I read it as a " + display_name(k) + ".";
    }
    return out;
}

ParsedIntent intent_from_json(const json& j) {
    ParsedIntent out;
    out.approve = j.value("approve", false);
    out.reject = j.value("reject", false);
    out.close_channel = j.value("close_channel", false);
    out.refinement = j.value("refinement", false);
    out.ambiguous = j.value("ambiguous", false);
    out.ambiguity = j.value("ambiguity", std::string{});
    if (auto it = j.find("kinds"); it != j.end() && it->is_array()) {
        for (const auto& k : *it) {
            const auto kind = k.is_string() ? parse_kind(k.get<std::string>()) : std::nullopt;
            if (!kind) throw Error(Errc::MalformedOutput, "intent names unknown kind " + k.dump());
            out.kinds.push_back(*kind);
        }
    }
    if (auto it = j.find("count"); it != j.end() && it->is_number_integer()) out.count = it->get<int>();
    if (auto it = j.find("stage"); it != j.end() && it->is_string()) {
        out.explicit_stage = parse_stage(it->get<std::string>());
        if (!out.explicit_stage) throw Error(Errc::MalformedOutput, "intent names unknown stage " + it->dump());
    }
    if (auto it = j.find("open_channel"); it != j.end() && it->is_string()) {
        out.open_channel = parse_role(it->get<std::string>());
        if (!out.open_channel) throw Error(Errc::MalformedOutput, "intent names unknown role " + it->dump());
    }
    return out;
}

ParsedIntent ProviderIntentParser::parse(const std::string& message, Stage current, const RequestControl& control) {
    ProviderRequest req;
    req.role = AgentRole::Core;
    req.stage = current;
    req.purpose = "intent";
    req.instruction = message;
    std::string kinds;
    for (ArtifactKind k : kAllKinds) kinds += std::string(kinds.empty() ? "" : ", ") + std::string(to_string(k));
    req.prompt = "Classify the creator's message for an animation pre-production assistant. Current stage: " +
                 display_name(current) +
                 ".\nAnswer with one JSON object with keys approve (bool), reject (bool), kinds (list from: " +
                 kinds +
                 "), count (int or null), stage (explicitly requested stage or null), open_channel (role or "
                 "null), close_channel (bool), refinement (bool).\n\nMessage:\n" +
                 message + "\n";
    control.checkpoint("before-provider-call");
    const auto raw = provider_->complete(req, control.cancel);
    control.checkpoint("after-provider-response");
    const auto open = raw.find('{');
    const auto close = raw.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) {
        throw Error(Errc::MalformedOutput, "intent reply contains no JSON object");
    }
    const json doc = json::parse(raw.substr(open, close - open + 1), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw Error(Errc::MalformedOutput, "intent reply is not JSON");
    return intent_from_json(doc);
}

std::vector<ArtifactKind> unmet_completion(const ProjectState& state, const EngineConfig& config, Stage stage) {
    std::vector<ArtifactKind> out;
    if (const auto it = config.completion.find(stage); it != config.completion.end()) {
        for (ArtifactKind k : it->second) {
            if (!state.progress.canonical_block(k)) out.push_back(k);
        }
    }
    return out;
}

StageResolution determine_stage(const ParsedIntent& intent, Stage current, const ProjectState& state,
                                const EngineConfig& config) {
    StageResolution r;
    r.stage = current;
    r.ambiguous = intent.ambiguous;
    if (intent.explicit_stage) {
        r.stage = *intent.explicit_stage;
        r.explicit_request = true;
        return r;
    }
    if (intent.kinds.empty()) return r;
    const Stage target = board_of(intent.kinds.front());
    if (target == current || stage_order(target) < stage_order(current)) {
        r.stage = target;
        return r;
    }
    if (stage_complete(state, config, current)) {
        r.stage = target;
        return r;
    }
    r.gated = true;
    r.wanted = target;
    r.unmet = unmet_completion(state, config, current);
    return r;
}

StageResolution determine_stage(const std::string& request, Stage current, const ProjectState& state,
                                const EngineConfig& config) {
    KeywordIntentParser parser;
    return determine_stage(parser.parse(request, current, {}), current, state, config);
}

} // namespace preprod
