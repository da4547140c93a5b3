#include "preprod/agents.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "preprod/assets.hpp"
#include "preprod/board_store.hpp"
#include "preprod/error.hpp"
#include "preprod/schema.hpp"

namespace preprod {

const std::vector<ToolDef>& tool_registry() {
    static const std::vector<ToolDef> tools = [] {
        std::vector<ToolDef> out;
        for (ArtifactKind k : kAllKinds) out.push_back({tool_name(k), owner_of(k), k});
        return out;
    }();
    return tools;
}

const ToolDef* find_tool(AgentRole role, ArtifactKind kind) {
    for (const auto& t : tool_registry()) {
        if (t.output_kind == kind && t.owning_role == role) return &t;
    }
    return nullptr;
}

namespace {

std::string attribute_text(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_null()) return {};
    return v.dump();
}

std::vector<std::string> image_references(const std::vector<ContextItem>& context) {
    std::vector<std::string> refs;
    for (const auto& item : context) {
        if (item.content_type == ContentType::Image &&
            std::find(refs.begin(), refs.end(), item.content) == refs.end()) {
            refs.push_back(item.content);
        }
    }
    return refs;
}

std::string complete_checked(const AgentEnvironment& env, const ProviderRequest& req) {
    env.control.checkpoint("before-provider-call");
    auto out = env.providers.text->complete(req, env.control.cancel);
    env.control.checkpoint("after-provider-response");
    return out;
}

} // namespace

std::vector<Element> parse_agent_output(std::string_view text) {
    const auto open = text.find('{');
    const auto close = text.rfind('}');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
        throw Error(Errc::MalformedOutput, "output contains no JSON object");
    }
    json doc;
    try {
        doc = json::parse(text.substr(open, close - open + 1));
    } catch (const json::exception& e) {
        throw Error(Errc::MalformedOutput, std::string("output is not valid JSON: ") + e.what());
    }
    const auto it = doc.find("elements");
    if (it == doc.end() || !it->is_array()) throw Error(Errc::MalformedOutput, "missing \"elements\" array");
    if (it->empty()) throw Error(Errc::MalformedOutput, "\"elements\" is empty");

    std::vector<Element> out;
    for (std::size_t i = 0; i < it->size(); ++i) {
        const auto& e = (*it)[i];
        const auto where = "element " + std::to_string(i);
        if (!e.is_object()) throw Error(Errc::MalformedOutput, where + " is not an object");
        if (!e.contains("kind") || !e["kind"].is_string()) throw Error(Errc::MalformedOutput, where + " has no kind");
        Element el;
        el.kind = e["kind"].get<std::string>();
        if (e.contains("image_prompt") && e["image_prompt"].is_string()) {
            el.content_type = ContentType::Image;
            el.content = e["image_prompt"].get<std::string>();
        } else if (e.contains("text") && e["text"].is_string()) {
            el.content = e["text"].get<std::string>();
        } else {
            throw Error(Errc::MalformedOutput, where + " has neither text nor image_prompt");
        }
        if (auto a = e.find("attributes"); a != e.end()) {
            if (!a->is_object()) throw Error(Errc::MalformedOutput, where + " attributes is not an object");
            for (const auto& [k, v] : a->items()) el.attributes[k] = attribute_text(v);
        }
        out.push_back(std::move(el));
    }
    return out;
}

AgentResult execute_task(const TaskSpec& spec, const AgentEnvironment& env) {
    if (!spec.task_kind) throw Error(Errc::PreconditionViolation, "task " + spec.task_id + " names no tool");
    const ArtifactKind kind = *spec.task_kind;
    if (find_tool(spec.target_role, kind) == nullptr) {
        throw Error(Errc::NoSuchTool,
                    display_name(spec.target_role) + " has no tool " + tool_name(kind),
                    {std::string(to_string(spec.target_role)), tool_name(kind)});
    }
    if (env.prompts == nullptr || !env.providers.text) {
        throw Error(Errc::PreconditionViolation, "agent environment is incomplete");
    }

    ProviderRequest req;
    req.role = spec.target_role;
    req.stage = spec.stage;
    req.task_kind = kind;
    req.purpose = "tool";
    req.instruction = spec.instruction;
    req.prompt = assemble_prompt(spec.target_role, spec.stage, spec, *env.prompts);
    req.reference_images = image_references(spec.context_payload);

    AgentResult result;
    result.task_id = spec.task_id;
    result.role = spec.target_role;
    result.kind = kind;

    result.raw_output = complete_checked(env, req);
    result.provider_calls = 1;
    std::vector<Element> elements;
    try {
        elements = parse_agent_output(result.raw_output);
    } catch (const Error& e) {
        if (e.code() != Errc::MalformedOutput) throw;
        req.prompt += "\n\n### PARSE ERROR\n" + std::string(e.what()) +
                      "\nAnswer again with only the JSON object.\n";
        result.raw_output = complete_checked(env, req);
        result.provider_calls = 2;
        elements = parse_agent_output(result.raw_output);
    }

    for (auto& el : elements) {
        if (el.content_type != ContentType::Image) continue;
        if (!env.providers.image || env.assets == nullptr) {
            throw Error(Errc::PreconditionViolation, "no image provider for " + tool_name(kind));
        }
        env.control.checkpoint("before-provider-call");
        const auto prompt = el.content;
        el.content = env.providers.image->generate_image(prompt, req.reference_images, *env.assets,
                                                         env.control.cancel);
        el.attributes["prompt"] = prompt;
        env.control.checkpoint("after-provider-response");
    }
    assign_element_ids(elements);
    result.elements = std::move(elements);
    return result;
}

std::optional<Errc> SlotResult::error_code() const {
    if (!error) return std::nullopt;
    try {
        std::rethrow_exception(error);
    } catch (const Error& e) {
        return e.code();
    } catch (...) {
        return std::nullopt;
    }
}

std::vector<SlotResult> parallel_execute(const std::vector<TaskSpec>& specs, const AgentEnvironment& env) {
    if (specs.empty()) throw Error(Errc::PreconditionViolation, "parallel_execute needs at least one spec");
    std::vector<SlotResult> slots(specs.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < specs.size(); i = next++) {
            try {
                throw_if_cancelled(env.control.cancel);
                slots[i].result = execute_task(specs[i], env);
            } catch (...) {
                slots[i].error = std::current_exception();
            }
        }
    };

    const std::size_t workers = std::min(std::max<std::size_t>(env.parallel_limit, 1), specs.size());
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }

    const bool all_cancelled = std::all_of(slots.begin(), slots.end(), [](const SlotResult& s) {
        return s.error_code() == Errc::Cancelled;
    });
    if (all_cancelled) {
        throw Error(Errc::AllSlotsCancelled, "all " + std::to_string(specs.size()) + " slots were cancelled");
    }
    return slots;
}

// --- direct channel ---------------------------------------------------------

DirectChannel open_direct_channel(AgentRole role, std::vector<ContextItem> context,
                                  const std::optional<DirectChannel>& current) {
    if (role == AgentRole::Core) throw Error(Errc::RoleInvalid, "the Core Agent has no direct channel");
    if (current) {
        throw Error(Errc::ChannelAlreadyOpen,
                    "a channel with the " + display_name(current->role) + " is already open");
    }
    return {role, std::move(context)};
}

DirectReply chat_direct(const DirectChannel& channel, Stage stage, const std::string& text,
                        const AgentEnvironment& env) {
    if (env.prompts == nullptr || !env.providers.text) {
        throw Error(Errc::PreconditionViolation, "agent environment is incomplete");
    }
    TaskSpec spec;
    spec.target_role = channel.role;
    spec.instruction = text;
    spec.context_payload = channel.context;
    spec.stage = stage;

    ProviderRequest req;
    req.role = channel.role;
    req.stage = stage;
    req.purpose = "direct-chat";
    req.instruction = text;
    req.prompt = assemble_prompt(channel.role, stage, spec, *env.prompts);
    const auto raw = complete_checked(env, req);

    DirectReply reply;
    reply.text = raw;
    json doc = json::parse(raw, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) return reply;

    reply.text = doc.value("message", std::string{});
    const auto call = doc.find("tool_call");
    if (call == doc.end() || !call->is_object()) return reply;
    const auto tool = call->value("tool", std::string{});
    std::optional<ArtifactKind> kind;
    if (tool.starts_with("make_")) kind = parse_kind(std::string_view(tool).substr(5));
    if (!kind || find_tool(channel.role, *kind) == nullptr) {
        throw Error(Errc::NoSuchTool, display_name(channel.role) + " has no tool '" + tool + "'",
                    {std::string(to_string(channel.role)), tool});
    }
    reply.tool_call = ToolCallRequest{*kind, call->value("instruction", text)};
    return reply;
}

void to_json(json& j, const DirectChannel& c) { j = json{{"role", c.role}, {"context", c.context}}; }

void from_json(const json& j, DirectChannel& c) {
    j.at("role").get_to(c.role);
    c.context = j.value("context", std::vector<ContextItem>{});
}

} // namespace preprod
