#include "preprod/memory.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "preprod/error.hpp"
#include "preprod/provider.hpp"

namespace preprod {

std::string_view to_string(EntryKind k) noexcept {
    switch (k) {
    case EntryKind::Message: return "message";
    case EntryKind::ToolCall: return "tool-call";
    case EntryKind::InterAgent: return "inter-agent";
    case EntryKind::Output: return "output";
    }
    return "message";
}

namespace {

EntryKind parse_entry_kind(const std::string& text) {
    for (EntryKind k : {EntryKind::Message, EntryKind::ToolCall, EntryKind::InterAgent, EntryKind::Output}) {
        if (to_string(k) == text) return k;
    }
    throw Error(Errc::FormatError, "unknown context entry kind '" + text + "'");
}

} // namespace

// --- ContextWindow ----------------------------------------------------------

std::size_t ContextWindow::total_chars() const noexcept {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.text.size();
    return n;
}

bool ContextWindow::within_budget() const noexcept {
    return entries.size() <= budget.max_entries && total_chars() <= budget.max_chars;
}

void ContextWindow::append(ContextEntry entry) {
    entries.push_back(std::move(entry));
    while (!within_budget() && !entries.empty()) {
        if (entries.size() == 1) {
            if (budget.max_entries == 0) {
                entries.clear();
            } else {
                entries.front().text.resize(budget.max_chars);
            }
            break;
        }
        const bool paired = entries[0].kind == EntryKind::ToolCall && entries[1].kind == EntryKind::Output;
        entries.erase(entries.begin(), entries.begin() + (paired ? 2 : 1));
    }
}

ContextWindow append_entry(ContextWindow window, ContextEntry entry) {
    window.append(std::move(entry));
    return window;
}

// --- ChunkStore -------------------------------------------------------------

ChunkStore::ChunkStore() : chunks_(std::make_shared<const std::vector<MemoryChunk>>()) {}

ChunkStore::ChunkStore(const ChunkStore& other) : chunks_(other.snapshot()) {}

ChunkStore& ChunkStore::operator=(const ChunkStore& other) {
    if (this != &other) {
        auto snap = other.snapshot();
        std::lock_guard lock(mutex_);
        chunks_ = std::move(snap);
    }
    return *this;
}

ChunkStore::Snapshot ChunkStore::snapshot() const {
    std::lock_guard lock(mutex_);
    return chunks_;
}

std::size_t ChunkStore::size() const { return snapshot()->size(); }

std::size_t ChunkStore::insert(const std::vector<MemoryChunk>& chunks) {
    std::lock_guard lock(mutex_);
    auto next = std::make_shared<std::vector<MemoryChunk>>(*chunks_);
    std::size_t added = 0;
    for (const auto& c : chunks) {
        const bool present = std::any_of(next->begin(), next->end(),
                                         [&](const MemoryChunk& x) { return x.chunk_id == c.chunk_id; });
        if (present) continue;
        next->push_back(c);
        ++added;
    }
    std::sort(next->begin(), next->end(),
              [](const MemoryChunk& a, const MemoryChunk& b) { return a.first_index < b.first_index; });
    chunks_ = std::move(next);
    return added;
}

bool ChunkStore::operator==(const ChunkStore& other) const { return *snapshot() == *other.snapshot(); }

// --- summarizers / expanders / embedder -------------------------------------

std::string PrefixSummarizer::summarize(const std::vector<TranscriptEntry>& entries) {
    std::string joined;
    for (const auto& e : entries) {
        if (!joined.empty()) joined += " | ";
        joined += e.text;
    }
    if (joined.size() > max_chars_) joined.resize(max_chars_);
    return joined;
}

std::string ProviderSummarizer::summarize(const std::vector<TranscriptEntry>& entries) {
    std::string body;
    for (const auto& e : entries) body += e.speaker + ": " + e.text + "\n";
    ProviderRequest req;
    req.purpose = "summarize";
    req.instruction = "summarize";
    req.prompt = "Summarize this conversation excerpt in two sentences.\n\n" + body;
    return provider_->complete(req);
}

std::string ProviderExpander::expand(const std::string& query) {
    ProviderRequest req;
    req.purpose = "expand";
    req.instruction = query;
    req.prompt = "Rewrite the following request as up to three short paraphrases, one per line.\n\n" + query;
    const auto reply = provider_->complete(req);
    std::string out = query;
    std::size_t lines = 0;
    std::size_t start = 0;
    while (start < reply.size() && lines < 3) {
        auto end = reply.find('\n', start);
        if (end == std::string::npos) end = reply.size();
        const auto line = reply.substr(start, end - start);
        if (!line.empty()) {
            out += " " + line;
            ++lines;
        }
        start = end + 1;
    }
    return out;
}

std::uint64_t TokenHashEmbedder::fnv1a(std::string_view token) noexcept {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : token) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::vector<double> TokenHashEmbedder::embed(std::string_view text) const {
    std::vector<double> v(dimension_, 0.0);
    std::string token;
    auto flush = [&] {
        if (!token.empty()) {
            v[fnv1a(token) % dimension_] += 1.0;
            token.clear();
        }
    };
    for (char c : text) {
        const auto uc = static_cast<unsigned char>(c);
        if (std::isalnum(uc)) {
            token.push_back(static_cast<char>(std::tolower(uc)));
        } else {
            flush();
        }
    }
    flush();
    return v;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = std::min(a.size(), b.size());
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

// --- long-term memory -------------------------------------------------------

std::size_t LongTermMemory::chunked_count() const {
    const auto snap = store.snapshot();
    if (snap->empty()) return 0;
    return static_cast<std::size_t>(snap->back().last_index + 1);
}

void LongTermMemory::record(std::string speaker, std::string text, Timestamp now) {
    transcript.push_back({static_cast<std::int64_t>(transcript.size()), std::move(speaker), std::move(text), now});
}

std::size_t chunk_and_index(LongTermMemory& memory, Summarizer& summarizer, const Embedder& embedder,
                            const MemoryConfig& config) {
    const std::size_t total = memory.transcript.size();
    const std::size_t eligible = total > config.horizon ? total - config.horizon : 0;
    std::size_t begin = memory.chunked_count();
    std::vector<MemoryChunk> fresh;
    while (begin + config.chunk_size <= eligible) {
        MemoryChunk c;
        c.first_index = static_cast<std::int64_t>(begin);
        c.last_index = static_cast<std::int64_t>(begin + config.chunk_size - 1);
        c.chunk_id = "chunk-" + std::to_string(c.first_index) + "-" + std::to_string(c.last_index);
        c.entries.assign(memory.transcript.begin() + static_cast<std::ptrdiff_t>(begin),
                         memory.transcript.begin() + static_cast<std::ptrdiff_t>(begin + config.chunk_size));
        c.start_time = c.entries.front().timestamp;
        c.end_time = c.entries.back().timestamp;
        fresh.push_back(std::move(c));
        begin += config.chunk_size;
    }
    // Summaries first: any failure aborts before the store changes.
    for (auto& c : fresh) c.summary = summarizer.summarize(c.entries);
    for (auto& c : fresh) c.embedding = embedder.embed(c.summary);
    return memory.store.insert(fresh);
}

std::vector<ScoredChunk> retrieve(const ChunkStore& store, const std::string& query, std::size_t k,
                                  QueryExpander& expander, const Embedder& embedder) {
    if (k < 1) throw Error(Errc::PreconditionViolation, "k must be >= 1");
    const auto snap = store.snapshot();
    if (snap->empty()) return {};
    const auto q = embedder.embed(expander.expand(query));

    std::vector<std::pair<const MemoryChunk*, double>> ranked;
    ranked.reserve(snap->size());
    for (const auto& c : *snap) ranked.emplace_back(&c, cosine_similarity(q, c.embedding));
    // Rank on a 1e-9 grid: equal cosines reached through different rounding
    // paths must tie, and ties go to the newest chunk.
    auto key = [](double s) { return std::llround(s * 1e9); };
    const auto n = std::min(k, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n), ranked.end(),
                      [&](const auto& a, const auto& b) {
                          if (key(a.second) != key(b.second)) return key(a.second) > key(b.second);
                          return a.first->last_index > b.first->last_index;
                      });
    std::vector<ScoredChunk> scored;
    scored.reserve(n);
    for (std::size_t i = 0; i < n; ++i) scored.push_back({*ranked[i].first, ranked[i].second});
    return scored;
}

// --- JSON -------------------------------------------------------------------

void to_json(json& j, const ContextEntry& e) {
    j = json{{"kind", to_string(e.kind)}, {"text", e.text}, {"timestamp", e.timestamp}};
}

void from_json(const json& j, ContextEntry& e) {
    e.kind = parse_entry_kind(j.at("kind").get<std::string>());
    j.at("text").get_to(e.text);
    e.timestamp = j.value("timestamp", Timestamp{0});
}

void to_json(json& j, const ContextWindow& w) {
    j = json{{"owner", w.owner},
             {"entries", w.entries},
             {"budget", {{"max_entries", w.budget.max_entries}, {"max_chars", w.budget.max_chars}}}};
}

void from_json(const json& j, ContextWindow& w) {
    j.at("owner").get_to(w.owner);
    j.at("entries").get_to(w.entries);
    const auto& b = j.at("budget");
    b.at("max_entries").get_to(w.budget.max_entries);
    b.at("max_chars").get_to(w.budget.max_chars);
}

void to_json(json& j, const TranscriptEntry& e) {
    j = json{{"index", e.index}, {"speaker", e.speaker}, {"text", e.text}, {"timestamp", e.timestamp}};
}

void from_json(const json& j, TranscriptEntry& e) {
    j.at("index").get_to(e.index);
    j.at("speaker").get_to(e.speaker);
    j.at("text").get_to(e.text);
    e.timestamp = j.value("timestamp", Timestamp{0});
}

void to_json(json& j, const MemoryChunk& c) {
    j = json{{"chunk_id", c.chunk_id},   {"first_index", c.first_index}, {"last_index", c.last_index},
             {"start_time", c.start_time}, {"end_time", c.end_time},     {"entries", c.entries},
             {"summary", c.summary},       {"embedding", c.embedding}};
}

void from_json(const json& j, MemoryChunk& c) {
    j.at("chunk_id").get_to(c.chunk_id);
    j.at("first_index").get_to(c.first_index);
    j.at("last_index").get_to(c.last_index);
    c.start_time = j.value("start_time", Timestamp{0});
    c.end_time = j.value("end_time", Timestamp{0});
    j.at("entries").get_to(c.entries);
    j.at("summary").get_to(c.summary);
    j.at("embedding").get_to(c.embedding);
}

void to_json(json& j, const LongTermMemory& m) {
    j = json{{"transcript", m.transcript}, {"chunks", *m.store.snapshot()}};
}

void from_json(const json& j, LongTermMemory& m) {
    m.transcript = j.value("transcript", std::vector<TranscriptEntry>{});
    m.store = ChunkStore{};
    m.store.insert(j.value("chunks", std::vector<MemoryChunk>{}));
}

} // namespace preprod
