#pragma once

// Short-term per-agent context windows and the Core's long-term memory:
// transcript entries are grouped into time-ordered chunks, summarized,
// embedded, and retrieved by cosine similarity.

#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "preprod/config.hpp"
#include "preprod/domain.hpp"

namespace preprod {

class TextProvider;

enum class EntryKind { Message, ToolCall, InterAgent, Output };

std::string_view to_string(EntryKind k) noexcept;

struct ContextEntry {
    EntryKind kind = EntryKind::Message;
    std::string text;
    Timestamp timestamp = 0;

    bool operator==(const ContextEntry&) const = default;
};

struct ContextWindow {
    AgentRole owner = AgentRole::Core;
    std::vector<ContextEntry> entries;
    ContextBudget budget;

    std::size_t total_chars() const noexcept;
    bool within_budget() const noexcept;
    /// Appends then evicts oldest-first until both budgets hold. A tool-call
    /// directly followed by its output is evicted as a pair.
    void append(ContextEntry entry);

    bool operator==(const ContextWindow&) const = default;
};

ContextWindow append_entry(ContextWindow window, ContextEntry entry);

struct TranscriptEntry {
    std::int64_t index = 0;
    std::string speaker;
    std::string text;
    Timestamp timestamp = 0;

    bool operator==(const TranscriptEntry&) const = default;
};

struct MemoryChunk {
    std::string chunk_id;
    std::int64_t first_index = 0;
    std::int64_t last_index = 0;
    Timestamp start_time = 0;
    Timestamp end_time = 0;
    std::vector<TranscriptEntry> entries;
    std::string summary;
    std::vector<double> embedding;

    bool operator==(const MemoryChunk&) const = default;
};

/// Chunk store with copy-on-write snapshots: one writer may insert while
/// readers keep a consistent view.
class ChunkStore {
public:
    using Snapshot = std::shared_ptr<const std::vector<MemoryChunk>>;

    ChunkStore();
    ChunkStore(const ChunkStore& other);
    ChunkStore& operator=(const ChunkStore& other);

    Snapshot snapshot() const;
    std::size_t size() const;
    /// Inserts chunks whose id is not present yet; returns how many were new.
    std::size_t insert(const std::vector<MemoryChunk>& chunks);

    bool operator==(const ChunkStore& other) const;

private:
    mutable std::mutex mutex_;
    Snapshot chunks_;
};

class Summarizer {
public:
    virtual ~Summarizer() = default;
    virtual std::string summarize(const std::vector<TranscriptEntry>& entries) = 0;
};

/// Concatenates entry texts (" | " separated) and keeps the first N characters.
class PrefixSummarizer final : public Summarizer {
public:
    explicit PrefixSummarizer(std::size_t max_chars = 240) : max_chars_(max_chars) {}
    std::string summarize(const std::vector<TranscriptEntry>& entries) override;

private:
    std::size_t max_chars_;
};

class ProviderSummarizer final : public Summarizer {
public:
    explicit ProviderSummarizer(std::shared_ptr<TextProvider> provider) : provider_(std::move(provider)) {}
    std::string summarize(const std::vector<TranscriptEntry>& entries) override;

private:
    std::shared_ptr<TextProvider> provider_;
};

class QueryExpander {
public:
    virtual ~QueryExpander() = default;
    virtual std::string expand(const std::string& query) = 0;
};

class IdentityExpander final : public QueryExpander {
public:
    std::string expand(const std::string& query) override { return query; }
};

/// One provider call producing up to three paraphrases, appended to the query.
class ProviderExpander final : public QueryExpander {
public:
    explicit ProviderExpander(std::shared_ptr<TextProvider> provider) : provider_(std::move(provider)) {}
    std::string expand(const std::string& query) override;

private:
    std::shared_ptr<TextProvider> provider_;
};

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<double> embed(std::string_view text) const = 0;
};

/// Bag of lower-cased alphanumeric tokens, each hashed (FNV-1a 64) into one
/// of `dimension` buckets. Raw counts, not normalized.
class TokenHashEmbedder final : public Embedder {
public:
    explicit TokenHashEmbedder(std::size_t dimension = 256) : dimension_(dimension) {}
    std::vector<double> embed(std::string_view text) const override;

    static std::uint64_t fnv1a(std::string_view token) noexcept;

private:
    std::size_t dimension_;
};

/// Cosine similarity; 0 when either vector is all zeros.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct LongTermMemory {
    std::vector<TranscriptEntry> transcript;
    ChunkStore store;

    /// Number of leading transcript entries already covered by chunks.
    std::size_t chunked_count() const;
    void record(std::string speaker, std::string text, Timestamp now);

    bool operator==(const LongTermMemory&) const = default;
};

/// Groups full chunks of entries older than the horizon, summarizes and
/// embeds them, then inserts them. All-or-nothing: a summarizer failure
/// leaves the store untouched and propagates. Returns the number of new chunks.
std::size_t chunk_and_index(LongTermMemory& memory, Summarizer& summarizer, const Embedder& embedder,
                            const MemoryConfig& config);

struct ScoredChunk {
    MemoryChunk chunk;
    double score = 0.0;
};

/// Top-k chunks by cosine similarity to the expanded query, scores
/// descending, ties (scores within 1e-9) broken newest first. k is clamped
/// to the store size.
std::vector<ScoredChunk> retrieve(const ChunkStore& store, const std::string& query, std::size_t k,
                                  QueryExpander& expander, const Embedder& embedder);

void to_json(json& j, const ContextEntry& e);
void from_json(const json& j, ContextEntry& e);
void to_json(json& j, const ContextWindow& w);
void from_json(const json& j, ContextWindow& w);
void to_json(json& j, const TranscriptEntry& e);
void from_json(const json& j, TranscriptEntry& e);
void to_json(json& j, const MemoryChunk& c);
void from_json(const json& j, MemoryChunk& c);
void to_json(json& j, const LongTermMemory& m);
void from_json(const json& j, LongTermMemory& m);

} // namespace preprod
