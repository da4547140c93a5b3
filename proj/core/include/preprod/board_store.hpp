#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "preprod/domain.hpp"

namespace preprod {

class AssetStore;

struct Point {
    int x = 0;
    int y = 0;

    bool operator==(const Point&) const = default;
};

/// Nominal collapsed footprint used for placement, plus the spacing between
/// neighbouring blocks.
inline constexpr int kBlockWidth = 320;
inline constexpr int kBlockHeight = 240;
inline constexpr int kGutter = 40;

struct Board {
    Stage stage = Stage::Ideation;
    std::map<std::string, Block> blocks;
    /// Creation order.
    std::vector<std::string> order;
    std::map<std::string, Point> placement;

    bool operator==(const Board&) const = default;
};

/// The four stage boards. Versions are append-only and blocks are never
/// deleted; every mutation either succeeds completely or leaves the store
/// untouched.
class BoardStore {
public:
    BoardStore();

    const Board& board(Stage stage) const;
    const std::map<Stage, Board>& boards() const noexcept { return boards_; }

    const Block* find(const std::string& block_id) const;
    /// Throws unknown-block.
    const Block& block(const std::string& block_id) const;
    std::size_t block_count() const;

    /// `assets` (optional) is used to check that image references resolve.
    const Block& create_block(Stage stage, ArtifactKind kind, const std::optional<std::string>& parent,
                              std::vector<Element> elements, std::string origin_task,
                              Timestamp now, const AssetStore* assets = nullptr);

    int add_version(const std::string& block_id, std::vector<Element> elements,
                    std::string origin_task, Timestamp now, const AssetStore* assets = nullptr);

    void set_active_version(const std::string& block_id, int version_index);
    void set_pinned(const std::string& block_id, bool pinned);
    void set_collapsed(const std::string& block_id, bool collapsed);
    /// Manual placement from the UI; last write wins.
    void set_placement(const std::string& block_id, Point p);

    /// Root first, ending with `block_id`.
    std::vector<std::string> lineage(const std::string& block_id) const;

    /// Context items for a selection; throws stale-selection when the block,
    /// version or an element no longer exists.
    std::vector<ContextItem> resolve_selection(const Selection& selection) const;

    /// Where a new block would go. Roots stack in column 0; children go in the
    /// column right of their parent; never overlaps an existing footprint.
    Point auto_place(Stage stage, const std::optional<std::string>& parent) const;

    /// Structural invariants (stage match, same-board parents, acyclic
    /// lineage, contiguous versions, active index, placement coverage).
    std::vector<std::string> check_invariants() const;

    std::uint64_t next_block_number() const noexcept { return next_block_; }

    bool operator==(const BoardStore&) const = default;

    friend void to_json(json& j, const BoardStore& s);
    friend void from_json(const json& j, BoardStore& s);

private:
    Block& mutable_block(const std::string& block_id);
    void check_elements(ArtifactKind kind, const std::vector<Element>& elements,
                        const AssetStore* assets) const;

    std::map<Stage, Board> boards_;
    std::map<std::string, Stage> index_;
    std::uint64_t next_block_ = 1;
};

/// Serializes one block version's elements as labelled text for prompts.
std::string render_elements(const std::vector<Element>& elements);

/// Assigns "e1".."en" to elements lacking an id.
void assign_element_ids(std::vector<Element>& elements);

void to_json(json& j, const Point& p);
void from_json(const json& j, Point& p);

} // namespace preprod
