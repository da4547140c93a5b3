#include "preprod/board_store.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstdio>
#include <set>

#include "preprod/assets.hpp"
#include "preprod/error.hpp"
#include "preprod/schema.hpp"

namespace preprod {

namespace {

bool conflicts(Point a, Point b) {
    return std::abs(a.x - b.x) < kBlockWidth + kGutter && std::abs(a.y - b.y) < kBlockHeight + kGutter;
}

std::string render_element(const Element& e) {
    std::string out = "[" + e.element_id + " " + e.kind + "] ";
    out += e.content_type == ContentType::Image ? "(image " + e.content + ")" : e.content;
    for (const auto& [k, v] : e.attributes) out += "\n  " + k + ": " + v;
    return out;
}

std::string block_label(const Block& b, int version) {
    return display_name(b.kind) + " " + b.block_id + " v" + std::to_string(version);
}

} // namespace

std::string render_elements(const std::vector<Element>& elements) {
    std::string out;
    for (const auto& e : elements) {
        if (!out.empty()) out += "\n";
        out += render_element(e);
    }
    return out;
}

void assign_element_ids(std::vector<Element>& elements) {
    std::set<std::string> used;
    for (const auto& e : elements) {
        if (!e.element_id.empty()) used.insert(e.element_id);
    }
    int n = 1;
    for (auto& e : elements) {
        if (!e.element_id.empty()) continue;
        while (used.contains("e" + std::to_string(n))) ++n;
        e.element_id = "e" + std::to_string(n);
        used.insert(e.element_id);
    }
}

BoardStore::BoardStore() {
    for (Stage s : kBoardStages) boards_[s].stage = s;
}

const Board& BoardStore::board(Stage stage) const {
    const auto it = boards_.find(stage);
    if (it == boards_.end()) {
        throw Error(Errc::StageKindMismatch, "stage '" + std::string(to_string(stage)) + "' has no board");
    }
    return it->second;
}

const Block* BoardStore::find(const std::string& block_id) const {
    const auto it = index_.find(block_id);
    if (it == index_.end()) return nullptr;
    const auto& blocks = boards_.at(it->second).blocks;
    const auto bit = blocks.find(block_id);
    return bit == blocks.end() ? nullptr : &bit->second;
}

const Block& BoardStore::block(const std::string& block_id) const {
    if (const auto* b = find(block_id)) return *b;
    throw Error(Errc::UnknownBlock, "no block '" + block_id + "'");
}

Block& BoardStore::mutable_block(const std::string& block_id) {
    return const_cast<Block&>(block(block_id));
}

std::size_t BoardStore::block_count() const { return index_.size(); }

void BoardStore::check_elements(ArtifactKind kind, const std::vector<Element>& elements,
                                const AssetStore* assets) const {
    auto problems = schema_violations(kind, elements);
    if (assets != nullptr) {
        for (const auto& e : elements) {
            if (e.content_type == ContentType::Image && !assets->resolves(e.content)) {
                problems.push_back("element " + e.element_id + " references missing asset '" + e.content + "'");
            }
        }
    }
    if (!problems.empty()) {
        std::string msg = display_name(kind) + " does not match its schema";
        for (const auto& p : problems) msg += "; " + p;
        throw Error(Errc::SchemaViolation, msg, std::move(problems));
    }
}

const Block& BoardStore::create_block(Stage stage, ArtifactKind kind,
                                      const std::optional<std::string>& parent,
                                      std::vector<Element> elements, std::string origin_task,
                                      Timestamp now, const AssetStore* assets) {
    if (!has_board(stage) || board_of(kind) != stage) {
        throw Error(Errc::StageKindMismatch, display_name(kind) + " belongs on the " +
                                                 display_name(board_of(kind)) + " board, not " +
                                                 display_name(stage));
    }
    if (parent) {
        const auto* p = find(*parent);
        if (p == nullptr || p->stage != stage) {
            throw Error(Errc::UnknownParent, "no block '" + *parent + "' on the " + display_name(stage) + " board");
        }
    }
    assign_element_ids(elements);
    check_elements(kind, elements, assets);

    char buf[32];
    std::snprintf(buf, sizeof buf, "blk-%04llu", static_cast<unsigned long long>(next_block_));

    Block b;
    b.block_id = buf;
    b.stage = stage;
    b.kind = kind;
    b.parent_id = parent;
    b.versions.push_back(BlockVersion{0, std::move(elements), now, std::move(origin_task)});

    const Point where = auto_place(stage, parent);
    ++next_block_;
    auto& board = boards_[stage];
    board.order.push_back(b.block_id);
    board.placement[b.block_id] = where;
    index_[b.block_id] = stage;
    auto [it, inserted] = board.blocks.emplace(b.block_id, std::move(b));
    return it->second;
}

int BoardStore::add_version(const std::string& block_id, std::vector<Element> elements,
                            std::string origin_task, Timestamp now, const AssetStore* assets) {
    auto& b = mutable_block(block_id);
    assign_element_ids(elements);
    check_elements(b.kind, elements, assets);
    const int index = static_cast<int>(b.versions.size());
    b.versions.push_back(BlockVersion{index, std::move(elements), now, std::move(origin_task)});
    b.active_version = index;
    return index;
}

void BoardStore::set_active_version(const std::string& block_id, int version_index) {
    auto& b = mutable_block(block_id);
    if (version_index < 0 || version_index >= static_cast<int>(b.versions.size())) {
        throw Error(Errc::BadIndex, "block '" + block_id + "' has " + std::to_string(b.versions.size()) +
                                        " version(s); no index " + std::to_string(version_index));
    }
    b.active_version = version_index;
}

void BoardStore::set_pinned(const std::string& block_id, bool pinned) { mutable_block(block_id).pinned = pinned; }

void BoardStore::set_collapsed(const std::string& block_id, bool collapsed) {
    mutable_block(block_id).collapsed = collapsed;
}

void BoardStore::set_placement(const std::string& block_id, Point p) {
    const auto& b = block(block_id);
    boards_[b.stage].placement[block_id] = p;
}

std::vector<std::string> BoardStore::lineage(const std::string& block_id) const {
    const Block* b = &block(block_id);
    const auto& board = boards_.at(b->stage);
    std::vector<std::string> chain{b->block_id};
    // A parent chain longer than the board would have to revisit a block.
    std::size_t steps = 0;
    while (b->parent_id) {
        if (++steps > board.blocks.size()) {
            throw Error(Errc::FormatError, "lineage of '" + block_id + "' contains a cycle");
        }
        b = &block(*b->parent_id);
        chain.push_back(b->block_id);
    }
    std::reverse(chain.begin(), chain.end());
    return chain;
}

std::vector<ContextItem> BoardStore::resolve_selection(const Selection& selection) const {
    const auto* b = find(selection.block_id);
    if (b == nullptr) {
        throw Error(Errc::StaleSelection, "selected block '" + selection.block_id + "' no longer exists");
    }
    if (selection.version_index < 0 || selection.version_index >= static_cast<int>(b->versions.size())) {
        throw Error(Errc::StaleSelection, "selected version " + std::to_string(selection.version_index) +
                                              " of '" + selection.block_id + "' does not exist");
    }
    const auto& version = b->versions[static_cast<std::size_t>(selection.version_index)];
    const auto label = block_label(*b, selection.version_index);

    std::vector<ContextItem> items;
    items.push_back({"Selected " + label, ContentType::Text,
                     "kind: " + std::string(to_string(b->kind)) + "; stage: " +
                         std::string(to_string(b->stage)) + "; block: " + b->block_id +
                         "; version: " + std::to_string(selection.version_index),
                     "selection"});

    auto push = [&](const Element& e) {
        if (e.content_type == ContentType::Image) {
            items.push_back({label + " / " + e.element_id, ContentType::Image, e.content, "selection"});
        } else {
            items.push_back({label + " / " + e.element_id, ContentType::Text, render_element(e), "selection"});
        }
    };

    if (selection.element_ids.empty()) {
        for (const auto& e : version.elements) push(e);
        return items;
    }
    for (const auto& id : selection.element_ids) {
        const auto it = std::find_if(version.elements.begin(), version.elements.end(),
                                     [&](const Element& e) { return e.element_id == id; });
        if (it == version.elements.end()) {
            throw Error(Errc::StaleSelection, "element '" + id + "' is not in " + label);
        }
        push(*it);
    }
    return items;
}

Point BoardStore::auto_place(Stage stage, const std::optional<std::string>& parent) const {
    const auto& board = this->board(stage);
    Point candidate{0, 0};
    if (parent) {
        const auto it = board.placement.find(*parent);
        if (it != board.placement.end()) {
            candidate = {it->second.x + kBlockWidth + kGutter, it->second.y};
        }
    }
    bool moved = true;
    while (moved) {
        moved = false;
        for (const auto& [id, p] : board.placement) {
            if (conflicts(candidate, p)) {
                candidate.y = p.y + kBlockHeight + kGutter;
                moved = true;
            }
        }
    }
    return candidate;
}

std::vector<std::string> BoardStore::check_invariants() const {
    std::vector<std::string> out;
    for (const auto& [stage, board] : boards_) {
        if (board.order.size() != board.blocks.size()) out.push_back("board order/blocks size mismatch");
        for (const auto& [id, b] : board.blocks) {
            if (b.stage != stage) out.push_back(id + " stage mismatch");
            if (board_of(b.kind) != stage) out.push_back(id + " kind not on this board");
            if (b.versions.empty()) out.push_back(id + " has no versions");
            for (std::size_t i = 0; i < b.versions.size(); ++i) {
                if (b.versions[i].version_index != static_cast<int>(i)) out.push_back(id + " non-contiguous versions");
            }
            if (b.active_version < 0 || b.active_version >= static_cast<int>(b.versions.size())) {
                out.push_back(id + " active_version out of range");
            }
            if (!board.placement.contains(id)) out.push_back(id + " has no placement");
            if (b.parent_id) {
                const auto pit = board.blocks.find(*b.parent_id);
                if (pit == board.blocks.end()) out.push_back(id + " parent not on the same board");
            }
            // Walk with a step bound equal to board size.
            const Block* cur = &b;
            std::size_t steps = 0;
            while (cur->parent_id) {
                const auto pit = board.blocks.find(*cur->parent_id);
                if (pit == board.blocks.end()) break;
                cur = &pit->second;
                if (++steps > board.blocks.size()) {
                    out.push_back(id + " lineage cycle");
                    break;
                }
            }
        }
    }
    return out;
}

void to_json(json& j, const Point& p) { j = json{{"x", p.x}, {"y", p.y}}; }

void from_json(const json& j, Point& p) {
    j.at("x").get_to(p.x);
    j.at("y").get_to(p.y);
}

void to_json(json& j, const BoardStore& s) {
    json boards = json::object();
    for (const auto& [stage, board] : s.boards_) {
        json blocks = json::array();
        for (const auto& id : board.order) {
            json jb = board.blocks.at(id);
            jb["placement"] = board.placement.at(id);
            blocks.push_back(std::move(jb));
        }
        boards[std::string(to_string(stage))] = json{{"blocks", std::move(blocks)}};
    }
    j = json{{"boards", std::move(boards)}, {"next_block", s.next_block_}};
}

void from_json(const json& j, BoardStore& s) {
    s = BoardStore{};
    for (const auto& [stage_name, jboard] : j.at("boards").items()) {
        const Stage stage = json(stage_name).get<Stage>();
        if (!has_board(stage)) throw Error(Errc::FormatError, "planning has no board");
        auto& board = s.boards_[stage];
        for (const auto& jb : jboard.at("blocks")) {
            Block b = jb.get<Block>();
            if (b.stage != stage) throw Error(Errc::FormatError, b.block_id + " stored on the wrong board");
            board.order.push_back(b.block_id);
            board.placement[b.block_id] = jb.value("placement", Point{});
            s.index_[b.block_id] = stage;
            board.blocks.emplace(b.block_id, std::move(b));
        }
    }
    s.next_block_ = j.value("next_block", static_cast<std::uint64_t>(s.index_.size() + 1));
}

} // namespace preprod
