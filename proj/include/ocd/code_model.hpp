#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ocd {

enum class SegmentKind { method, function, class_header, block, file };

/// Hierarchy level: a file contains function-level units (functions,
/// methods, class headers, top-level fragments), which may contain blocks.
enum class Level { file, function, block };

std::string_view to_string(SegmentKind kind);
std::string_view to_string(Level level);
std::optional<SegmentKind> parse_segment_kind(std::string_view name);
std::optional<Level> parse_level(std::string_view name);

/// Inclusive 1-based line range. An empty file is the only owner of an
/// empty span (end_line == start_line - 1).
struct Span
{
    std::size_t start_line = 1;
    std::size_t end_line = 0;

    std::size_t line_count() const { return end_line + 1 > start_line ? end_line + 1 - start_line : 0; }
    bool empty() const { return line_count() == 0; }
    bool contains_line(std::size_t line) const { return line >= start_line && line <= end_line; }
    bool contains(const Span& other) const
    {
        return other.start_line >= start_line && other.end_line <= end_line;
    }
    bool overlaps(const Span& other) const
    {
        return !empty() && !other.empty() && start_line <= other.end_line && other.start_line <= end_line;
    }

    friend bool operator==(const Span&, const Span&) = default;
};

using UnitId = std::string;
using UnitSet = std::set<UnitId>;

struct CodeUnit
{
    UnitId id;
    Level level = Level::file;
    std::optional<SegmentKind> kind; // set on leaf segments only
    Span span;
    std::string path;
    std::optional<UnitId> parent_id;
    std::vector<UnitId> child_ids;
    std::size_t source_line_count = 0;

    std::string indent; // leading whitespace of the unit's first code line
    std::string symbol; // enclosing definition name ("Cls.meth"), empty for fragments
    bool fallback = false; // file units: the segmenter rejected the source

    /// Segments are childless units below the file level.
    bool is_leaf() const { return child_ids.empty() && level != Level::file; }
};

/// Language-specific structure recovered from a source file, before ids
/// are assigned.
struct OutlineNode
{
    Level level = Level::function;
    std::optional<SegmentKind> kind;
    Span span;
    std::string indent;
    std::string symbol;
    std::vector<OutlineNode> children;
};

class Segmenter
{
public:
    virtual ~Segmenter() = default;

    /// Function-level nodes of the file in document order, or nullopt when
    /// the source cannot be parsed.
    virtual std::optional<std::vector<OutlineNode>> outline(std::string_view source) const = 0;
};

/// Python grammar; the only segmenter shipped.
const Segmenter& python_segmenter();

/// Decompose one file into its unit subtree. The result is in document
/// order and starts with the file unit.
std::vector<CodeUnit> decompose(std::string_view path, std::string_view source,
                                const Segmenter& segmenter = python_segmenter());

struct SourceFile
{
    std::string path;
    std::string text;
};

/// The hierarchical decomposition of an instance's context files.
/// Immutable once built.
class UnitTree
{
public:
    UnitTree() = default;
    UnitTree(std::string instance_id, std::vector<SourceFile> files,
             const Segmenter& segmenter = python_segmenter());

    const std::string& instance_id() const { return m_instance_id; }
    const std::vector<UnitId>& files() const { return m_files; }
    const std::vector<UnitId>& unit_order() const { return m_order; }
    const std::vector<UnitId>& leaf_ids() const { return m_leaves; }
    std::size_t size() const { return m_units.size(); }

    bool contains(const UnitId& id) const { return m_index.count(id) != 0; }
    const CodeUnit& unit(const UnitId& id) const;
    const CodeUnit& at(std::size_t position) const { return m_units[position]; }

    /// Index of `id` in unit_order().
    std::size_t position(const UnitId& id) const;

    const SourceFile& source(std::string_view path) const;
    const std::vector<SourceFile>& sources() const { return m_sources; }

    /// Physical line `line` (1-based) of `path`, including its terminator.
    std::string_view line(std::string_view path, std::size_t line) const;
    std::size_t line_count(std::string_view path) const;

    /// Source text covered by the unit's span.
    std::string_view text(const CodeUnit& unit) const;

    /// Nearest enclosing file unit.
    const CodeUnit& file_of(const CodeUnit& unit) const;

    /// Deepest unit of `path` whose span contains `line`, if any.
    const CodeUnit* innermost_at(std::string_view path, std::size_t line) const;

private:
    std::string m_instance_id;
    std::vector<SourceFile> m_sources;
    std::vector<std::vector<std::size_t>> m_line_offsets;
    std::unordered_map<std::string, std::size_t> m_source_index;
    std::vector<CodeUnit> m_units;
    std::unordered_map<UnitId, std::size_t> m_index;
    std::vector<UnitId> m_files;
    std::vector<UnitId> m_order;
    std::vector<UnitId> m_leaves;
};

/// All leaf segments in document order.
std::vector<const CodeUnit*> leaf_segments(const UnitTree& tree);

/// `included` plus every ancestor of each member.
UnitSet upward_closure(const UnitTree& tree, const UnitSet& included);

/// Leaf segments that are members of `units`.
UnitSet leaves_in(const UnitTree& tree, const UnitSet& units);

/// `root` and all of its descendants.
UnitSet subtree(const UnitTree& tree, const UnitId& root);

/// One JSON object per leaf segment, newline-terminated.
std::string segment_dump_jsonl(const UnitTree& tree);

} // namespace ocd
