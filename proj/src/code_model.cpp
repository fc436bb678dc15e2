#include "ocd/code_model.hpp"

#include "ocd/errors.hpp"
#include "ocd/hash.hpp"
#include "ocd/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <functional>

namespace ocd {

std::string_view to_string(SegmentKind kind)
{
    switch (kind) {
    case SegmentKind::method: return "method";
    case SegmentKind::function: return "function";
    case SegmentKind::class_header: return "class_header";
    case SegmentKind::block: return "block";
    case SegmentKind::file: return "file";
    }
    return "unknown";
}

std::string_view to_string(Level level)
{
    switch (level) {
    case Level::file: return "file";
    case Level::function: return "function";
    case Level::block: return "block";
    }
    return "unknown";
}

std::optional<SegmentKind> parse_segment_kind(std::string_view name)
{
    for (auto k : {SegmentKind::method, SegmentKind::function, SegmentKind::class_header, SegmentKind::block,
                   SegmentKind::file})
        if (to_string(k) == name)
            return k;
    return std::nullopt;
}

std::optional<Level> parse_level(std::string_view name)
{
    for (auto l : {Level::file, Level::function, Level::block})
        if (to_string(l) == name)
            return l;
    return std::nullopt;
}

namespace {

constexpr std::size_t kIdPrefixBytes = 64;
constexpr std::size_t kIdHexChars = 16;

std::string normalized_prefix(std::string_view text)
{
    std::string out;
    bool space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            space = !out.empty();
            continue;
        }
        if (space)
            out.push_back(' ');
        space = false;
        out.push_back(c);
        if (out.size() >= kIdPrefixBytes)
            break;
    }
    return out;
}

std::string_view span_text(std::string_view source, const std::vector<std::string_view>& lines, Span span)
{
    if (span.empty())
        return {};
    const char* begin = lines[span.start_line - 1].data();
    const char* end = lines[span.end_line - 1].data() + lines[span.end_line - 1].size();
    return source.substr(static_cast<std::size_t>(begin - source.data()), static_cast<std::size_t>(end - begin));
}

UnitId make_id(std::string_view path, Level level, std::optional<SegmentKind> kind, Span span,
               std::string_view text)
{
    std::string key;
    key.append(path);
    key.push_back('\0');
    key.append(to_string(level));
    key.push_back('\0');
    key.append(kind ? to_string(*kind) : "-");
    key.push_back('\0');
    key.append(std::to_string(span.start_line));
    key.push_back(':');
    key.append(std::to_string(span.end_line));
    key.push_back('\0');
    key.append(normalized_prefix(text));
    return sha256_hex(key).substr(0, kIdHexChars);
}

} // namespace

std::vector<CodeUnit> decompose(std::string_view path, std::string_view source, const Segmenter& segmenter)
{
    const auto lines = split_lines(source);
    std::vector<CodeUnit> units;

    CodeUnit file;
    file.level = Level::file;
    file.path = std::string(path);
    file.span = {1, lines.size()};
    file.source_line_count = lines.size();
    file.id = make_id(path, Level::file, std::nullopt, file.span, source);

    auto outline = segmenter.outline(source);
    if (!outline) {
        file.fallback = true;
        OutlineNode whole;
        whole.kind = SegmentKind::file;
        whole.span = file.span;
        outline.emplace();
        if (!lines.empty())
            outline->push_back(std::move(whole));
    }
    units.push_back(file);

    std::function<void(const OutlineNode&, std::size_t)> emit = [&](const OutlineNode& node, std::size_t parent) {
        CodeUnit u;
        u.level = node.level;
        u.kind = node.children.empty() ? node.kind : std::nullopt;
        u.span = node.span;
        u.path = std::string(path);
        u.source_line_count = node.span.line_count();
        u.indent = node.indent;
        u.symbol = node.symbol;
        u.parent_id = units[parent].id;
        u.id = make_id(path, u.level, node.kind, u.span, span_text(source, lines, u.span));
        const std::size_t self = units.size();
        units[parent].child_ids.push_back(u.id);
        units.push_back(std::move(u));
        for (const auto& child : node.children)
            emit(child, self);
    };
    for (const auto& node : *outline)
        emit(node, 0);
    return units;
}

UnitTree::UnitTree(std::string instance_id, std::vector<SourceFile> files, const Segmenter& segmenter)
    : m_instance_id(std::move(instance_id)), m_sources(std::move(files))
{
    for (std::size_t f = 0; f < m_sources.size(); ++f) {
        const auto& src = m_sources[f];
        if (!m_source_index.emplace(src.path, f).second)
            throw ValidationError("duplicate context file: " + src.path);

        std::vector<std::size_t> offsets;
        std::size_t off = 0;
        for (auto line : split_lines(src.text)) {
            offsets.push_back(off);
            off += line.size();
        }
        offsets.push_back(off);
        m_line_offsets.push_back(std::move(offsets));

        for (auto& u : decompose(src.path, src.text, segmenter)) {
            if (!m_index.emplace(u.id, m_units.size()).second)
                throw std::logic_error("unit id collision: " + u.id);
            if (u.level == Level::file)
                m_files.push_back(u.id);
            m_order.push_back(u.id);
            if (u.is_leaf())
                m_leaves.push_back(u.id);
            m_units.push_back(std::move(u));
        }
    }
}

const CodeUnit& UnitTree::unit(const UnitId& id) const
{
    auto it = m_index.find(id);
    if (it == m_index.end())
        throw ValidationError("unknown unit id: " + id);
    return m_units[it->second];
}

std::size_t UnitTree::position(const UnitId& id) const
{
    auto it = m_index.find(id);
    if (it == m_index.end())
        throw ValidationError("unknown unit id: " + id);
    return it->second;
}

const SourceFile& UnitTree::source(std::string_view path) const
{
    auto it = m_source_index.find(std::string(path));
    if (it == m_source_index.end())
        throw ValidationError("unknown context file: " + std::string(path));
    return m_sources[it->second];
}

std::size_t UnitTree::line_count(std::string_view path) const
{
    auto it = m_source_index.find(std::string(path));
    if (it == m_source_index.end())
        throw ValidationError("unknown context file: " + std::string(path));
    return m_line_offsets[it->second].size() - 1;
}

std::string_view UnitTree::line(std::string_view path, std::size_t line) const
{
    auto it = m_source_index.find(std::string(path));
    if (it == m_source_index.end())
        throw ValidationError("unknown context file: " + std::string(path));
    const auto& offsets = m_line_offsets[it->second];
    if (line == 0 || line + 1 > offsets.size())
        throw std::out_of_range("line " + std::to_string(line) + " outside " + std::string(path));
    std::string_view text = m_sources[it->second].text;
    return text.substr(offsets[line - 1], offsets[line] - offsets[line - 1]);
}

std::string_view UnitTree::text(const CodeUnit& unit) const
{
    if (unit.span.empty())
        return {};
    auto it = m_source_index.find(unit.path);
    const auto& offsets = m_line_offsets.at(it->second);
    std::string_view text = m_sources[it->second].text;
    return text.substr(offsets[unit.span.start_line - 1],
                       offsets[unit.span.end_line] - offsets[unit.span.start_line - 1]);
}

const CodeUnit& UnitTree::file_of(const CodeUnit& unit) const
{
    const CodeUnit* cur = &unit;
    while (cur->parent_id)
        cur = &this->unit(*cur->parent_id);
    return *cur;
}

const CodeUnit* UnitTree::innermost_at(std::string_view path, std::size_t line) const
{
    const CodeUnit* best = nullptr;
    for (const auto& fid : m_files) {
        const CodeUnit& f = unit(fid);
        if (f.path != path || !f.span.contains_line(line))
            continue;
        best = &f;
        bool descended = true;
        while (descended) {
            descended = false;
            for (const auto& cid : best->child_ids) {
                const CodeUnit& c = unit(cid);
                if (c.span.contains_line(line)) {
                    best = &c;
                    descended = true;
                    break;
                }
            }
        }
    }
    return best;
}

std::vector<const CodeUnit*> leaf_segments(const UnitTree& tree)
{
    std::vector<const CodeUnit*> out;
    out.reserve(tree.leaf_ids().size());
    for (const auto& id : tree.leaf_ids())
        out.push_back(&tree.unit(id));
    return out;
}

UnitSet upward_closure(const UnitTree& tree, const UnitSet& included)
{
    UnitSet closed;
    for (const auto& id : included) {
        const CodeUnit* cur = &tree.unit(id);
        while (closed.insert(cur->id).second && cur->parent_id)
            cur = &tree.unit(*cur->parent_id);
    }
    return closed;
}

UnitSet leaves_in(const UnitTree& tree, const UnitSet& units)
{
    UnitSet out;
    for (const auto& id : units)
        if (tree.unit(id).is_leaf())
            out.insert(id);
    return out;
}

UnitSet subtree(const UnitTree& tree, const UnitId& root)
{
    UnitSet out;
    std::vector<const CodeUnit*> stack{&tree.unit(root)};
    while (!stack.empty()) {
        const CodeUnit* u = stack.back();
        stack.pop_back();
        out.insert(u->id);
        for (const auto& c : u->child_ids)
            stack.push_back(&tree.unit(c));
    }
    return out;
}

std::string segment_dump_jsonl(const UnitTree& tree)
{
    std::string out;
    for (const CodeUnit* leaf : leaf_segments(tree)) {
        nlohmann::ordered_json rec;
        rec["id"] = leaf->id;
        rec["path"] = leaf->path;
        rec["kind"] = to_string(*leaf->kind);
        rec["start_line"] = leaf->span.start_line;
        rec["end_line"] = leaf->span.end_line;
        rec["line_count"] = leaf->source_line_count;
        out += rec.dump();
        out.push_back('\n');
    }
    return out;
}

} // namespace ocd
