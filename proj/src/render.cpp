#include "ocd/render.hpp"

#include "ocd/errors.hpp"

namespace ocd {

std::string placeholder_line(std::string_view indent, std::size_t omitted)
{
    std::string line(indent);
    line += "# ... ";
    line += std::to_string(omitted);
    line += " lines omitted\n";
    return line;
}

namespace {

std::size_t leaf_lines(const UnitTree& tree, const CodeUnit& unit)
{
    if (unit.child_ids.empty())
        return unit.level == Level::file ? 0 : unit.source_line_count;
    std::size_t n = 0;
    for (const auto& c : unit.child_ids)
        n += leaf_lines(tree, tree.unit(c));
    return n;
}

class Renderer
{
public:
    Renderer(const UnitTree& tree, const UnitSet& included, RenderedContext& ctx)
        : m_tree(tree), m_included(included), m_ctx(ctx)
    {
    }

    std::string file(const CodeUnit& file)
    {
        m_out.clear();
        emit(file);
        return std::move(m_out);
    }

private:
    void lines(const std::string& path, std::size_t first, std::size_t last)
    {
        for (std::size_t l = first; l <= last; ++l)
            m_out += m_tree.line(path, l);
    }

    void flush_run()
    {
        if (m_run_lines == 0 && !m_run_open)
            return;
        // A placeholder must start on its own line.
        if (!m_out.empty() && m_out.back() != '\n')
            m_out.push_back('\n');
        m_out += placeholder_line(m_run_indent, m_run_lines);
        ++m_ctx.placeholders;
        m_ctx.omitted_lines += m_run_lines;
        m_run_lines = 0;
        m_run_open = false;
    }

    void emit(const CodeUnit& unit)
    {
        if (unit.is_leaf()) {
            m_ctx.included_leaf_ids.insert(unit.id);
            lines(unit.path, unit.span.start_line, unit.span.end_line);
            return;
        }
        std::size_t cursor = unit.span.start_line;
        for (const auto& cid : unit.child_ids) {
            const CodeUnit& child = m_tree.unit(cid);
            if (child.span.start_line > cursor) {
                flush_run();
                lines(unit.path, cursor, child.span.start_line - 1);
            }
            if (m_included.count(cid)) {
                flush_run();
                emit(child);
            } else {
                if (!m_run_open)
                    m_run_indent = child.indent;
                m_run_open = true;
                m_run_lines += leaf_lines(m_tree, child);
            }
            cursor = child.span.end_line + 1;
        }
        flush_run();
        if (cursor <= unit.span.end_line)
            lines(unit.path, cursor, unit.span.end_line);
    }

    const UnitTree& m_tree;
    const UnitSet& m_included;
    RenderedContext& m_ctx;
    std::string m_out;
    bool m_run_open = false;
    std::size_t m_run_lines = 0;
    std::string m_run_indent;
};

} // namespace

RenderedContext render(const UnitTree& tree, const UnitSet& included, const TokenCounter& counter)
{
    std::string violations;
    for (const auto& id : included) {
        const CodeUnit& u = tree.unit(id);
        if (u.parent_id && !included.count(*u.parent_id))
            violations += (violations.empty() ? "" : ", ") + id;
    }
    if (!violations.empty())
        throw ValidationError("inclusion set is not upward-closed: " + violations);

    RenderedContext ctx;
    Renderer renderer(tree, included, ctx);
    for (const auto& fid : tree.files()) {
        if (!included.count(fid))
            continue;
        const CodeUnit& file = tree.unit(fid);
        ctx.per_file.push_back({file.path, renderer.file(file)});
    }
    ctx.total_tokens = counter.count(dump(ctx.per_file));
    return ctx;
}

RenderedContext render_leaves(const UnitTree& tree, const UnitSet& leaves, const TokenCounter& counter)
{
    return render(tree, upward_closure(tree, leaves), counter);
}

std::string dump(const std::vector<RenderedFile>& files)
{
    std::string out;
    for (const auto& f : files) {
        out += "### FILE: ";
        out += f.path;
        out.push_back('\n');
        out += f.text;
        if (!f.text.empty() && f.text.back() != '\n')
            out.push_back('\n');
    }
    return out;
}

} // namespace ocd
