#include "ocd/python_segmenter.hpp"

#include "ocd/python_lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace ocd {

namespace {

using python::LogicalLine;

struct Stmt
{
    std::size_t first = 0;       // first physical line, decorators included
    std::size_t header_last = 0; // last line of the header logical line
    std::size_t last = 0;        // last line of the statement including suites
    std::string keyword;         // "def", "class", "if", "@", ... ("async def" -> "def")
    std::string name;            // def/class name
    std::string indent;
    bool has_suite = false;
    std::vector<Stmt> body;      // suite of the first clause
};

struct SyntaxError
{
};

bool is_compound_keyword(std::string_view kw)
{
    static constexpr std::array<std::string_view, 9> kws = {"if", "for", "while", "try", "with",
                                                            "def", "class", "match", "@"};
    return std::find(kws.begin(), kws.end(), kw) != kws.end();
}

bool is_clause_keyword(std::string_view kw)
{
    return kw == "elif" || kw == "else" || kw == "except" || kw == "finally";
}

std::string leading_ws(std::string_view text)
{
    std::size_t i = 0;
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\f'))
        ++i;
    return std::string(text.substr(0, i));
}

/// Reads the word following `keyword` at the start of the statement.
std::string word_after(std::string_view text, std::string_view keyword)
{
    auto pos = text.find(keyword);
    if (pos == std::string_view::npos)
        return {};
    pos += keyword.size();
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t'))
        ++pos;
    std::size_t start = pos;
    while (pos < text.size()
           && (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'
               || static_cast<unsigned char>(text[pos]) >= 0x80))
        ++pos;
    return std::string(text.substr(start, pos - start));
}

class SuiteParser
{
public:
    explicit SuiteParser(const std::vector<LogicalLine>& lines) : m_lines(lines) {}

    std::vector<Stmt> parse_top()
    {
        if (!m_lines.empty() && m_lines.front().indent != 0)
            throw SyntaxError{};
        auto stmts = parse_suite(0);
        if (m_pos != m_lines.size())
            throw SyntaxError{};
        return stmts;
    }

private:
    Stmt header(const LogicalLine& line)
    {
        Stmt s;
        s.first = line.first_line;
        s.header_last = line.last_line;
        s.last = line.last_line;
        s.keyword = line.keyword;
        s.indent = leading_ws(line.text);
        if (s.keyword == "async") {
            auto next = word_after(line.text, "async");
            if (next == "def" || next == "for" || next == "with")
                s.keyword = next;
        }
        if (s.keyword == "def" || s.keyword == "class")
            s.name = word_after(line.text.substr(line.text.find(s.keyword)), s.keyword);
        return s;
    }

    /// Parses the suite that follows a block-opening header at `indent`.
    std::vector<Stmt> parse_block_after(std::size_t indent)
    {
        if (m_pos >= m_lines.size() || m_lines[m_pos].indent <= indent)
            throw SyntaxError{}; // expected an indented block
        const std::size_t body_indent = m_lines[m_pos].indent;
        auto body = parse_suite(body_indent);
        if (m_pos < m_lines.size() && m_lines[m_pos].indent > indent)
            throw SyntaxError{}; // dedent does not match any outer level
        return body;
    }

    std::vector<Stmt> parse_suite(std::size_t indent)
    {
        std::vector<Stmt> stmts;
        while (m_pos < m_lines.size()) {
            const LogicalLine& line = m_lines[m_pos];
            if (line.indent < indent)
                break;
            if (line.indent > indent)
                throw SyntaxError{}; // unexpected indent
            if (is_clause_keyword(line.keyword))
                throw SyntaxError{}; // clause without its statement

            Stmt s = header(line);
            ++m_pos;
            if (line.opens_block()) {
                s.has_suite = true;
                s.body = parse_block_after(indent);
                s.last = s.body.back().last;
            }
            while (m_pos < m_lines.size() && m_lines[m_pos].indent == indent
                   && is_clause_keyword(m_lines[m_pos].keyword) && is_compound_keyword(s.keyword)) {
                const LogicalLine& clause = m_lines[m_pos];
                ++m_pos;
                s.last = clause.last_line;
                if (clause.opens_block()) {
                    auto suite = parse_block_after(indent);
                    s.last = suite.back().last;
                }
            }
            stmts.push_back(std::move(s));
        }
        return merge_decorators(std::move(stmts));
    }

    static std::vector<Stmt> merge_decorators(std::vector<Stmt> stmts)
    {
        std::vector<Stmt> out;
        std::optional<Stmt> pending;
        for (auto& s : stmts) {
            if (s.keyword == "@") {
                if (!pending)
                    pending = s;
                continue;
            }
            if (pending) {
                if (s.keyword != "def" && s.keyword != "class")
                    throw SyntaxError{};
                s.first = pending->first;
                s.indent = pending->indent;
                pending.reset();
            }
            out.push_back(std::move(s));
        }
        if (pending)
            throw SyntaxError{}; // dangling decorator
        return out;
    }

    const std::vector<LogicalLine>& m_lines;
    std::size_t m_pos = 0;
};

bool is_compound(const Stmt& s)
{
    return s.has_suite || is_compound_keyword(s.keyword) || s.keyword == "async";
}

/// A run of statements that becomes one unit; spans are assigned afterwards.
struct Group
{
    std::vector<const Stmt*> stmts;
    std::size_t code_last = 0;
    std::string indent;
};

/// Assigns contiguous spans to groups: group k starts right after group
/// k-1's code, the first starts at `start` and the last ends at `end`.
std::vector<Span> contiguous_spans(const std::vector<Group>& groups, std::size_t start, std::size_t end)
{
    std::vector<Span> spans;
    std::size_t next = start;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        std::size_t last = i + 1 == groups.size() ? end : groups[i].code_last;
        spans.push_back({next, last});
        next = last + 1;
    }
    return spans;
}

OutlineNode function_node(const Stmt& fn, Span span, SegmentKind kind, const std::string& symbol)
{
    OutlineNode node;
    node.level = Level::function;
    node.span = span;
    node.indent = fn.indent;
    node.symbol = symbol;

    std::vector<Group> groups;
    if (fn.has_suite) {
        for (const auto& s : fn.body) {
            const bool compound = is_compound(s);
            if (compound || groups.empty() || groups.back().stmts.empty()
                || is_compound(*groups.back().stmts.back())) {
                groups.push_back({});
                groups.back().indent = s.indent;
            }
            groups.back().stmts.push_back(&s);
            groups.back().code_last = s.last;
        }
    }

    if (groups.size() < 2) {
        node.kind = kind;
        return node;
    }

    auto spans = contiguous_spans(groups, fn.header_last + 1, span.end_line);
    for (std::size_t i = 0; i < groups.size(); ++i) {
        OutlineNode block;
        block.level = Level::block;
        block.span = spans[i];
        block.indent = groups[i].indent;
        block.symbol = symbol;
        const Stmt& only = *groups[i].stmts.front();
        if (groups[i].stmts.size() == 1 && only.keyword == "def")
            block.kind = SegmentKind::function;
        else if (groups[i].stmts.size() == 1 && only.keyword == "class")
            block.kind = SegmentKind::class_header;
        else
            block.kind = SegmentKind::block;
        node.children.push_back(std::move(block));
    }
    return node;
}

/// Class headers and methods of one class, as siblings at function level.
void class_nodes(const Stmt& cls, Span span, std::vector<OutlineNode>& out)
{
    if (!cls.has_suite) {
        OutlineNode header;
        header.kind = SegmentKind::class_header;
        header.span = span;
        header.indent = cls.indent;
        header.symbol = cls.name;
        out.push_back(std::move(header));
        return;
    }

    // Group 0 is the class signature plus any leading class-level statements.
    std::vector<Group> groups(1);
    groups[0].code_last = cls.header_last;
    groups[0].indent = cls.indent;
    std::vector<bool> is_method{false};
    for (const auto& s : cls.body) {
        const bool method = s.keyword == "def";
        if (method || is_method.back()) {
            groups.push_back({});
            groups.back().indent = s.indent;
            is_method.push_back(method);
        }
        groups.back().stmts.push_back(&s);
        groups.back().code_last = s.last;
    }

    auto spans = contiguous_spans(groups, span.start_line, span.end_line);
    for (std::size_t i = 0; i < groups.size(); ++i) {
        if (is_method[i]) {
            const Stmt& m = *groups[i].stmts.front();
            out.push_back(function_node(m, spans[i], SegmentKind::method, cls.name + "." + m.name));
        } else {
            OutlineNode header;
            header.kind = SegmentKind::class_header;
            header.span = spans[i];
            header.indent = groups[i].indent;
            header.symbol = cls.name;
            out.push_back(std::move(header));
        }
    }
}

} // namespace

std::optional<std::vector<OutlineNode>> PythonSegmenter::outline(std::string_view source) const
{
    const auto scan = python::scan_logical_lines(source);
    if (scan.error)
        return std::nullopt;

    std::vector<Stmt> stmts;
    try {
        stmts = SuiteParser(scan.lines).parse_top();
    } catch (const SyntaxError&) {
        return std::nullopt;
    }

    std::vector<OutlineNode> nodes;
    const std::size_t total = scan.physical_lines;
    if (total == 0)
        return nodes;
    if (stmts.empty()) {
        OutlineNode only;
        only.kind = SegmentKind::file;
        only.span = {1, total};
        nodes.push_back(std::move(only));
        return nodes;
    }

    // Top-level items: each def/class on its own, other statements merged.
    std::vector<Group> items;
    for (const auto& s : stmts) {
        const bool definition = s.keyword == "def" || s.keyword == "class";
        if (definition || items.empty() || items.back().stmts.empty()
            || items.back().stmts.back()->keyword == "def" || items.back().stmts.back()->keyword == "class") {
            items.push_back({});
            items.back().indent = s.indent;
        }
        items.back().stmts.push_back(&s);
        items.back().code_last = s.last;
    }

    const auto spans = contiguous_spans(items, 1, total);
    for (std::size_t i = 0; i < items.size(); ++i) {
        const Stmt& head = *items[i].stmts.front();
        if (head.keyword == "def") {
            nodes.push_back(function_node(head, spans[i], SegmentKind::function, head.name));
        } else if (head.keyword == "class") {
            class_nodes(head, spans[i], nodes);
        } else {
            OutlineNode fragment;
            fragment.kind = SegmentKind::file;
            fragment.span = spans[i];
            fragment.indent = head.indent;
            nodes.push_back(std::move(fragment));
        }
    }
    return nodes;
}

const Segmenter& python_segmenter()
{
    static const PythonSegmenter instance;
    return instance;
}

} // namespace ocd
