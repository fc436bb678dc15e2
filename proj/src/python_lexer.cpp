#include "ocd/python_lexer.hpp"

#include "ocd/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace ocd::python {

namespace {

constexpr std::array<std::string_view, 35> kKeywords = {
    "False", "None", "True", "and", "as", "assert", "async", "await", "break",
    "class", "continue", "def", "del", "elif", "else", "except", "finally", "for",
    "from", "global", "if", "import", "in", "is", "lambda", "nonlocal", "not",
    "or", "pass", "raise", "return", "try", "while", "with", "yield",
};

bool is_ident_start(unsigned char c)
{
    return std::isalpha(c) || c == '_' || c >= 0x80;
}

bool is_ident_char(unsigned char c)
{
    return std::isalnum(c) || c == '_' || c >= 0x80;
}

bool is_quote(char c)
{
    return c == '\'' || c == '"';
}

/// Returns true when `word` is a legal string prefix (r, b, u, f and the
/// two-letter raw combinations). `raw` is set when the literal is raw.
bool string_prefix(std::string_view word, bool& raw)
{
    if (word.empty() || word.size() > 2)
        return false;
    std::string lower;
    for (char c : word)
        lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    static constexpr std::array<std::string_view, 8> prefixes = {"r", "u", "b", "f", "br", "rb", "fr", "rf"};
    if (std::find(prefixes.begin(), prefixes.end(), lower) == prefixes.end())
        return false;
    raw = lower.find('r') != std::string::npos;
    return true;
}

struct StringState
{
    bool active = false;
    char quote = '\0';
    bool triple = false;
    bool raw = false;
    std::size_t start_line = 0;
};

/// Opens a string literal at text[pos] (a quote). Returns the position just
/// past the opening delimiter.
std::size_t open_string(std::string_view text, std::size_t pos, bool raw, std::size_t line, StringState& st)
{
    st.active = true;
    st.quote = text[pos];
    st.raw = raw;
    st.start_line = line;
    if (pos + 2 < text.size() && text[pos + 1] == st.quote && text[pos + 2] == st.quote) {
        st.triple = true;
        return pos + 3;
    }
    st.triple = false;
    return pos + 1;
}

/// Advance inside a string literal. Stops after the closing delimiter or at
/// a newline that the literal does not swallow. Returns the new position.
std::size_t advance_string(std::string_view text, std::size_t pos, StringState& st)
{
    while (pos < text.size()) {
        char c = text[pos];
        if (c == '\\') {
            // Both raw and cooked literals treat a backslash as protecting the
            // next character from terminating the literal.
            pos += 2;
            continue;
        }
        if (c == '\n' && !st.triple)
            return pos;
        if (c == st.quote) {
            if (!st.triple) {
                st.active = false;
                return pos + 1;
            }
            if (pos + 2 < text.size() && text[pos + 1] == st.quote && text[pos + 2] == st.quote) {
                st.active = false;
                return pos + 3;
            }
        }
        ++pos;
    }
    // May exceed text.size() by one when the text ends in a backslash.
    return pos;
}

} // namespace

bool is_keyword(std::string_view word)
{
    return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

namespace {

// Calls visit(word, end) for every identifier or keyword outside comments,
// strings and numbers; `end` is the offset just past the word.
template <class Visit>
void walk_words(std::string_view text, Visit&& visit)
{
    std::size_t pos = 0;
    StringState st;
    while (pos < text.size()) {
        if (st.active) {
            pos = advance_string(text, pos, st);
            if (st.active && pos < text.size() && text[pos] == '\n') {
                // Unterminated single-quoted literal: resume lexing on the next line.
                st.active = false;
            }
            continue;
        }
        const auto c = static_cast<unsigned char>(text[pos]);
        if (c == '#') {
            auto nl = text.find('\n', pos);
            pos = nl == std::string_view::npos ? text.size() : nl;
            continue;
        }
        if (is_quote(static_cast<char>(c))) {
            pos = open_string(text, pos, false, 0, st);
            continue;
        }
        if (std::isdigit(c)) {
            while (pos < text.size() && (is_ident_char(static_cast<unsigned char>(text[pos])) || text[pos] == '.'))
                ++pos;
            continue;
        }
        if (is_ident_start(c)) {
            std::size_t start = pos;
            while (pos < text.size() && is_ident_char(static_cast<unsigned char>(text[pos])))
                ++pos;
            std::string_view word = text.substr(start, pos - start);
            bool raw = false;
            if (pos < text.size() && is_quote(text[pos]) && string_prefix(word, raw)) {
                pos = open_string(text, pos, raw, 0, st);
                continue;
            }
            visit(word, pos);
            continue;
        }
        ++pos;
    }
}

} // namespace

std::vector<std::string> lex_identifiers(std::string_view text)
{
    std::vector<std::string> out;
    walk_words(text, [&](std::string_view word, std::size_t) {
        if (!is_keyword(word))
            out.emplace_back(word);
    });
    return out;
}

std::set<std::string> called_names(std::string_view text)
{
    std::set<std::string> out;
    std::string_view previous;
    walk_words(text, [&](std::string_view word, std::size_t end) {
        while (end < text.size() && (text[end] == ' ' || text[end] == '\t'))
            ++end;
        const bool call = end < text.size() && text[end] == '(';
        if (call && !is_keyword(word) && previous != "def" && previous != "class")
            out.emplace(word);
        previous = word;
    });
    return out;
}

std::set<std::string> identifier_set(std::string_view text)
{
    auto ids = lex_identifiers(text);
    return {ids.begin(), ids.end()};
}

ScanResult scan_logical_lines(std::string_view source)
{
    ScanResult result;
    const auto physical = split_lines(source);
    result.physical_lines = physical.size();

    StringState st;
    int depth = 0;
    bool in_logical = false;
    LogicalLine cur;
    std::size_t cur_offset = 0;
    std::size_t offset = 0;

    auto fail = [&](std::size_t line, std::string msg) {
        result.error = ScanError{line, std::move(msg)};
        return result;
    };

    for (std::size_t i = 0; i < physical.size(); offset += physical[i].size(), ++i) {
        const std::size_t ln = i + 1;
        const std::string_view raw_line = physical[i];
        const std::string_view line = strip_eol(raw_line);

        std::size_t pos = 0;
        if (!in_logical) {
            std::size_t width = 0;
            while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\f')) {
                if (line[pos] == ' ')
                    ++width;
                else if (line[pos] == '\t')
                    width = (width / 8 + 1) * 8;
                else
                    width = 0;
                ++pos;
            }
            if (pos == line.size() || line[pos] == '#')
                continue;
            in_logical = true;
            cur = LogicalLine{};
            cur.first_line = ln;
            cur.indent = width;
            cur_offset = offset;
            if (line[pos] == '@') {
                cur.keyword = "@";
            } else {
                std::size_t k = pos;
                while (k < line.size() && is_ident_char(static_cast<unsigned char>(line[k])))
                    ++k;
                if (k > pos && !std::isdigit(static_cast<unsigned char>(line[pos])))
                    cur.keyword = std::string(line.substr(pos, k - pos));
            }
        }

        bool backslash = false;
        bool escaped_eol = false;
        while (pos < line.size()) {
            if (st.active) {
                // Scan within this physical line only; a backslash at the very
                // end of the line continues a single-quoted literal.
                std::size_t next = advance_string(line, pos, st);
                if (st.active && next >= line.size()) {
                    escaped_eol = next > line.size();
                    pos = line.size();
                    break;
                }
                if (!st.active)
                    cur.last_char = st.quote;
                pos = next;
                continue;
            }
            const auto c = static_cast<unsigned char>(line[pos]);
            if (c == '#')
                break;
            if (c == '\\' && pos + 1 == line.size()) {
                backslash = true;
                ++pos;
                break;
            }
            if (is_quote(static_cast<char>(c))) {
                pos = open_string(line, pos, false, ln, st);
                cur.last_char = static_cast<char>(c);
                continue;
            }
            if (is_ident_start(c)) {
                std::size_t start = pos;
                while (pos < line.size() && is_ident_char(static_cast<unsigned char>(line[pos])))
                    ++pos;
                bool raw = false;
                if (pos < line.size() && is_quote(line[pos]) && string_prefix(line.substr(start, pos - start), raw)) {
                    cur.last_char = line[pos];
                    pos = open_string(line, pos, raw, ln, st);
                } else {
                    cur.last_char = line[pos - 1];
                }
                continue;
            }
            if (c == '(' || c == '[' || c == '{') {
                ++depth;
            } else if (c == ')' || c == ']' || c == '}') {
                if (--depth < 0)
                    return fail(ln, "unmatched closing bracket");
            }
            if (!std::isspace(c))
                cur.last_char = static_cast<char>(c);
            ++pos;
        }

        if (st.active && !st.triple) {
            if (!escaped_eol)
                return fail(st.start_line, "unterminated string literal");
            continue;
        }
        if (st.active || depth > 0 || backslash)
            continue;

        cur.last_line = ln;
        cur.text = source.substr(cur_offset, offset + raw_line.size() - cur_offset);
        result.lines.push_back(cur);
        in_logical = false;
    }

    if (st.active)
        return fail(st.start_line, "unterminated string literal");
    if (depth > 0)
        return fail(physical.size(), "unclosed bracket at end of file");
    if (in_logical)
        return fail(physical.size(), "line continuation at end of file");
    return result;
}

} // namespace ocd::python
