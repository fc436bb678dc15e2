#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ocd::python {

bool is_keyword(std::string_view word);

/// Identifier tokens in source order, skipping comments, string literals
/// and numeric literals; hard keywords are dropped.
std::vector<std::string> lex_identifiers(std::string_view text);

std::set<std::string> identifier_set(std::string_view text);

/// Names used as call targets: an identifier followed by '(' that is not
/// the name in a def or class statement. `obj.meth(` yields "meth".
std::set<std::string> called_names(std::string_view text);

/// One logical line: a statement header or simple statement, possibly
/// spanning several physical lines through brackets, backslashes or
/// triple-quoted strings.
struct LogicalLine
{
    std::size_t first_line = 0; // 1-based, inclusive
    std::size_t last_line = 0;
    std::size_t indent = 0;     // column width, tabs expanded to multiples of 8
    std::string keyword;        // leading identifier, "@" for decorators, else empty
    char last_char = '\0';      // last significant character outside comments
    std::string_view text;      // raw text from the first to the last physical line

    bool opens_block() const { return last_char == ':'; }
};

struct ScanError
{
    std::size_t line = 0;
    std::string message;
};

struct ScanResult
{
    std::vector<LogicalLine> lines;
    std::size_t physical_lines = 0;
    std::optional<ScanError> error;
};

/// Tokenize enough of `source` to recover logical lines. Blank and
/// comment-only physical lines never start a logical line.
ScanResult scan_logical_lines(std::string_view source);

} // namespace ocd::python
