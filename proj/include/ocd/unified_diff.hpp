#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ocd::diff {

struct HunkLine
{
    char op = ' '; // ' ', '+' or '-'
    std::string text; // without the leading op and without the line terminator
    bool no_newline = false; // followed by "\ No newline at end of file"
};

struct Hunk
{
    std::size_t old_start = 0;
    std::size_t old_count = 0;
    std::size_t new_start = 0;
    std::size_t new_count = 0;
    std::size_t header_line = 0; // line of the "@@" header within the diff text
    std::vector<HunkLine> lines;
};

struct FilePatch
{
    std::string old_path; // prefix-stripped; "/dev/null" for creations
    std::string new_path; // prefix-stripped; "/dev/null" for deletions
    std::vector<Hunk> hunks;

    bool creates() const { return old_path == "/dev/null"; }
    bool deletes() const { return new_path == "/dev/null"; }
    const std::string& target() const { return deletes() ? old_path : new_path; }
};

/// Parse a unified diff (plain or git-flavoured). Throws ParseError with the
/// offending line on malformed input or when the text holds no hunks.
std::vector<FilePatch> parse(std::string_view text);

/// Strip the conventional "a/" and "b/" prefixes and any timestamp suffix.
std::string normalize_path(std::string_view header_path);

class ApplyError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Apply `patches` to files under `root`. Hunks must match exactly but may
/// be found at an offset from their recorded position. Throws ApplyError.
void apply(const std::vector<FilePatch>& patches, const std::filesystem::path& root);

/// Apply hunks to in-memory text; used by apply() and directly testable.
std::string apply_to_text(const FilePatch& patch, std::string_view original);

} // namespace ocd::diff
