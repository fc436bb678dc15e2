#include "ocd/unified_diff.hpp"

#include "ocd/errors.hpp"
#include "ocd/text.hpp"

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>

namespace ocd::diff {

namespace {

bool parse_number(std::string_view& s, std::size_t& out)
{
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc{} || ptr == s.data())
        return false;
    s.remove_prefix(static_cast<std::size_t>(ptr - s.data()));
    return true;
}

/// "-a[,b]" or "+c[,d]"; a missing count means 1.
bool parse_range(std::string_view& s, char sign, std::size_t& start, std::size_t& count)
{
    if (s.empty() || s.front() != sign)
        return false;
    s.remove_prefix(1);
    if (!parse_number(s, start))
        return false;
    count = 1;
    if (!s.empty() && s.front() == ',') {
        s.remove_prefix(1);
        if (!parse_number(s, count))
            return false;
    }
    return true;
}

bool parse_hunk_header(std::string_view line, Hunk& hunk)
{
    if (!starts_with(line, "@@ "))
        return false;
    line.remove_prefix(3);
    if (!parse_range(line, '-', hunk.old_start, hunk.old_count))
        return false;
    if (line.empty() || line.front() != ' ')
        return false;
    line.remove_prefix(1);
    if (!parse_range(line, '+', hunk.new_start, hunk.new_count))
        return false;
    return starts_with(line, " @@");
}

struct TextLine
{
    std::string text;
    bool newline = true;
};

std::vector<TextLine> to_lines(std::string_view text)
{
    std::vector<TextLine> out;
    for (auto l : split_lines(text)) {
        TextLine t;
        t.newline = !l.empty() && l.back() == '\n';
        t.text = std::string(t.newline ? l.substr(0, l.size() - 1) : l);
        out.push_back(std::move(t));
    }
    return out;
}

} // namespace

std::string normalize_path(std::string_view header_path)
{
    auto tab = header_path.find('\t');
    if (tab != std::string_view::npos)
        header_path = header_path.substr(0, tab);
    header_path = trim(header_path);
    if (header_path == "/dev/null")
        return std::string(header_path);
    if (starts_with(header_path, "a/") || starts_with(header_path, "b/"))
        header_path.remove_prefix(2);
    return std::string(header_path);
}

std::vector<FilePatch> parse(std::string_view text)
{
    std::vector<std::string_view> lines;
    for (auto l : split_lines(text)) {
        if (!l.empty() && l.back() == '\n')
            l.remove_suffix(1);
        lines.push_back(l);
    }

    std::vector<FilePatch> patches;
    std::size_t hunk_count = 0;
    std::size_t i = 0;
    while (i < lines.size()) {
        const std::string_view line = lines[i];
        const std::size_t ln = i + 1;

        if (starts_with(line, "--- ")) {
            if (i + 1 >= lines.size() || !starts_with(lines[i + 1], "+++ "))
                throw ParseError(ln + 1, "expected '+++' header after '---'");
            FilePatch fp;
            fp.old_path = normalize_path(line.substr(4));
            fp.new_path = normalize_path(lines[i + 1].substr(4));
            if (fp.old_path.empty() || fp.new_path.empty())
                throw ParseError(ln, "empty path in file header");
            patches.push_back(std::move(fp));
            i += 2;
            continue;
        }

        if (starts_with(line, "@@")) {
            if (patches.empty())
                throw ParseError(ln, "hunk without a file header");
            Hunk hunk;
            hunk.header_line = ln;
            if (!parse_hunk_header(line, hunk))
                throw ParseError(ln, "malformed hunk header");
            std::size_t old_left = hunk.old_count;
            std::size_t new_left = hunk.new_count;
            ++i;
            while (old_left > 0 || new_left > 0) {
                if (i >= lines.size())
                    throw ParseError(i, "hunk ends before its declared line counts");
                std::string_view body = lines[i];
                const std::size_t bl = i + 1;
                ++i;
                if (!body.empty() && body.front() == '\\') {
                    if (hunk.lines.empty())
                        throw ParseError(bl, "no-newline marker before any hunk line");
                    hunk.lines.back().no_newline = true;
                    continue;
                }
                char op = body.empty() ? ' ' : body.front();
                HunkLine hl;
                hl.op = op;
                hl.text = std::string(body.empty() ? body : body.substr(1));
                if (op == ' ') {
                    if (old_left == 0 || new_left == 0)
                        throw ParseError(bl, "context line exceeds hunk counts");
                    --old_left;
                    --new_left;
                } else if (op == '-') {
                    if (old_left == 0)
                        throw ParseError(bl, "removed line exceeds hunk counts");
                    --old_left;
                } else if (op == '+') {
                    if (new_left == 0)
                        throw ParseError(bl, "added line exceeds hunk counts");
                    --new_left;
                } else {
                    throw ParseError(bl, "unexpected line inside hunk");
                }
                hunk.lines.push_back(std::move(hl));
            }
            if (i < lines.size() && !lines[i].empty() && lines[i].front() == '\\') {
                if (!hunk.lines.empty())
                    hunk.lines.back().no_newline = true;
                ++i;
            }
            patches.back().hunks.push_back(std::move(hunk));
            ++hunk_count;
            continue;
        }

        // Preamble: "diff --git", "index", mode lines, commit text.
        ++i;
    }

    if (hunk_count == 0)
        throw ParseError(lines.empty() ? 1 : lines.size(), "diff contains no hunks");
    return patches;
}

std::string apply_to_text(const FilePatch& patch, std::string_view original)
{
    const auto src = to_lines(original);
    std::vector<TextLine> out;
    std::size_t cursor = 0;

    for (std::size_t h = 0; h < patch.hunks.size(); ++h) {
        const Hunk& hunk = patch.hunks[h];
        std::vector<const HunkLine*> old_side;
        for (const auto& l : hunk.lines)
            if (l.op != '+')
                old_side.push_back(&l);

        auto matches_at = [&](std::size_t pos) {
            if (pos < cursor || pos + old_side.size() > src.size())
                return false;
            for (std::size_t k = 0; k < old_side.size(); ++k)
                if (src[pos + k].text != old_side[k]->text)
                    return false;
            return true;
        };

        // old_start is 1-based; with an empty old side it names the line after
        // which the new lines go.
        const std::size_t expected = hunk.old_count == 0 ? hunk.old_start : (hunk.old_start == 0 ? 0 : hunk.old_start - 1);
        std::optional<std::size_t> found;
        for (std::size_t delta = 0; !found && delta <= src.size() + 1; ++delta) {
            if (expected >= delta && matches_at(expected - delta))
                found = expected - delta;
            else if (matches_at(expected + delta))
                found = expected + delta;
        }
        if (!found)
            throw ApplyError("hunk " + std::to_string(h + 1) + " does not apply to " + patch.target());

        out.insert(out.end(), src.begin() + static_cast<std::ptrdiff_t>(cursor),
                   src.begin() + static_cast<std::ptrdiff_t>(*found));
        for (const auto& l : hunk.lines) {
            if (l.op == '-')
                continue;
            out.push_back({l.text, !l.no_newline});
        }
        cursor = *found + old_side.size();
    }
    out.insert(out.end(), src.begin() + static_cast<std::ptrdiff_t>(cursor), src.end());

    std::string result;
    for (std::size_t k = 0; k < out.size(); ++k) {
        result += out[k].text;
        if (out[k].newline || k + 1 < out.size())
            result.push_back('\n');
    }
    return result;
}

void apply(const std::vector<FilePatch>& patches, const std::filesystem::path& root)
{
    namespace fs = std::filesystem;
    for (const auto& fp : patches) {
        const fs::path target = root / fs::path(fp.target()).lexically_normal();
        const auto rel = target.lexically_relative(root);
        if (rel.empty() || *rel.begin() == "..")
            throw ApplyError("patch escapes the repository: " + fp.target());

        std::string original;
        if (!fp.creates()) {
            std::ifstream in(target, std::ios::binary);
            if (!in)
                throw ApplyError("cannot read " + fp.target());
            std::stringstream ss;
            ss << in.rdbuf();
            original = ss.str();
        }
        std::string patched = apply_to_text(fp, original);
        if (fp.deletes()) {
            fs::remove(target);
            continue;
        }
        fs::create_directories(target.parent_path());
        std::ofstream out(target, std::ios::binary | std::ios::trunc);
        if (!out)
            throw ApplyError("cannot write " + fp.target());
        out << patched;
    }
}

} // namespace ocd::diff
