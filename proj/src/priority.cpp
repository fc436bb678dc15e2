#include "ocd/priority.hpp"

#include "ocd/errors.hpp"
#include "ocd/python_lexer.hpp"
#include "ocd/text.hpp"
#include "ocd/unified_diff.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace ocd {

void PriorityWeights::validate() const
{
    if (!(w_p >= 0.0) || !(w_c >= 0.0) || !(w_s >= 0.0))
        throw ValidationError("priority weights must be non-negative");
    if (w_p == 0.0 && w_c == 0.0 && w_s == 0.0)
        throw ValidationError("priority weights must not all be zero");
}

std::string canonical_path(std::string_view path)
{
    while (starts_with(path, "./"))
        path.remove_prefix(2);
    return std::string(path);
}

PatchInfo parse_patch(std::string_view patch_text)
{
    PatchInfo info;
    for (const auto& fp : diff::parse(patch_text)) {
        if (!fp.creates())
            info.files.insert(canonical_path(fp.old_path));
        if (!fp.deletes())
            info.files.insert(canonical_path(fp.new_path));
        for (const auto& hunk : fp.hunks)
            for (const auto& line : hunk.lines)
                if (line.op != ' ')
                    for (auto& id : python::lex_identifiers(line.text))
                        info.identifiers.insert(std::move(id));
    }
    return info;
}

CoverageReport parse_coverage(std::string_view json_text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("coverage report: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("files") || !doc["files"].is_object())
        throw ValidationError("coverage report: expected {\"files\": {...}}");

    CoverageReport report;
    for (const auto& [path, lines] : doc["files"].items()) {
        if (!lines.is_array())
            throw ValidationError("coverage report: lines for " + path + " must be an array");
        auto& set = report.lines[canonical_path(path)];
        for (const auto& l : lines) {
            if (!l.is_number_integer() || l.get<long long>() < 1)
                throw ValidationError("coverage report: non-positive line number for " + path);
            set.insert(static_cast<std::size_t>(l.get<long long>()));
        }
    }
    return report;
}

CoverageReport load_coverage(const std::filesystem::path& file)
{
    std::ifstream in(file);
    if (!in)
        throw ValidationError("cannot read coverage report: " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_coverage(ss.str());
}

double sym_score(std::string_view unit_text, const std::set<std::string>& patch_ids)
{
    if (patch_ids.empty())
        return 0.0;
    const auto unit_ids = python::identifier_set(unit_text);
    std::size_t hits = 0;
    for (const auto& id : patch_ids)
        hits += unit_ids.count(id);
    return static_cast<double>(hits) / static_cast<double>(patch_ids.size());
}

double priority_from_signals(bool in_patch_file, std::size_t covered_lines, double symbol_overlap,
                             const PriorityWeights& w)
{
    return w.w_p * (in_patch_file ? 1.0 : 0.0) + w.w_c * std::log1p(static_cast<double>(covered_lines))
           + w.w_s * symbol_overlap;
}

namespace {

std::size_t covered_in(const CoverageReport& cov, const CodeUnit& unit)
{
    auto it = cov.lines.find(canonical_path(unit.path));
    if (it == cov.lines.end() || unit.span.empty())
        return 0;
    auto lo = it->second.lower_bound(unit.span.start_line);
    auto hi = it->second.upper_bound(unit.span.end_line);
    return static_cast<std::size_t>(std::distance(lo, hi));
}

} // namespace

double priority(const UnitTree& tree, const CodeUnit& unit, const PatchInfo& patch, const CoverageReport& cov,
                const PriorityWeights& w)
{
    const bool in_patch = patch.files.count(canonical_path(unit.path)) != 0;
    return priority_from_signals(in_patch, covered_in(cov, unit), sym_score(tree.text(unit), patch.identifiers), w);
}

PriorityMap compute_priorities(const UnitTree& tree, const PatchInfo& patch, const CoverageReport& cov,
                               const PriorityWeights& w)
{
    PriorityMap out;
    out.reserve(tree.size());
    for (const auto& id : tree.unit_order())
        out.emplace(id, priority(tree, tree.unit(id), patch, cov, w));
    return out;
}

} // namespace ocd
