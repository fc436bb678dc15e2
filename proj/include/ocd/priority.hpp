#pragma once

#include "ocd/code_model.hpp"

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>

namespace ocd {

/// What a gold patch touches: the files it modifies and the identifiers on
/// its added and removed lines.
struct PatchInfo
{
    std::set<std::string> files;
    std::set<std::string> identifiers;
};

/// Covered lines per repo-relative path.
struct CoverageReport
{
    std::map<std::string, std::set<std::size_t>> lines;
};

struct PriorityWeights
{
    double w_p = 2.0; // gold-patch file membership
    double w_c = 1.0; // log-dampened coverage count
    double w_s = 1.0; // symbol overlap

    /// Throws ValidationError unless all weights are >= 0 and one is > 0.
    void validate() const;
};

PatchInfo parse_patch(std::string_view patch_text);

/// {"files": {"path": [line, ...]}}; throws ValidationError on bad input.
CoverageReport parse_coverage(std::string_view json_text);
CoverageReport load_coverage(const std::filesystem::path& file);

/// Fraction of `patch_ids` that also occur in `unit_text`; 0 for no ids.
double sym_score(std::string_view unit_text, const std::set<std::string>& patch_ids);

/// Weighted sum of patch-file membership, ln(1 + covered lines in span) and
/// symbol overlap, computed on the unit's own span.
double priority(const UnitTree& tree, const CodeUnit& unit, const PatchInfo& patch, const CoverageReport& cov,
                const PriorityWeights& w);

/// The same formula with the three signals given directly.
double priority_from_signals(bool in_patch_file, std::size_t covered_lines, double symbol_overlap,
                             const PriorityWeights& w);

using PriorityMap = std::unordered_map<UnitId, double>;

/// Priority of every unit in the tree.
PriorityMap compute_priorities(const UnitTree& tree, const PatchInfo& patch, const CoverageReport& cov,
                               const PriorityWeights& w);

/// Repository-relative form used for path comparisons ("./a/b.py" -> "a/b.py").
std::string canonical_path(std::string_view path);

} // namespace ocd
