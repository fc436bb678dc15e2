#pragma once

#include "ocd/code_model.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ocd {

struct FaultLocation
{
    std::string path;
    std::size_t line = 0;
    std::optional<std::string> symbol;

    friend bool operator==(const FaultLocation&, const FaultLocation&) = default;
};

void to_json(nlohmann::json& j, const FaultLocation& f);
void from_json(const nlohmann::json& j, FaultLocation& f);

/// A mock-oracle requirement: either a unit id, or the leaf segment that
/// covers `path:line`.
struct SegmentRef
{
    std::optional<std::string> id;
    std::string path;
    std::size_t line = 0;
};

/// One issue-resolution task as read from an instance file. Relative paths
/// are resolved against the instance file's directory.
struct Instance
{
    std::string instance_id;
    std::string repo;
    std::string issue_text;
    std::vector<FaultLocation> fault_locations;
    std::vector<std::string> context_files;
    std::filesystem::path repo_root;
    std::optional<std::filesystem::path> gold_patch_path;
    std::optional<std::filesystem::path> coverage_report_path;
    std::optional<std::string> test_command;

    std::vector<SegmentRef> mock_required;
    std::vector<SegmentRef> mock_distractors;
};

Instance parse_instance(const nlohmann::json& doc, const std::filesystem::path& base_dir);
Instance load_instance(const std::filesystem::path& file);

/// Reads every context file from repo_root; throws ValidationError naming
/// a missing file.
std::vector<SourceFile> read_context_files(const Instance& instance);

UnitTree build_tree(const Instance& instance);

/// Resolves mock segment references against the tree. References that name
/// no known unit are kept verbatim (they can never be satisfied).
UnitSet resolve_refs(const UnitTree& tree, const std::vector<SegmentRef>& refs);

std::string read_file(const std::filesystem::path& file);

} // namespace ocd
