#pragma once

#include "ocd/code_model.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace ocd::testing {

/// Random but syntactically valid Python: top-level statements, plain
/// functions, functions with compound statements (split into blocks),
/// decorated functions and classes with methods.
std::string random_python_file(std::mt19937_64& rng, std::size_t max_items = 4);

/// Random context of 1..max_files files whose tree has between 1 and
/// max_leaves leaves (regenerated until it fits).
std::vector<SourceFile> random_context(std::mt19937_64& rng, std::size_t max_files, std::size_t max_leaves);

/// A context with exactly `n` units at `level`: n one-function files, one
/// file of n functions, or one function of n compound-statement blocks.
std::vector<SourceFile> level_context(Level level, std::size_t n);

/// Hand-written fixture files under tests/fixtures, by file name.
std::vector<SourceFile> fixture_files();
std::string fixture(const std::string& name);

/// Brute-force reference for a required-set oracle.
bool covers(const UnitSet& s, const UnitSet& required);

/// Every single-element removal of `s` breaks `sufficient`.
bool one_minimal(const UnitSet& s, const std::function<bool(const UnitSet&)>& sufficient);

/// Ancestor chain of a unit computed by walking parent ids.
std::vector<UnitId> ancestors(const UnitTree& tree, const UnitId& id);

/// Random subset of `ids` with inclusion probability p.
UnitSet random_subset(std::mt19937_64& rng, const std::vector<UnitId>& ids, double p);

/// Writes a repository and instance file under `dir`; returns the instance path.
std::filesystem::path write_instance(const std::filesystem::path& dir, const std::string& instance_id,
                                     const std::vector<SourceFile>& files, const nlohmann::json& extra);

/// Hand-evaluated priority cases: weights, signals and the expected value.
struct PriorityCase
{
    double w_p, w_c, w_s;
    bool in_patch_file;
    std::size_t covered_lines;
    double symbol_overlap;
    double expected;
};
const std::vector<PriorityCase>& priority_table();

/// A unique scratch directory removed on destruction.
class ScratchDir
{
public:
    ScratchDir();
    ~ScratchDir();
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;
    const std::filesystem::path& path() const { return m_path; }

private:
    std::filesystem::path m_path;
};

} // namespace ocd::testing
