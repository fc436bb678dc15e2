#pragma once

#include "ocd/ga_search.hpp"
#include "ocd/oracle.hpp"
#include "ocd/priority.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace ocd {

struct CompressionConfig
{
    double rate = 5.0;
    std::size_t window_tokens = 512;
    std::size_t stride_tokens = 256;
    std::string token_counter = "approx";
};

struct PathsConfig
{
    std::string corpus = "corpus.jsonl";
    std::string traces = "traces";
    std::string output = "out";
};

/// Everything a run reads from --config, --set and the global flags.
struct RunConfig
{
    PriorityWeights weights;
    GAConfig ga;
    OracleConfig oracle;
    CompressionConfig compression;
    std::size_t parallelism = 1;
    PathsConfig paths;

    /// Range checks of every section; throws ValidationError.
    void validate() const;

    nlohmann::ordered_json to_json() const;

    /// Overlays `doc` on the defaults. Unknown keys and mistyped values
    /// throw ValidationError naming the key.
    static RunConfig from_json(const nlohmann::json& doc);
    static RunConfig load(const std::filesystem::path& file);

    /// "section.key=value"; the value is read as JSON when it parses,
    /// otherwise as a string.
    void apply_override(std::string_view assignment);
};

} // namespace ocd
