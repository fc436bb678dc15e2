#pragma once

#include "ocd/code_model.hpp"
#include "ocd/tokens.hpp"

#include <string>
#include <vector>

namespace ocd {

struct RenderedFile
{
    std::string path;
    std::string text;
};

struct RenderedContext
{
    std::vector<RenderedFile> per_file;
    std::size_t total_tokens = 0;
    UnitSet included_leaf_ids;
    std::size_t placeholders = 0;
    std::size_t omitted_lines = 0; // sum of N over all placeholders
};

/// "<indent># ... N lines omitted\n"
std::string placeholder_line(std::string_view indent, std::size_t omitted);

/// Render the included units of every included file. Each run of adjacent
/// excluded siblings becomes one placeholder counting the omitted leaf
/// lines. Throws ValidationError when `included` is not upward-closed.
RenderedContext render(const UnitTree& tree, const UnitSet& included,
                       const TokenCounter& counter = default_token_counter());

/// Render the upward closure of a set of leaf segments.
RenderedContext render_leaves(const UnitTree& tree, const UnitSet& leaves,
                              const TokenCounter& counter = default_token_counter());

/// The dump format: each file as "### FILE: <path>\n" followed by its text.
std::string dump(const std::vector<RenderedFile>& files);

} // namespace ocd
