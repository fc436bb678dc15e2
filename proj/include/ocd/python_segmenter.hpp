#pragma once

#include "ocd/code_model.hpp"

namespace ocd {

/// Indentation-driven Python outline.
///
/// Top-level definitions become function-level units; a class contributes
/// class_header segments (its signature plus each run of class-level
/// statements) and one unit per method. Function bodies with two or more
/// top-level statement groups are split into blocks: every compound
/// statement is its own block and each maximal run of simple statements is
/// another. Nested definitions become function/class_header blocks and are
/// not split further. Top-level statements outside any definition form
/// file-kind fragments.
///
/// Blank and comment lines attach to the unit that follows them; trailing
/// ones at the end of the file attach to the last unit.
class PythonSegmenter : public Segmenter
{
public:
    std::optional<std::vector<OutlineNode>> outline(std::string_view source) const override;
};

} // namespace ocd
