#pragma once

#include "ocd/instance.hpp"

#include <string>
#include <vector>

namespace ocd {

/// The query paired with every segment at training and inference time.
struct StructuredQuery
{
    std::string issue_text;
    std::vector<FaultLocation> fault_locations;
    std::string rendered;
};

/// Renders
///   ISSUE:\n<issue>\n\nFAULT LOCATIONS:\n- <path>:<line> [<symbol>]\n...
/// with the bracket omitted when a location has no symbol. Throws
/// ValidationError on an empty issue text.
StructuredQuery build_query(const std::string& issue_text, const std::vector<FaultLocation>& fault_locations);

} // namespace ocd
