#include "ocd/query.hpp"

#include "ocd/errors.hpp"

namespace ocd {

StructuredQuery build_query(const std::string& issue_text, const std::vector<FaultLocation>& fault_locations)
{
    if (issue_text.empty())
        throw ValidationError("issue text must not be empty");

    StructuredQuery q{issue_text, fault_locations, {}};
    q.rendered = "ISSUE:\n" + issue_text + "\n\nFAULT LOCATIONS:\n";
    for (const auto& f : fault_locations) {
        q.rendered += "- " + f.path + ":" + std::to_string(f.line);
        if (f.symbol)
            q.rendered += " [" + *f.symbol + "]";
        q.rendered.push_back('\n');
    }
    return q;
}

} // namespace ocd
