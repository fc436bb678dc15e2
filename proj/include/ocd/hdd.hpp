#pragma once

#include "ocd/code_model.hpp"
#include "ocd/oracle.hpp"
#include "ocd/priority.hpp"

#include <map>
#include <ostream>

namespace ocd {

struct MinimizationResult
{
    UnitSet retained_leaf_ids;
    std::size_t oracle_calls = 0; // real oracle invocations, cache hits excluded
    std::size_t probes = 0;       // all probes, cache hits included
    std::map<Level, std::size_t> per_level_removed;
    std::size_t passes_completed = 0; // level passes run to the end
    bool one_minimal_certified = false;
    bool budget_exhausted = false;
};

/// Probe log shared by the level passes of one minimization.
class ProbeLog
{
public:
    explicit ProbeLog(std::ostream* trace = nullptr) : m_trace(trace) {}

    void record(std::string_view pass, const UnitSet& candidate, std::size_t removed, bool sufficient);

    std::size_t probes(std::string_view pass) const;
    std::size_t total() const { return m_total; }

private:
    std::ostream* m_trace;
    std::map<std::string, std::size_t, std::less<>> m_steps;
    std::size_t m_total = 0;
};

/// Units of `level` that own at least one of `leaves`, ascending by Φ with
/// unit order breaking ties.
std::vector<UnitId> level_units(const UnitTree& tree, const UnitSet& leaves, Level level, const PriorityMap& phi);

/// Complement-only ddmin over the retained units of one level. `leaves`
/// must be sufficient; removing a unit removes the leaves of its subtree.
/// Throws ValidationError if the input is insufficient and lets
/// BudgetExhausted propagate.
UnitSet ddmin_level(const UnitSet& leaves, Level level, OracleSession& session, const PriorityMap& phi,
                    ProbeLog& log, std::size_t* removed = nullptr);

/// File, function and block passes, then a certification sweep that
/// re-tests every single-leaf removal with fresh evaluations. On budget
/// exhaustion returns the last sufficient set, uncertified.
MinimizationResult minimize(const UnitSet& sufficient_leaves, OracleSession& session, const PriorityMap& phi,
                            std::ostream* trace = nullptr);

} // namespace ocd
