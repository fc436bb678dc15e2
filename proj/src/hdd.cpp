#include "ocd/hdd.hpp"

#include "ocd/errors.hpp"
#include "ocd/hash.hpp"

#include <json.hpp>

#include <algorithm>

namespace ocd {

void ProbeLog::record(std::string_view pass, const UnitSet& candidate, std::size_t removed, bool sufficient)
{
    auto it = m_steps.find(pass);
    if (it == m_steps.end())
        it = m_steps.emplace(std::string(pass), 0).first;
    const std::size_t step = it->second++;
    ++m_total;
    if (!m_trace)
        return;
    std::string material;
    for (const auto& id : candidate) {
        material += id;
        material.push_back('\n');
    }
    nlohmann::ordered_json rec;
    rec["pass_level"] = pass;
    rec["step"] = step;
    rec["candidate_hash"] = sha256_hex(material).substr(0, 16);
    rec["removed_count"] = removed;
    rec["sufficient"] = sufficient;
    *m_trace << rec.dump() << '\n';
}

std::size_t ProbeLog::probes(std::string_view pass) const
{
    auto it = m_steps.find(pass);
    return it == m_steps.end() ? 0 : it->second;
}

namespace {

const CodeUnit* ancestor_at(const UnitTree& tree, const CodeUnit& leaf, Level level)
{
    const CodeUnit* u = &leaf;
    while (u) {
        if (u->level == level)
            return u;
        u = u->parent_id ? &tree.unit(*u->parent_id) : nullptr;
    }
    return nullptr;
}

double phi_of(const PriorityMap& phi, const UnitId& id)
{
    auto it = phi.find(id);
    return it == phi.end() ? 0.0 : it->second;
}

} // namespace

std::vector<UnitId> level_units(const UnitTree& tree, const UnitSet& leaves, Level level, const PriorityMap& phi)
{
    UnitSet found;
    for (const auto& id : leaves)
        if (const CodeUnit* a = ancestor_at(tree, tree.unit(id), level))
            found.insert(a->id);
    std::vector<UnitId> out(found.begin(), found.end());
    std::sort(out.begin(), out.end(), [&](const UnitId& a, const UnitId& b) {
        const double pa = phi_of(phi, a), pb = phi_of(phi, b);
        if (pa != pb)
            return pa < pb;
        return tree.position(a) < tree.position(b);
    });
    return out;
}

namespace {

// Shrinks `current` in place so a BudgetExhausted thrown mid-pass leaves
// the last sufficient set behind.
void reduce_level(UnitSet& current, Level level, OracleSession& session, const PriorityMap& phi, ProbeLog& log,
                  std::size_t& dropped)
{
    const UnitTree& tree = session.tree();
    const std::string_view pass = to_string(level);
    std::vector<UnitId> units = level_units(tree, current, level, phi);
    std::size_t n = std::min<std::size_t>(2, units.size());

    while (!units.empty()) {
        // n contiguous chunks of the priority-sorted units, sizes differing by at most one.
        bool reduced = false;
        std::size_t begin = 0;
        for (std::size_t k = 0; k < n && !reduced; ++k) {
            const std::size_t size = units.size() / n + (k < units.size() % n ? 1 : 0);
            const std::size_t end = begin + size;

            UnitSet candidate = current;
            for (std::size_t i = begin; i < end; ++i)
                for (const auto& id : subtree(tree, units[i]))
                    candidate.erase(id);
            auto v = session.evaluate(candidate);
            log.record(pass, candidate, size, v.sufficient);
            if (v.sufficient) {
                current = std::move(candidate);
                units.erase(units.begin() + static_cast<std::ptrdiff_t>(begin),
                            units.begin() + static_cast<std::ptrdiff_t>(end));
                dropped += size;
                n = std::min(std::max<std::size_t>(n - 1, 2), units.size());
                reduced = true;
            }
            begin = end;
        }
        if (reduced)
            continue;
        if (n >= units.size())
            break;
        n = std::min(n * 2, units.size());
    }
}

void verify_input(const UnitSet& leaves, OracleSession& session, ProbeLog& log)
{
    auto v = session.evaluate(leaves);
    log.record("verify", leaves, 0, v.sufficient);
    if (!v.sufficient)
        throw ValidationError("minimization input is not sufficient");
}

} // namespace

UnitSet ddmin_level(const UnitSet& leaves, Level level, OracleSession& session, const PriorityMap& phi,
                    ProbeLog& log, std::size_t* removed)
{
    verify_input(leaves, session, log);
    UnitSet current = leaves;
    std::size_t dropped = 0;
    reduce_level(current, level, session, phi, log, dropped);
    if (removed)
        *removed = dropped;
    return current;
}

MinimizationResult minimize(const UnitSet& sufficient_leaves, OracleSession& session, const PriorityMap& phi,
                            std::ostream* trace)
{
    MinimizationResult result;
    ProbeLog log(trace);
    const std::size_t calls_before = session.invocations();
    UnitSet current = sufficient_leaves;

    auto finish = [&] {
        result.retained_leaf_ids = current;
        result.oracle_calls = session.invocations() - calls_before;
        result.probes = log.total();
        return result;
    };

    try {
        verify_input(current, session, log);
        for (Level level : {Level::file, Level::function, Level::block}) {
            reduce_level(current, level, session, phi, log, result.per_level_removed[level]);
            ++result.passes_completed;
        }
        bool minimal = true;
        for (const auto& id : current) {
            UnitSet candidate = current;
            candidate.erase(id);
            auto v = session.evaluate(candidate, /*fresh=*/true);
            log.record("certify", candidate, 1, v.sufficient);
            if (v.sufficient)
                minimal = false;
        }
        result.one_minimal_certified = minimal;
    } catch (const BudgetExhausted&) {
        result.budget_exhausted = true;
        result.one_minimal_certified = false;
    }
    return finish();
}

} // namespace ocd
