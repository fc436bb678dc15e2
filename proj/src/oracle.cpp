#include "ocd/oracle.hpp"

#include "ocd/errors.hpp"
#include "ocd/hash.hpp"

#include <algorithm>
#include <cmath>

namespace ocd {

void OracleConfig::validate() const
{
    if (samples_n < 1)
        throw ValidationError("oracle.samples_n must be >= 1");
    if (!(pass_threshold > 0.0 && pass_threshold <= 1.0))
        throw ValidationError("oracle.pass_threshold must be in (0, 1]");
    if (timeout_seconds < 1)
        throw ValidationError("oracle.timeout_seconds must be >= 1");
    if (max_evaluations < 1)
        throw ValidationError("oracle.max_evaluations must be >= 1");
}

std::size_t required_passes(std::size_t samples, double threshold)
{
    // The epsilon keeps products such as 0.3 * 10 from rounding up a step.
    return static_cast<std::size_t>(std::ceil(threshold * static_cast<double>(samples) - 1e-9));
}

OracleVerdict tally(std::vector<SampleOutcome> samples, double threshold)
{
    OracleVerdict v;
    v.samples = samples.size();
    v.passes = static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(),
                                                      [](const SampleOutcome& s) { return s.passed(); }));
    v.sufficient = v.samples > 0 && v.passes >= required_passes(v.samples, threshold);
    v.per_sample = std::move(samples);
    return v;
}

OracleVerdict evaluate_mock(const UnitSet& included_leaves, const UnitSet& required)
{
    OracleVerdict v;
    v.samples = 1;
    v.sufficient = std::includes(included_leaves.begin(), included_leaves.end(), required.begin(), required.end());
    v.passes = v.sufficient ? 1 : 0;
    SampleOutcome s;
    s.test_exit_status = v.sufficient ? 0 : 1;
    v.per_sample.push_back(s);
    return v;
}

OracleVerdict DistractorMockOracle::evaluate(const Candidate& candidate)
{
    OracleVerdict v = evaluate_mock(candidate.leaves, m_required);
    for (const auto& d : m_distractors) {
        if (candidate.leaves.count(d)) {
            v.sufficient = false;
            v.passes = 0;
            v.per_sample.front().test_exit_status = 1;
            break;
        }
    }
    return v;
}

std::string verdict_cache_key(const std::string& instance_id, const UnitSet& included_leaf_ids)
{
    std::string material = instance_id;
    material.push_back('\n');
    for (const auto& id : included_leaf_ids) { // std::set iterates in sorted order
        material += id;
        material.push_back('\n');
    }
    return sha256_hex(material);
}

std::optional<OracleVerdict> VerdictCache::lookup(const std::string& key) const
{
    std::lock_guard lock(m_mutex);
    auto it = m_entries.find(key);
    if (it == m_entries.end())
        return std::nullopt;
    return it->second;
}

void VerdictCache::store(const std::string& key, const OracleVerdict& verdict)
{
    std::lock_guard lock(m_mutex);
    m_entries.emplace(key, verdict);
}

std::size_t VerdictCache::size() const
{
    std::lock_guard lock(m_mutex);
    return m_entries.size();
}

OracleSession::OracleSession(Oracle& oracle, const UnitTree& tree, const Instance* instance, OracleConfig config,
                             std::shared_ptr<VerdictCache> cache)
    : m_oracle(oracle), m_tree(tree), m_instance(instance), m_config(config), m_cache(std::move(cache))
{
    m_config.validate();
}

OracleVerdict OracleSession::evaluate(const UnitSet& leaves, bool fresh)
{
    const std::string key = verdict_cache_key(m_tree.instance_id(), leaves);
    if (m_config.cache_enabled && !fresh) {
        if (auto hit = m_cache->lookup(key)) {
            ++m_cache_hits;
            hit->cache_hit = true;
            return *hit;
        }
    }
    if (m_invocations >= m_config.max_evaluations) {
        m_exhausted = true;
        throw BudgetExhausted("oracle budget of " + std::to_string(m_config.max_evaluations)
                              + " evaluations exhausted for " + m_tree.instance_id());
    }
    ++m_invocations;
    OracleVerdict v = m_oracle.evaluate(Candidate{m_tree, m_instance, leaves});
    v.cache_hit = false;
    if (m_config.cache_enabled)
        m_cache->store(key, v);
    return v;
}

} // namespace ocd
