#include "ocd/ga_search.hpp"

#include "ocd/errors.hpp"
#include "ocd/hash.hpp"

#include <json.hpp>

#include <algorithm>
#include <numeric>

namespace ocd {

void GAConfig::validate() const
{
    if (population_size < 2)
        throw ValidationError("ga.population_size must be >= 2");
    if (max_generations < 1)
        throw ValidationError("ga.max_generations must be >= 1");
    if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0))
        throw ValidationError("ga.mutation_rate must be in [0, 1]");
    if (tournament_size < 1)
        throw ValidationError("ga.tournament_size must be >= 1");
    if (!(elite_fraction >= 0.0 && elite_fraction < 1.0))
        throw ValidationError("ga.elite_fraction must be in [0, 1)");
}

GenomeLayout::GenomeLayout(const UnitTree& tree) : m_tree(&tree)
{
    for (const auto& id : tree.unit_order()) {
        const CodeUnit& u = tree.unit(id);
        if (u.level == Level::block)
            continue;
        const std::size_t gene = m_units.size();
        m_units.push_back(id);
        m_gene.emplace(id, gene);
        if (u.level == Level::file) {
            m_parent.emplace_back(std::nullopt);
            m_file_ranges.emplace_back(gene, gene + 1);
            m_leaves.emplace_back();
            continue;
        }
        m_parent.emplace_back(m_gene.at(*u.parent_id));
        m_file_ranges.back().second = gene + 1;
        if (u.is_leaf())
            m_leaves.push_back({id});
        else
            m_leaves.push_back(u.child_ids);
    }
}

std::optional<std::size_t> GenomeLayout::gene_of(const UnitId& id) const
{
    auto it = m_gene.find(id);
    if (it == m_gene.end())
        return std::nullopt;
    return it->second;
}

UnitSet retained_leaves(const Genome& g, const GenomeLayout& layout)
{
    UnitSet out;
    for (std::size_t i = 0; i < layout.size(); ++i) {
        auto p = layout.parent(i);
        if (p && g.bits[i] && g.bits[*p])
            out.insert(layout.leaves(i).begin(), layout.leaves(i).end());
    }
    return out;
}

bool is_upward_consistent(const Genome& g, const GenomeLayout& layout)
{
    for (std::size_t i = 0; i < layout.size(); ++i) {
        auto p = layout.parent(i);
        if (p && g.bits[i] && !g.bits[*p])
            return false;
    }
    return true;
}

bool is_degenerate(const Genome& g, const GenomeLayout& layout)
{
    for (std::size_t i = 0; i < layout.size(); ++i) {
        auto p = layout.parent(i);
        if (p && g.bits[i] && g.bits[*p] && !layout.leaves(i).empty())
            return false;
    }
    return true;
}

namespace {

double phi_of(const PriorityMap& phi, const UnitId& id)
{
    auto it = phi.find(id);
    return it == phi.end() ? 0.0 : it->second;
}

} // namespace

Genome repair(Genome g, const GenomeLayout& layout, const PriorityMap& phi)
{
    g.bits.resize(layout.size(), false);
    for (std::size_t i = 0; i < layout.size(); ++i)
        if (auto p = layout.parent(i); p && g.bits[i])
            g.bits[*p] = true;

    if (is_degenerate(g, layout)) {
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < layout.size(); ++i) {
            if (!layout.parent(i) || layout.leaves(i).empty())
                continue;
            if (!best || phi_of(phi, layout.unit(i)) > phi_of(phi, layout.unit(*best)))
                best = i;
        }
        // A tree without segments has nothing to retain; keep the best file instead.
        if (!best) {
            for (std::size_t i = 0; i < layout.size(); ++i)
                if (!best || phi_of(phi, layout.unit(i)) > phi_of(phi, layout.unit(*best)))
                    best = i;
        }
        if (best) {
            g.bits[*best] = true;
            if (auto p = layout.parent(*best))
                g.bits[*p] = true;
        }
    }
    g.fitness.reset();
    return g;
}

double fitness(const Genome& g, const GenomeLayout& layout, const PriorityMap& phi)
{
    double total = 0.0;
    for (const auto& id : retained_leaves(g, layout))
        total += phi_of(phi, id);
    return total;
}

double unit_uniform(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1p-53;
}

namespace {

std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n)
{
    return static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(n));
}

constexpr std::uint64_t kEvolutionStream = ~std::uint64_t{0};

} // namespace

std::vector<Genome> init_population(const GenomeLayout& layout, const PriorityMap& phi, const PatchInfo& patch,
                                    const GAConfig& config)
{
    config.validate();
    const UnitTree& tree = layout.tree();
    std::vector<Genome> pop;
    pop.reserve(config.population_size);

    pop.push_back(repair(Genome{std::vector<bool>(layout.size(), true), {}}, layout, phi));

    Genome gold{std::vector<bool>(layout.size(), false), {}};
    for (std::size_t i = 0; i < layout.size(); ++i)
        gold.bits[i] = patch.files.count(canonical_path(tree.unit(layout.unit(i)).path)) != 0;
    pop.push_back(repair(std::move(gold), layout, phi));

    double max_phi = 0.0;
    for (std::size_t i = 0; i < layout.size(); ++i)
        max_phi = std::max(max_phi, phi_of(phi, layout.unit(i)));
    std::vector<double> p(layout.size(), 0.5);
    if (max_phi > 0.0)
        for (std::size_t i = 0; i < layout.size(); ++i)
            p[i] = std::clamp(phi_of(phi, layout.unit(i)) / max_phi, 0.1, 0.9);

    for (std::size_t k = 2; k < config.population_size; ++k) {
        auto rng = seeded(config.rng_seed, k);
        Genome g{std::vector<bool>(layout.size(), false), {}};
        for (std::size_t i = 0; i < layout.size(); ++i)
            g.bits[i] = unit_uniform(rng) < p[i];
        pop.push_back(repair(std::move(g), layout, phi));
    }
    return pop;
}

std::pair<Genome, Genome> crossover(const Genome& a, const Genome& b, const GenomeLayout& layout,
                                    const PriorityMap& phi, std::mt19937_64& rng)
{
    Genome c1 = a, c2 = b;
    for (const auto& [begin, end] : layout.file_ranges()) {
        if (unit_uniform(rng) >= 0.5)
            continue;
        for (std::size_t i = begin; i < end; ++i) {
            c1.bits[i] = b.bits[i];
            c2.bits[i] = a.bits[i];
        }
    }
    return {repair(std::move(c1), layout, phi), repair(std::move(c2), layout, phi)};
}

Genome mutate(Genome g, double rate, const GenomeLayout& layout, const PriorityMap& phi, std::mt19937_64& rng)
{
    for (std::size_t i = 0; i < g.bits.size(); ++i)
        if (unit_uniform(rng) < rate)
            g.bits[i] = !g.bits[i];
    return repair(std::move(g), layout, phi);
}

std::string genome_hash(const Genome& g)
{
    std::string bits;
    bits.reserve(g.bits.size());
    for (bool b : g.bits)
        bits.push_back(b ? '1' : '0');
    return sha256_hex(bits).substr(0, 16);
}

GAResult run_ga(const UnitTree& tree, const PriorityMap& phi, const PatchInfo& patch, OracleSession& session,
                const GAConfig& config, std::ostream* trace, const GenomeObserver& observer)
{
    const GenomeLayout layout(tree);
    GAResult result;
    auto pop = init_population(layout, phi, patch, config);
    auto rng = seeded(config.rng_seed, kEvolutionStream);
    const std::size_t elites =
        std::min(pop.size(), std::max<std::size_t>(1, static_cast<std::size_t>(config.elite_fraction
                                                                                 * static_cast<double>(pop.size()))));

    for (std::size_t gen = 0; gen < config.max_generations; ++gen) {
        result.generation = gen;
        for (auto& g : pop)
            g.fitness = fitness(g, layout, phi);

        // Indices by descending fitness, stable on population position.
        std::vector<std::size_t> order(pop.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t x, std::size_t y) { return *pop[x].fitness > *pop[y].fitness; });

        for (std::size_t idx : order) {
            const Genome& g = pop[idx];
            UnitSet leaves = retained_leaves(g, layout);
            OracleVerdict v;
            try {
                v = session.evaluate(leaves);
            } catch (const BudgetExhausted&) {
                result.budget_exhausted = true;
                return result;
            }
            ++result.evaluations;
            if (observer)
                observer(g, v);
            if (trace) {
                nlohmann::ordered_json rec;
                rec["generation"] = gen;
                rec["genome_hash"] = genome_hash(g);
                rec["fitness"] = *g.fitness;
                rec["sufficient"] = v.sufficient;
                rec["passes"] = v.passes;
                rec["samples"] = v.samples;
                rec["cache_hit"] = v.cache_hit;
                *trace << rec.dump() << '\n';
            }
            if (v.sufficient) {
                result.genome = g;
                result.leaves = std::move(leaves);
                return result;
            }
        }
        result.best_fitness.push_back(*pop[order.front()].fitness);
        if (gen + 1 == config.max_generations)
            break;

        auto tournament = [&]() -> const Genome& {
            std::size_t best = uniform_index(rng, pop.size());
            for (std::size_t t = 1; t < config.tournament_size; ++t) {
                std::size_t c = uniform_index(rng, pop.size());
                if (*pop[c].fitness > *pop[best].fitness || (*pop[c].fitness == *pop[best].fitness && c < best))
                    best = c;
            }
            return pop[best];
        };

        std::vector<Genome> next;
        next.reserve(pop.size());
        for (std::size_t e = 0; e < elites; ++e)
            next.push_back(pop[order[e]]);
        while (next.size() < pop.size()) {
            const Genome& a = tournament();
            const Genome& b = tournament();
            auto [c1, c2] = crossover(a, b, layout, phi, rng);
            next.push_back(mutate(std::move(c1), config.mutation_rate, layout, phi, rng));
            if (next.size() < pop.size())
                next.push_back(mutate(std::move(c2), config.mutation_rate, layout, phi, rng));
        }
        pop = std::move(next);
    }
    return result;
}

} // namespace ocd
