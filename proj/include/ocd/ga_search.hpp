#pragma once

#include "ocd/code_model.hpp"
#include "ocd/oracle.hpp"
#include "ocd/priority.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

namespace ocd {

struct GAConfig
{
    std::size_t population_size = 20;
    std::size_t max_generations = 10;
    double mutation_rate = 0.02; // per bit
    std::size_t tournament_size = 3;
    double elite_fraction = 0.20;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

/// Gene positions for the file- and function-level units of a tree, in
/// unit order. Blocks have no genes; they follow their function.
class GenomeLayout
{
public:
    explicit GenomeLayout(const UnitTree& tree);

    std::size_t size() const { return m_units.size(); }
    const UnitId& unit(std::size_t gene) const { return m_units[gene]; }
    std::optional<std::size_t> gene_of(const UnitId& id) const;

    /// Gene of the owning file, or nullopt for file genes.
    std::optional<std::size_t> parent(std::size_t gene) const { return m_parent[gene]; }

    /// [begin, end) gene range of each file, in file order.
    const std::vector<std::pair<std::size_t, std::size_t>>& file_ranges() const { return m_file_ranges; }

    /// Leaves governed by a function-level gene (itself, or its blocks).
    const std::vector<UnitId>& leaves(std::size_t gene) const { return m_leaves[gene]; }

    const UnitTree& tree() const { return *m_tree; }

private:
    const UnitTree* m_tree;
    std::vector<UnitId> m_units;
    std::vector<std::optional<std::size_t>> m_parent;
    std::vector<std::pair<std::size_t, std::size_t>> m_file_ranges;
    std::vector<std::vector<UnitId>> m_leaves;
    std::unordered_map<UnitId, std::size_t> m_gene;
};

struct Genome
{
    std::vector<bool> bits;
    std::optional<double> fitness;

    friend bool operator==(const Genome& a, const Genome& b) { return a.bits == b.bits; }
};

/// Leaves retained by a genome: those whose function gene and file gene
/// are both on.
UnitSet retained_leaves(const Genome& g, const GenomeLayout& layout);

/// Function gene on implies file gene on, and at least one leaf retained.
bool is_upward_consistent(const Genome& g, const GenomeLayout& layout);
bool is_degenerate(const Genome& g, const GenomeLayout& layout);

/// Sets ancestor bits; a genome that retains no leaf gets the highest-Φ
/// function-level unit (earliest on ties) and its file. Idempotent.
Genome repair(Genome g, const GenomeLayout& layout, const PriorityMap& phi);

/// Σ Φ over retained leaves.
double fitness(const Genome& g, const GenomeLayout& layout, const PriorityMap& phi);

/// All-on, then gold-patch files, then priority-biased random individuals.
/// Throws ValidationError when population_size < 2.
std::vector<Genome> init_population(const GenomeLayout& layout, const PriorityMap& phi, const PatchInfo& patch,
                                    const GAConfig& config);

/// Per-file uniform swap of whole file ranges; children are repaired.
std::pair<Genome, Genome> crossover(const Genome& a, const Genome& b, const GenomeLayout& layout,
                                    const PriorityMap& phi, std::mt19937_64& rng);

Genome mutate(Genome g, double rate, const GenomeLayout& layout, const PriorityMap& phi, std::mt19937_64& rng);

/// First 16 hex chars of the SHA-256 of the bit string.
std::string genome_hash(const Genome& g);

/// Uniform double in [0, 1) from one 64-bit draw.
double unit_uniform(std::mt19937_64& rng);

struct GAResult
{
    std::optional<Genome> genome; // first sufficient genome
    UnitSet leaves;               // its retained leaves
    std::size_t generation = 0;   // generation of the success, or the last one run
    std::size_t evaluations = 0;  // oracle probes, cache hits included
    bool budget_exhausted = false;
    std::vector<double> best_fitness; // best fitness of each fully failed generation
};

/// Called for every genome handed to the oracle.
using GenomeObserver = std::function<void(const Genome&, const OracleVerdict&)>;

/// Phase I. Evaluates each generation in descending fitness order and stops
/// at the first sufficient genome. Writes one JSONL trace record per
/// evaluation when `trace` is given.
GAResult run_ga(const UnitTree& tree, const PriorityMap& phi, const PatchInfo& patch, OracleSession& session,
                const GAConfig& config, std::ostream* trace = nullptr, const GenomeObserver& observer = {});

} // namespace ocd
