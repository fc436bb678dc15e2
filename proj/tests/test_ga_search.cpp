#include "fixtures.hpp"

#include "ocd/errors.hpp"
#include "ocd/ga_search.hpp"

#include <doctest.h>
#include <json.hpp>

#include <random>
#include <sstream>

using namespace ocd;

namespace {

const char* kF1 = "def a():\n    return 1\n\n\ndef b():\n    return 2\n";
const char* kF2 = "class C:\n    x = 1\n\n    def m(self):\n        return 3\n\n\ndef d(v):\n    if v:\n        v = 1\n    return v\n";

struct Fixture
{
    UnitTree tree{"ga", {{"f1.py", kF1}, {"f2.py", kF2}}};
    GenomeLayout layout{tree};
};

Genome bits_of(std::initializer_list<int> bits)
{
    Genome g;
    for (int b : bits)
        g.bits.push_back(b != 0);
    return g;
}

PriorityMap zero_phi(const UnitTree& tree)
{
    PriorityMap phi;
    for (const auto& id : tree.unit_order())
        phi[id] = 0.0;
    return phi;
}

Genome random_genome(std::mt19937_64& rng, std::size_t n)
{
    Genome g;
    std::bernoulli_distribution coin(0.3);
    for (std::size_t i = 0; i < n; ++i)
        g.bits.push_back(coin(rng));
    return g;
}

} // namespace

TEST_CASE("genome layout covers file and function units")
{
    Fixture f;
    // f1: file, a, b; f2: file, C header, m, d
    REQUIRE(f.layout.size() == 7);
    CHECK(f.layout.file_ranges() == std::vector<std::pair<std::size_t, std::size_t>>{{0, 3}, {3, 7}});
    CHECK_FALSE(f.layout.parent(0).has_value());
    CHECK(f.layout.parent(2) == std::optional<std::size_t>(0));
    CHECK(f.layout.parent(6) == std::optional<std::size_t>(3));
    // d is split into blocks; its gene governs both.
    CHECK(f.layout.leaves(6).size() == 2);
    for (const auto& id : f.tree.unit_order())
        if (f.tree.unit(id).level == Level::block)
            CHECK_FALSE(f.layout.gene_of(id).has_value());
}

TEST_CASE("repair forces the file bit on")
{
    Fixture f;
    const auto phi = zero_phi(f.tree);
    const auto g = repair(bits_of({0, 1, 0, 0, 0, 0, 0}), f.layout, phi);
    CHECK(g.bits == bits_of({1, 1, 0, 0, 0, 0, 0}).bits);
    CHECK(is_upward_consistent(g, f.layout));
}

TEST_CASE("repair of an all-zero genome activates the best unit and its file")
{
    Fixture f;
    auto phi = zero_phi(f.tree);
    phi[f.layout.unit(5)] = 2.0;
    phi[f.layout.unit(6)] = 2.0;
    phi[f.layout.unit(3)] = 9.0; // file genes are never picked
    const auto g = repair(bits_of({0, 0, 0, 0, 0, 0, 0}), f.layout, phi);
    CHECK(g.bits == bits_of({0, 0, 0, 1, 0, 1, 0}).bits);

    // All equal: the earliest function-level unit.
    const auto z = repair(bits_of({0, 0, 0, 0, 0, 0, 0}), f.layout, zero_phi(f.tree));
    CHECK(z.bits == bits_of({1, 1, 0, 0, 0, 0, 0}).bits);

    // File bits alone retain nothing and also count as degenerate.
    const auto files_only = repair(bits_of({1, 0, 0, 1, 0, 0, 0}), f.layout, zero_phi(f.tree));
    CHECK(files_only.bits == bits_of({1, 1, 0, 1, 0, 0, 0}).bits);
}

TEST_CASE("repair leaves consistent genomes alone and is idempotent")
{
    Fixture f;
    const auto phi = zero_phi(f.tree);
    const auto ok = bits_of({0, 0, 0, 1, 0, 1, 1});
    CHECK(repair(ok, f.layout, phi).bits == ok.bits);

    std::mt19937_64 rng(4);
    for (int i = 0; i < 1000; ++i) {
        const auto once = repair(random_genome(rng, f.layout.size()), f.layout, phi);
        CHECK(is_upward_consistent(once, f.layout));
        CHECK_FALSE(is_degenerate(once, f.layout));
        CHECK(repair(once, f.layout, phi).bits == once.bits);
    }
}

TEST_CASE("fitness sums retained leaf priorities")
{
    Fixture f;
    auto phi = zero_phi(f.tree);
    const auto& leaves = f.tree.leaf_ids();
    phi[leaves[0]] = 1.0;
    phi[leaves[1]] = 2.5;
    phi[leaves[3]] = 0.25;
    CHECK(fitness(bits_of({1, 1, 1, 0, 0, 0, 0}), f.layout, phi) == doctest::Approx(3.5));
    double all = 0.0;
    for (const auto& id : leaves)
        all += phi[id];
    CHECK(fitness(bits_of({1, 1, 1, 1, 1, 1, 1}), f.layout, phi) == doctest::Approx(all));

    // Block leaves follow their function's gene.
    phi[leaves[4]] = 4.0;
    phi[leaves[5]] = 8.0;
    const auto g = bits_of({0, 0, 0, 1, 0, 0, 1});
    CHECK(retained_leaves(g, f.layout) == UnitSet{leaves[4], leaves[5]});
    CHECK(fitness(g, f.layout, phi) == doctest::Approx(12.0));
}

TEST_CASE("seed individuals")
{
    Fixture f;
    const PatchInfo patch{{"f1.py"}, {}};
    GAConfig cfg;
    const auto pop = init_population(f.layout, zero_phi(f.tree), patch, cfg);
    REQUIRE(pop.size() == cfg.population_size);
    CHECK(pop[0].bits == bits_of({1, 1, 1, 1, 1, 1, 1}).bits);
    CHECK(pop[1].bits == bits_of({1, 1, 1, 0, 0, 0, 0}).bits);
    for (const auto& g : pop) {
        CHECK(is_upward_consistent(g, f.layout));
        CHECK_FALSE(is_degenerate(g, f.layout));
    }

    cfg.population_size = 1;
    CHECK_THROWS_AS(init_population(f.layout, zero_phi(f.tree), patch, cfg), ValidationError);
}

TEST_CASE("random individuals follow the clamped priority ratio")
{
    // 40 single-leaf functions in one file.
    std::string src;
    for (int i = 0; i < 40; ++i)
        src += "def f" + std::to_string(i) + "():\n    return " + std::to_string(i) + "\n";
    const UnitTree tree("p", {{"m.py", src}});
    const GenomeLayout layout(tree);
    GAConfig cfg;
    cfg.population_size = 400;

    const auto frequencies = [&](const PriorityMap& phi) {
        std::vector<double> freq(layout.size(), 0.0);
        const auto pop = init_population(layout, phi, PatchInfo{}, cfg);
        for (std::size_t k = 2; k < pop.size(); ++k)
            for (std::size_t i = 0; i < layout.size(); ++i)
                freq[i] += pop[k].bits[i] ? 1.0 : 0.0;
        for (auto& x : freq)
            x /= static_cast<double>(pop.size() - 2);
        return freq;
    };

    // No signal: p = 0.5 everywhere.
    const auto flat = frequencies(zero_phi(tree));
    double mean = 0.0;
    for (std::size_t i = 1; i < layout.size(); ++i)
        mean += flat[i];
    mean /= static_cast<double>(layout.size() - 1);
    CHECK(mean == doctest::Approx(0.5).epsilon(0.03));

    // One dominant unit at 0.9; zero-priority units at the 0.1 floor.
    auto phi = zero_phi(tree);
    phi[layout.unit(1)] = 5.0;
    phi[layout.unit(2)] = 2.5;
    const auto skewed = frequencies(phi);
    CHECK(skewed[1] == doctest::Approx(0.9).epsilon(0.06));
    CHECK(skewed[2] == doctest::Approx(0.5).epsilon(0.15));
    double low = 0.0;
    for (std::size_t i = 3; i < layout.size(); ++i)
        low += skewed[i];
    low /= static_cast<double>(layout.size() - 3);
    CHECK(low == doctest::Approx(0.1).epsilon(0.3));
}

TEST_CASE("population is reproducible for a seed")
{
    Fixture f;
    GAConfig cfg;
    cfg.rng_seed = 77;
    const auto a = init_population(f.layout, zero_phi(f.tree), PatchInfo{}, cfg);
    const auto b = init_population(f.layout, zero_phi(f.tree), PatchInfo{}, cfg);
    CHECK(a == b);
    cfg.rng_seed = 78;
    CHECK(init_population(f.layout, zero_phi(f.tree), PatchInfo{}, cfg) != a);
}

TEST_CASE("crossover swaps whole file ranges")
{
    Fixture f;
    const auto phi = zero_phi(f.tree);
    std::mt19937_64 rng(1);

    const auto same = bits_of({1, 0, 1, 1, 1, 0, 1});
    for (int i = 0; i < 20; ++i) {
        auto [c1, c2] = crossover(same, same, f.layout, phi, rng);
        CHECK(c1 == same);
        CHECK(c2 == same);
    }

    // Parents that differ only inside f2.
    const auto a = bits_of({1, 1, 0, 1, 1, 0, 1});
    const auto b = bits_of({1, 1, 0, 1, 0, 1, 0});
    bool saw_swap = false;
    for (int i = 0; i < 50; ++i) {
        auto [c1, c2] = crossover(a, b, f.layout, phi, rng);
        const std::vector<bool> r1(c1.bits.begin() + 3, c1.bits.end());
        const std::vector<bool> r2(c2.bits.begin() + 3, c2.bits.end());
        const std::vector<bool> ra(a.bits.begin() + 3, a.bits.end());
        const std::vector<bool> rb(b.bits.begin() + 3, b.bits.end());
        CHECK((r1 == ra || r1 == rb));
        CHECK((r2 == ra || r2 == rb));
        CHECK(r1 != r2);
        saw_swap = saw_swap || r1 == rb;
    }
    CHECK(saw_swap);

    const UnitTree one("one", {{"f1.py", kF1}});
    const GenomeLayout l1(one);
    const auto x = bits_of({1, 1, 0});
    const auto y = bits_of({1, 0, 1});
    for (int i = 0; i < 20; ++i) {
        auto [c1, c2] = crossover(x, y, l1, zero_phi(one), rng);
        CHECK((c1 == x || c1 == y));
        CHECK((c2 == x || c2 == y));
    }
}

TEST_CASE("mutation output is repaired")
{
    Fixture f;
    std::mt19937_64 rng(2);
    for (int i = 0; i < 200; ++i) {
        const auto g = mutate(bits_of({1, 1, 1, 1, 1, 1, 1}), 0.5, f.layout, zero_phi(f.tree), rng);
        CHECK(is_upward_consistent(g, f.layout));
        CHECK_FALSE(is_degenerate(g, f.layout));
    }
    CHECK(mutate(bits_of({1, 1, 0, 0, 0, 0, 0}), 0.0, f.layout, zero_phi(f.tree), rng).bits
          == bits_of({1, 1, 0, 0, 0, 0, 0}).bits);
}

TEST_CASE("uniform doubles")
{
    std::mt19937_64 rng(0);
    for (int i = 0; i < 10000; ++i) {
        const double u = unit_uniform(rng);
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    CHECK(genome_hash(bits_of({1, 0})) != genome_hash(bits_of({0, 1})));
    CHECK(genome_hash(bits_of({1, 0})).size() == 16);
}

TEST_CASE("run_ga succeeds in generation 0 from the gold-file seed")
{
    Fixture f;
    const PatchInfo patch{{"f1.py"}, {}};
    const auto phi = compute_priorities(f.tree, patch, CoverageReport{}, PriorityWeights{});
    MockOracle oracle({f.tree.leaf_ids()[1]});
    OracleSession session(oracle, f.tree, nullptr, OracleConfig{});
    const auto res = run_ga(f.tree, phi, patch, session, GAConfig{});
    REQUIRE(res.genome.has_value());
    CHECK(res.generation == 0);
    CHECK(res.leaves.count(f.tree.leaf_ids()[1]));
}

TEST_CASE("run_ga with everything required stops at the all-on individual")
{
    Fixture f;
    const auto& leaves = f.tree.leaf_ids();
    MockOracle oracle(UnitSet(leaves.begin(), leaves.end()));
    OracleSession session(oracle, f.tree, nullptr, OracleConfig{});
    const auto phi = compute_priorities(f.tree, PatchInfo{}, CoverageReport{}, PriorityWeights{});
    const auto res = run_ga(f.tree, phi, PatchInfo{}, session, GAConfig{});
    REQUIRE(res.genome.has_value());
    CHECK(res.generation == 0);
    CHECK(res.evaluations == 1);
    CHECK(res.genome->bits == std::vector<bool>(f.layout.size(), true));
}

TEST_CASE("run_ga with an unsatisfiable oracle gives up")
{
    Fixture f;
    MockOracle oracle({"no-such-unit"});
    OracleSession session(oracle, f.tree, nullptr, OracleConfig{});
    const auto phi = compute_priorities(f.tree, PatchInfo{{"f2.py"}, {"x"}}, CoverageReport{}, PriorityWeights{});
    GAConfig cfg;
    std::ostringstream trace;
    std::size_t observed = 0;
    const auto res = run_ga(f.tree, phi, PatchInfo{{"f2.py"}, {"x"}}, session, cfg, &trace,
                            [&](const Genome& g, const OracleVerdict&) {
                                ++observed;
                                CHECK(is_upward_consistent(g, f.layout));
                                CHECK_FALSE(is_degenerate(g, f.layout));
                            });
    CHECK_FALSE(res.genome.has_value());
    CHECK_FALSE(res.budget_exhausted);
    CHECK(res.generation == cfg.max_generations - 1);
    CHECK(res.evaluations == cfg.population_size * cfg.max_generations);
    CHECK(observed == res.evaluations);
    CHECK(session.invocations() <= cfg.population_size * cfg.max_generations);
    REQUIRE(res.best_fitness.size() == cfg.max_generations);
    for (std::size_t i = 1; i < res.best_fitness.size(); ++i)
        CHECK(res.best_fitness[i] >= res.best_fitness[i - 1]);

    std::size_t lines = 0;
    std::string line;
    std::istringstream in(trace.str());
    while (std::getline(in, line)) {
        const auto rec = nlohmann::json::parse(line);
        for (const char* key : {"generation", "genome_hash", "fitness", "sufficient", "passes", "samples", "cache_hit"})
            CHECK(rec.contains(key));
        CHECK(rec["sufficient"] == false);
        ++lines;
    }
    CHECK(lines == res.evaluations);
}

TEST_CASE("run_ga is reproducible")
{
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 10; ++trial) {
        const UnitTree tree("r", ocd::testing::random_context(rng, 3, 25));
        const auto required = ocd::testing::random_subset(rng, tree.leaf_ids(), 0.2);
        const PatchInfo patch{{"pkg/mod1.py"}, {"a", "v0"}};
        const auto phi = compute_priorities(tree, patch, CoverageReport{}, PriorityWeights{});
        GAConfig cfg;
        cfg.rng_seed = 1000 + static_cast<std::uint64_t>(trial);
        const auto run = [&] {
            DistractorMockOracle oracle(required, {tree.leaf_ids().front()});
            OracleSession session(oracle, tree, nullptr, OracleConfig{});
            std::ostringstream trace;
            run_ga(tree, phi, patch, session, cfg, &trace);
            return trace.str();
        };
        const auto first = run();
        CHECK_FALSE(first.empty());
        CHECK(first == run());
    }
}

TEST_CASE("run_ga stops when the budget runs out")
{
    Fixture f;
    MockOracle oracle({"no-such-unit"});
    OracleConfig ocfg;
    ocfg.max_evaluations = 3;
    OracleSession session(oracle, f.tree, nullptr, ocfg);
    const auto res = run_ga(f.tree, zero_phi(f.tree), PatchInfo{}, session, GAConfig{});
    CHECK(res.budget_exhausted);
    CHECK_FALSE(res.genome.has_value());
    CHECK(session.invocations() == 3);
}

TEST_CASE("GA config validation")
{
    GAConfig c;
    CHECK_NOTHROW(c.validate());
    c.max_generations = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.mutation_rate = 1.5;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.elite_fraction = 1.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.tournament_size = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
}
