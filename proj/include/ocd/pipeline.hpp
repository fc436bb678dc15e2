#pragma once

#include "ocd/compressor.hpp"
#include "ocd/config.hpp"
#include "ocd/dataset.hpp"
#include "ocd/instance.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ocd {

enum class OracleKind { mock, llm };

struct DistillOptions
{
    OracleKind oracle = OracleKind::mock;
    bool skip_ga = false; // minimize C_init directly (ablation)
    bool trace = true;    // write <traces>/<instance>.ga.jsonl and .hdd.jsonl
};

struct DistillOutcome
{
    DistilledInstance record;
    bool budget_exhausted = false;
};

/// The oracle an instance is distilled against. Mock instances with
/// distractors get the distractor variant.
std::unique_ptr<Oracle> make_oracle(const Instance& instance, const UnitTree& tree, const RunConfig& config,
                                    const DistillOptions& options);

/// Phase I (unless skipped), then Phase II on the first sufficient set. An
/// instance with no sufficient set is recorded unminimized.
DistillOutcome distill_instance(const Instance& instance, const RunConfig& config, const DistillOptions& options);

/// Instances of a batch, processed up to config.parallelism at a time.
/// Results keep input order. A failing instance rethrows after the others finish.
std::vector<DistillOutcome> distill_batch(const std::vector<Instance>& instances, const RunConfig& config,
                                          const DistillOptions& options);

/// *.json instance files of a directory, sorted by name.
std::vector<std::filesystem::path> instance_files(const std::filesystem::path& dir);

struct AblationRow
{
    std::string instance_id;
    DistillStatus with_ga = DistillStatus::unminimized;
    DistillStatus without_ga = DistillStatus::unminimized;
    std::size_t calls_with_ga = 0;
    std::size_t calls_without_ga = 0;
    std::size_t size_with_ga = 0;
    std::size_t size_without_ga = 0;
};

/// Distills every instance with and without Phase I.
std::vector<AblationRow> run_ablation(const std::vector<Instance>& instances, const RunConfig& config,
                                      OracleKind oracle = OracleKind::mock);

nlohmann::ordered_json ablation_report(const std::vector<AblationRow>& rows);

/// Compression of one instance with the configured rate, windows and counter.
CompressionResult compress_instance(const Instance& instance, Scorer& scorer, const RunConfig& config);

} // namespace ocd
