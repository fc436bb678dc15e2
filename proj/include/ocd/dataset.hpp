#pragma once

#include "ocd/code_model.hpp"
#include "ocd/instance.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace ocd {

/// A leaf segment as stored in the corpus.
struct SegmentRecord
{
    UnitId id;
    std::string path;
    SegmentKind kind = SegmentKind::block;
    std::size_t start_line = 0;
    std::size_t end_line = 0;
    std::size_t line_count = 0;
    std::string text;
    std::string symbol;

    friend bool operator==(const SegmentRecord&, const SegmentRecord&) = default;
};

std::vector<SegmentRecord> segment_records(const UnitTree& tree);

enum class DistillStatus { minimized, partial, unminimized };

std::string_view to_string(DistillStatus s);

struct Provenance
{
    std::size_t ga_generations = 0; // generations run in Phase I
    std::size_t phase2_passes = 0;  // level passes completed in Phase II
    bool phase1_success = false;
    bool skip_ga = false;

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct DistilledInstance
{
    std::string instance_id;
    std::string repo;
    std::string issue_text;
    std::vector<FaultLocation> fault_locations;
    std::vector<SegmentRecord> context_segments;
    UnitSet minimal_leaf_ids; // empty when unminimized
    bool one_minimal_certified = false;
    std::size_t oracle_calls = 0;
    DistillStatus status = DistillStatus::unminimized;
    Provenance provenance;

    /// Whether the record carries a sufficient subset (and enters export and stats).
    bool minimized() const { return status != DistillStatus::unminimized; }

    friend bool operator==(const DistilledInstance&, const DistilledInstance&) = default;
};

nlohmann::ordered_json to_json(const DistilledInstance& d);

/// Throws ValidationError on a missing or mistyped field.
DistilledInstance distilled_from_json(const nlohmann::json& j);

enum class SemanticRole { Schema, Definition, CallChain, GenericUtility };

std::string_view to_string(SemanticRole r);
inline constexpr SemanticRole kAllRoles[] = {SemanticRole::Schema, SemanticRole::Definition, SemanticRole::CallChain,
                                              SemanticRole::GenericUtility};

/// Version tag of the role rules, written to export metadata.
inline constexpr const char* kRoleRulesVersion = "roles-v1";

/// Precomputed fault-unit facts of one instance for role classification.
class RoleClassifier
{
public:
    explicit RoleClassifier(const DistilledInstance& instance);

    /// First matching rule: Schema (class header, or at least half of the
    /// statements are annotated or self-attribute declarations), Definition
    /// (defines a name a fault unit references, calls aside), CallChain (calls a fault
    /// unit or is called by one, by name), GenericUtility.
    SemanticRole classify(const SegmentRecord& segment) const;

private:
    struct FaultUnit
    {
        const SegmentRecord* segment;
        std::set<std::string> identifiers; // referenced other than as a call target
        std::set<std::string> calls;
        std::string name; // last component of the enclosing symbol
    };
    std::vector<FaultUnit> m_faults;
};

SemanticRole classify_role(const SegmentRecord& segment, const DistilledInstance& instance);

/// Fraction of logical lines that are declarations; 0 for unscannable text.
double declaration_ratio(std::string_view text);

/// Names a segment binds: def/class names and simple assignment targets.
std::set<std::string> defined_names(std::string_view text);

struct TrainingTriple
{
    std::string query_text;
    std::string segment_text;
    int label = 0;
    double weight = 1.0;
    SemanticRole role = SemanticRole::GenericUtility;
    std::string instance_id;
    UnitId segment_id;
};

nlohmann::ordered_json to_json(const TrainingTriple& t);

struct WeightingConfig
{
    bool role_weighting = true;
    double role_weight_min = 0.5;
    double role_weight_max = 3.0;
};

struct ExportResult
{
    std::vector<TrainingTriple> triples;
    double positive_class_weight = 1.0;
    std::map<SemanticRole, double> role_weights;
    std::size_t skipped_instances = 0; // unminimized records

    nlohmann::ordered_json metadata() const;
};

/// One triple per segment of every minimized instance. Throws
/// ValidationError when there is no minimized instance or no positive.
ExportResult export_triples(const std::vector<DistilledInstance>& corpus, const WeightingConfig& cfg = {});

void write_triples(std::ostream& out, const std::vector<TrainingTriple>& triples);

/// Upper edges of the context-size buckets; the last bucket is open.
struct SizeBucket
{
    std::string label;
    std::size_t lo;
    std::size_t hi; // inclusive; SIZE_MAX for the open bucket
};
const std::vector<SizeBucket>& size_buckets();

struct CorpusStats
{
    std::size_t instances = 0;
    std::size_t excluded_instances = 0; // unminimized
    std::size_t segments = 0;
    std::size_t positives = 0;
    double relevance_density = 0.0;
    double avg_segments_per_instance = 0.0;
    std::map<SemanticRole, double> per_role_density;
    std::map<SemanticRole, std::size_t> per_role_segments;
    std::map<std::string, double> density_by_size_bucket;
    std::map<std::string, std::size_t> instances_by_size_bucket;
};

nlohmann::ordered_json to_json(const CorpusStats& s);

/// Counts over minimized instances only.
CorpusStats compute_stats(const std::vector<DistilledInstance>& corpus);

void save_corpus(const std::vector<DistilledInstance>& corpus, const std::filesystem::path& path);

/// Appends one record, creating the file if needed.
void append_corpus(const DistilledInstance& record, const std::filesystem::path& path);

/// Blank lines are skipped; a bad line throws ParseError with its number.
std::vector<DistilledInstance> load_corpus(const std::filesystem::path& path);
std::vector<DistilledInstance> parse_corpus(std::istream& in);

} // namespace ocd
