#include "ocd/dataset.hpp"

#include "ocd/errors.hpp"
#include "ocd/priority.hpp"
#include "ocd/python_lexer.hpp"
#include "ocd/query.hpp"
#include "ocd/text.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <regex>
#include <sstream>

namespace ocd {

std::vector<SegmentRecord> segment_records(const UnitTree& tree)
{
    std::vector<SegmentRecord> out;
    for (const CodeUnit* u : leaf_segments(tree)) {
        SegmentRecord r;
        r.id = u->id;
        r.path = u->path;
        r.kind = *u->kind;
        r.start_line = u->span.start_line;
        r.end_line = u->span.end_line;
        r.line_count = u->source_line_count;
        r.text = std::string(tree.text(*u));
        r.symbol = u->symbol;
        out.push_back(std::move(r));
    }
    return out;
}

std::string_view to_string(DistillStatus s)
{
    switch (s) {
    case DistillStatus::minimized: return "minimized";
    case DistillStatus::partial: return "partial";
    case DistillStatus::unminimized: return "unminimized";
    }
    return "unknown";
}

std::string_view to_string(SemanticRole r)
{
    switch (r) {
    case SemanticRole::Schema: return "Schema";
    case SemanticRole::Definition: return "Definition";
    case SemanticRole::CallChain: return "CallChain";
    case SemanticRole::GenericUtility: return "GenericUtility";
    }
    return "unknown";
}

nlohmann::ordered_json to_json(const DistilledInstance& d)
{
    nlohmann::ordered_json j;
    j["instance_id"] = d.instance_id;
    j["repo"] = d.repo;
    j["issue_text"] = d.issue_text;
    j["fault_locations"] = nlohmann::ordered_json::array();
    for (const auto& f : d.fault_locations) {
        nlohmann::json fj = f;
        j["fault_locations"].push_back(nlohmann::ordered_json::parse(fj.dump()));
    }
    j["context_segments"] = nlohmann::ordered_json::array();
    for (const auto& s : d.context_segments) {
        nlohmann::ordered_json sj;
        sj["id"] = s.id;
        sj["path"] = s.path;
        sj["kind"] = to_string(s.kind);
        sj["start_line"] = s.start_line;
        sj["end_line"] = s.end_line;
        sj["line_count"] = s.line_count;
        sj["text"] = s.text;
        sj["symbol"] = s.symbol;
        j["context_segments"].push_back(std::move(sj));
    }
    j["minimal_leaf_ids"] = d.minimal_leaf_ids;
    j["one_minimal_certified"] = d.one_minimal_certified;
    j["oracle_calls"] = d.oracle_calls;
    j["status"] = to_string(d.status);
    j["provenance"] = {{"ga_generations", d.provenance.ga_generations},
                       {"phase2_passes", d.provenance.phase2_passes},
                       {"phase1_success", d.provenance.phase1_success},
                       {"skip_ga", d.provenance.skip_ga}};
    return j;
}

namespace {

const nlohmann::json& require(const nlohmann::json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key))
        throw ValidationError(std::string("missing field '") + key + "'");
    return j.at(key);
}

} // namespace

DistilledInstance distilled_from_json(const nlohmann::json& j)
{
    try {
        DistilledInstance d;
        d.instance_id = require(j, "instance_id").get<std::string>();
        d.repo = j.value("repo", std::string{});
        d.issue_text = require(j, "issue_text").get<std::string>();
        for (const auto& f : require(j, "fault_locations"))
            d.fault_locations.push_back(f.get<FaultLocation>());
        for (const auto& sj : require(j, "context_segments")) {
            SegmentRecord s;
            s.id = require(sj, "id").get<std::string>();
            s.path = require(sj, "path").get<std::string>();
            auto kind = parse_segment_kind(require(sj, "kind").get<std::string>());
            if (!kind)
                throw ValidationError("unknown segment kind '" + sj.at("kind").get<std::string>() + "'");
            s.kind = *kind;
            s.start_line = require(sj, "start_line").get<std::size_t>();
            s.end_line = require(sj, "end_line").get<std::size_t>();
            s.line_count = sj.value("line_count", s.end_line + 1 - s.start_line);
            s.text = sj.value("text", std::string{});
            s.symbol = sj.value("symbol", std::string{});
            d.context_segments.push_back(std::move(s));
        }
        d.minimal_leaf_ids = require(j, "minimal_leaf_ids").get<UnitSet>();
        d.one_minimal_certified = j.value("one_minimal_certified", false);
        d.oracle_calls = j.value("oracle_calls", std::size_t{0});
        const std::string status = j.value("status", d.minimal_leaf_ids.empty() ? "unminimized" : "minimized");
        if (status == "minimized")
            d.status = DistillStatus::minimized;
        else if (status == "partial")
            d.status = DistillStatus::partial;
        else if (status == "unminimized")
            d.status = DistillStatus::unminimized;
        else
            throw ValidationError("unknown status '" + status + "'");
        if (j.contains("provenance")) {
            const auto& p = j.at("provenance");
            d.provenance.ga_generations = p.value("ga_generations", std::size_t{0});
            d.provenance.phase2_passes = p.value("phase2_passes", std::size_t{0});
            d.provenance.phase1_success = p.value("phase1_success", false);
            d.provenance.skip_ga = p.value("skip_ga", false);
        }

        UnitSet ids;
        for (const auto& s : d.context_segments)
            ids.insert(s.id);
        for (const auto& id : d.minimal_leaf_ids)
            if (!ids.count(id))
                throw ValidationError("minimal_leaf_ids names unknown segment '" + id + "'");
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad corpus record: ") + e.what());
    }
}

// Role rules ------------------------------------------------------------

namespace {

const std::regex& annotated_re()
{
    static const std::regex re(R"(^\s*(self\.)?[A-Za-z_]\w*(\.[A-Za-z_]\w*)*\s*:\s*[^=\s])");
    return re;
}

const std::regex& self_assign_re()
{
    static const std::regex re(R"(^\s*self\.[A-Za-z_]\w*\s*(:[^=]*)?=(?!=))");
    return re;
}

const std::regex& def_re()
{
    static const std::regex re(R"(^\s*(?:async\s+)?(?:def|class)\s+([A-Za-z_]\w*))");
    return re;
}

const std::regex& assign_re()
{
    static const std::regex re(R"(^\s*(?:self\.)?([A-Za-z_]\w*)\s*(?::[^=]*)?=(?!=))");
    return re;
}

const std::regex& import_re()
{
    static const std::regex re(R"(^\s*(?:from\s+\S+\s+)?import\s+\(?([^)]*)\)?)");
    return re;
}

std::string last_component(std::string_view symbol)
{
    auto dot = symbol.rfind('.');
    return std::string(dot == std::string_view::npos ? symbol : symbol.substr(dot + 1));
}

} // namespace

double declaration_ratio(std::string_view text)
{
    const auto scan = python::scan_logical_lines(text);
    if (scan.error || scan.lines.empty())
        return 0.0;
    std::size_t decls = 0;
    for (const auto& ll : scan.lines) {
        if (python::is_keyword(ll.keyword))
            continue;
        const std::string s(ll.text);
        if (std::regex_search(s, annotated_re()) || std::regex_search(s, self_assign_re()))
            ++decls;
    }
    return static_cast<double>(decls) / static_cast<double>(scan.lines.size());
}

std::set<std::string> defined_names(std::string_view text)
{
    std::set<std::string> out;
    const auto scan = python::scan_logical_lines(text);
    if (scan.error)
        return out;
    std::smatch m;
    for (const auto& ll : scan.lines) {
        const std::string s(ll.text);
        if (std::regex_search(s, m, def_re())) {
            out.insert(m[1]);
        } else if (ll.keyword == "import" || ll.keyword == "from") {
            if (std::regex_search(s, m, import_re())) {
                std::stringstream names(m[1]);
                std::string item;
                while (std::getline(names, item, ',')) {
                    auto words = python::lex_identifiers(item);
                    if (!words.empty())
                        out.insert(words.back()); // "a.b as c" binds c; "a.b" binds b
                }
            }
        } else if (!python::is_keyword(ll.keyword) && std::regex_search(s, m, assign_re())) {
            out.insert(m[1]);
        }
    }
    return out;
}

RoleClassifier::RoleClassifier(const DistilledInstance& instance)
{
    for (const auto& f : instance.fault_locations) {
        const std::string path = canonical_path(f.path);
        std::vector<const SegmentRecord*> hits;
        for (const auto& s : instance.context_segments)
            if (canonical_path(s.path) == path && f.line >= s.start_line && f.line <= s.end_line)
                hits.push_back(&s);
        if (hits.empty()) {
            // A header line owned by a function with blocks: take its first block.
            const SegmentRecord* next = nullptr;
            for (const auto& s : instance.context_segments)
                if (canonical_path(s.path) == path && s.start_line > f.line && (!next || s.start_line < next->start_line))
                    next = &s;
            if (next)
                hits.push_back(next);
        }
        for (const SegmentRecord* s : hits) {
            // Call targets belong to the call-chain rule, not to Definition.
            auto ids = python::identifier_set(s->text);
            auto calls = python::called_names(s->text);
            for (const auto& c : calls)
                ids.erase(c);
            m_faults.push_back(FaultUnit{s, std::move(ids), std::move(calls), last_component(s->symbol)});
        }
    }
}

SemanticRole RoleClassifier::classify(const SegmentRecord& segment) const
{
    if (segment.kind == SegmentKind::class_header || declaration_ratio(segment.text) >= 0.5)
        return SemanticRole::Schema;

    const auto defined = defined_names(segment.text);
    for (const auto& f : m_faults) {
        if (f.segment->id == segment.id)
            continue;
        for (const auto& name : defined)
            if (f.identifiers.count(name))
                return SemanticRole::Definition;
    }

    const auto calls = python::called_names(segment.text);
    const std::string own = last_component(segment.symbol);
    for (const auto& f : m_faults) {
        if (f.segment->id == segment.id)
            continue;
        if (!f.name.empty() && calls.count(f.name))
            return SemanticRole::CallChain;
        if (!own.empty() && f.calls.count(own))
            return SemanticRole::CallChain;
    }
    return SemanticRole::GenericUtility;
}

SemanticRole classify_role(const SegmentRecord& segment, const DistilledInstance& instance)
{
    return RoleClassifier(instance).classify(segment);
}

// Export ----------------------------------------------------------------

nlohmann::ordered_json to_json(const TrainingTriple& t)
{
    nlohmann::ordered_json j;
    j["query"] = t.query_text;
    j["segment"] = t.segment_text;
    j["label"] = t.label;
    j["weight"] = t.weight;
    j["role"] = to_string(t.role);
    j["instance_id"] = t.instance_id;
    j["segment_id"] = t.segment_id;
    return j;
}

nlohmann::ordered_json ExportResult::metadata() const
{
    nlohmann::ordered_json j;
    j["role_rules"] = kRoleRulesVersion;
    j["roles"] = nlohmann::ordered_json::array();
    for (auto r : kAllRoles)
        j["roles"].push_back(to_string(r));
    j["triples"] = triples.size();
    j["positive_class_weight"] = positive_class_weight;
    nlohmann::ordered_json rw = nlohmann::ordered_json::object();
    for (const auto& [r, w] : role_weights)
        rw[std::string(to_string(r))] = w;
    j["role_weights"] = rw;
    j["skipped_instances"] = skipped_instances;
    return j;
}

ExportResult export_triples(const std::vector<DistilledInstance>& corpus, const WeightingConfig& cfg)
{
    ExportResult res;
    std::vector<std::vector<SemanticRole>> roles;
    std::size_t positives = 0, segments = 0;
    std::map<SemanticRole, std::pair<std::size_t, std::size_t>> by_role; // positives, total

    for (const auto& inst : corpus) {
        if (!inst.minimized()) {
            ++res.skipped_instances;
            roles.emplace_back();
            continue;
        }
        RoleClassifier classifier(inst);
        auto& rs = roles.emplace_back();
        for (const auto& s : inst.context_segments) {
            const SemanticRole r = classifier.classify(s);
            rs.push_back(r);
            const bool pos = inst.minimal_leaf_ids.count(s.id) != 0;
            positives += pos;
            ++segments;
            by_role[r].first += pos;
            ++by_role[r].second;
        }
    }
    if (segments == 0)
        throw ValidationError("corpus has no minimized instance to export");
    if (positives == 0)
        throw ValidationError("corpus has no positive segments; class weights are undefined");

    res.positive_class_weight = static_cast<double>(segments - positives) / static_cast<double>(positives);
    const double mean_density = static_cast<double>(positives) / static_cast<double>(segments);
    for (const auto& [r, counts] : by_role) {
        double w = 1.0;
        if (cfg.role_weighting) {
            const double density = static_cast<double>(counts.first) / static_cast<double>(counts.second);
            w = density == 0.0 ? cfg.role_weight_max
                               : std::clamp(mean_density / density, cfg.role_weight_min, cfg.role_weight_max);
        }
        res.role_weights[r] = w;
    }

    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& inst = corpus[i];
        if (!inst.minimized())
            continue;
        const std::string query = build_query(inst.issue_text, inst.fault_locations).rendered;
        for (std::size_t k = 0; k < inst.context_segments.size(); ++k) {
            const auto& s = inst.context_segments[k];
            TrainingTriple t;
            t.query_text = query;
            t.segment_text = s.text;
            t.label = inst.minimal_leaf_ids.count(s.id) ? 1 : 0;
            t.role = roles[i][k];
            t.weight = (t.label ? res.positive_class_weight : 1.0) * res.role_weights.at(t.role);
            t.instance_id = inst.instance_id;
            t.segment_id = s.id;
            res.triples.push_back(std::move(t));
        }
    }
    return res;
}

void write_triples(std::ostream& out, const std::vector<TrainingTriple>& triples)
{
    for (const auto& t : triples)
        out << to_json(t).dump() << '\n';
}

// Stats -----------------------------------------------------------------

const std::vector<SizeBucket>& size_buckets()
{
    static const std::vector<SizeBucket> buckets = {
        {"1-20", 1, 20},
        {"21-50", 21, 50},
        {"51-100", 51, 100},
        {"101-200", 101, 200},
        {"200+", 201, std::numeric_limits<std::size_t>::max()},
    };
    return buckets;
}

nlohmann::ordered_json to_json(const CorpusStats& s)
{
    nlohmann::ordered_json j;
    j["instances"] = s.instances;
    j["excluded_instances"] = s.excluded_instances;
    j["segments"] = s.segments;
    j["positives"] = s.positives;
    j["relevance_density"] = s.relevance_density;
    j["avg_segments_per_instance"] = s.avg_segments_per_instance;
    nlohmann::ordered_json roles = nlohmann::ordered_json::object();
    for (auto r : kAllRoles) {
        auto it = s.per_role_density.find(r);
        if (it != s.per_role_density.end())
            roles[std::string(to_string(r))] = it->second;
    }
    j["per_role_density"] = roles;
    nlohmann::ordered_json buckets = nlohmann::ordered_json::object();
    for (const auto& b : size_buckets()) {
        auto it = s.density_by_size_bucket.find(b.label);
        if (it != s.density_by_size_bucket.end())
            buckets[b.label] = it->second;
    }
    j["density_by_size_bucket"] = buckets;
    return j;
}

CorpusStats compute_stats(const std::vector<DistilledInstance>& corpus)
{
    CorpusStats st;
    std::map<SemanticRole, std::size_t> role_pos;
    std::map<std::string, std::pair<std::size_t, std::size_t>> bucket; // positives, segments
    for (const auto& inst : corpus) {
        if (!inst.minimized()) {
            ++st.excluded_instances;
            continue;
        }
        ++st.instances;
        const std::size_t n = inst.context_segments.size();
        std::size_t pos = 0;
        RoleClassifier classifier(inst);
        for (const auto& s : inst.context_segments) {
            const bool p = inst.minimal_leaf_ids.count(s.id) != 0;
            pos += p;
            const SemanticRole r = classifier.classify(s);
            ++st.per_role_segments[r];
            role_pos[r] += p;
        }
        st.segments += n;
        st.positives += pos;
        for (const auto& b : size_buckets()) {
            if (n >= b.lo && n <= b.hi) {
                bucket[b.label].first += pos;
                bucket[b.label].second += n;
                ++st.instances_by_size_bucket[b.label];
            }
        }
    }
    if (st.segments > 0)
        st.relevance_density = static_cast<double>(st.positives) / static_cast<double>(st.segments);
    if (st.instances > 0)
        st.avg_segments_per_instance = static_cast<double>(st.segments) / static_cast<double>(st.instances);
    for (const auto& [r, total] : st.per_role_segments)
        st.per_role_density[r] = static_cast<double>(role_pos[r]) / static_cast<double>(total);
    for (const auto& [label, counts] : bucket)
        if (counts.second > 0)
            st.density_by_size_bucket[label] = static_cast<double>(counts.first) / static_cast<double>(counts.second);
    return st;
}

// Persistence -----------------------------------------------------------

void save_corpus(const std::vector<DistilledInstance>& corpus, const std::filesystem::path& path)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw ValidationError("cannot write corpus " + path.string());
    for (const auto& d : corpus)
        out << to_json(d).dump() << '\n';
}

void append_corpus(const DistilledInstance& record, const std::filesystem::path& path)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out)
        throw ValidationError("cannot write corpus " + path.string());
    out << to_json(record).dump() << '\n';
}

std::vector<DistilledInstance> parse_corpus(std::istream& in)
{
    std::vector<DistilledInstance> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (trim(line).empty())
            continue;
        try {
            out.push_back(distilled_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(number, e.what());
        } catch (const ValidationError& e) {
            throw ParseError(number, e.what());
        }
    }
    return out;
}

std::vector<DistilledInstance> load_corpus(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ValidationError("cannot read corpus " + path.string());
    return parse_corpus(in);
}

} // namespace ocd
