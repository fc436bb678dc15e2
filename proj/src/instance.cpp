#include "ocd/instance.hpp"

#include "ocd/errors.hpp"
#include "ocd/priority.hpp"

#include <fstream>
#include <sstream>

namespace ocd {

void to_json(nlohmann::json& j, const FaultLocation& f)
{
    j = nlohmann::json{{"path", f.path}, {"line", f.line}};
    if (f.symbol)
        j["symbol"] = *f.symbol;
}

void from_json(const nlohmann::json& j, FaultLocation& f)
{
    f.path = canonical_path(j.at("path").get<std::string>());
    f.line = j.at("line").get<std::size_t>();
    if (f.line == 0)
        throw ValidationError("fault location line must be positive");
    f.symbol.reset();
    if (j.contains("symbol") && !j["symbol"].is_null())
        f.symbol = j["symbol"].get<std::string>();
}

std::string read_file(const std::filesystem::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw ValidationError("cannot read " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

std::vector<SegmentRef> parse_refs(const nlohmann::json& arr)
{
    std::vector<SegmentRef> refs;
    for (const auto& r : arr) {
        SegmentRef ref;
        if (r.contains("id")) {
            ref.id = r["id"].get<std::string>();
        } else {
            ref.path = canonical_path(r.at("path").get<std::string>());
            ref.line = r.at("line").get<std::size_t>();
        }
        refs.push_back(std::move(ref));
    }
    return refs;
}

} // namespace

Instance parse_instance(const nlohmann::json& doc, const std::filesystem::path& base_dir)
{
    try {
        Instance inst;
        inst.instance_id = doc.at("instance_id").get<std::string>();
        inst.issue_text = doc.at("issue_text").get<std::string>();
        inst.fault_locations = doc.value("fault_location", std::vector<FaultLocation>{});
        for (const auto& cf : doc.at("context_files"))
            inst.context_files.push_back(canonical_path(cf.at("path").get<std::string>()));
        inst.repo_root = resolve(base_dir, doc.at("repo_root").get<std::string>());
        if (doc.contains("gold_patch_path") && !doc["gold_patch_path"].is_null())
            inst.gold_patch_path = resolve(base_dir, doc["gold_patch_path"].get<std::string>());
        if (doc.contains("coverage_report_path") && !doc["coverage_report_path"].is_null())
            inst.coverage_report_path = resolve(base_dir, doc["coverage_report_path"].get<std::string>());
        if (doc.contains("test_command") && !doc["test_command"].is_null())
            inst.test_command = doc["test_command"].get<std::string>();
        inst.repo = doc.value("repo", std::string{});
        if (inst.repo.empty()) {
            auto dash = inst.instance_id.rfind('-');
            inst.repo = dash == std::string::npos ? inst.instance_id : inst.instance_id.substr(0, dash);
        }
        if (doc.contains("mock_required"))
            inst.mock_required = parse_refs(doc["mock_required"]);
        if (doc.contains("mock_distractors"))
            inst.mock_distractors = parse_refs(doc["mock_distractors"]);
        return inst;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("instance file: ") + e.what());
    }
}

Instance load_instance(const std::filesystem::path& file)
{
    const std::string text = read_file(file);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(file.string() + ": " + e.what());
    }
    return parse_instance(doc, file.parent_path());
}

std::vector<SourceFile> read_context_files(const Instance& instance)
{
    std::vector<SourceFile> files;
    for (const auto& p : instance.context_files)
        files.push_back({p, read_file(instance.repo_root / p)});
    return files;
}

UnitTree build_tree(const Instance& instance)
{
    return UnitTree(instance.instance_id, read_context_files(instance));
}

UnitSet resolve_refs(const UnitTree& tree, const std::vector<SegmentRef>& refs)
{
    UnitSet out;
    for (const auto& ref : refs) {
        if (ref.id) {
            out.insert(*ref.id);
            continue;
        }
        const CodeUnit* u = tree.innermost_at(ref.path, ref.line);
        if (!u || !u->is_leaf())
            throw ValidationError("no leaf segment covers " + ref.path + ":" + std::to_string(ref.line));
        out.insert(u->id);
    }
    return out;
}

} // namespace ocd
