#include "regraph/dataset.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace regraph {

Tier tier_from_string(std::string_view s) {
    if (s == "easy") return Tier::easy;
    if (s == "medium") return Tier::medium;
    if (s == "hard") return Tier::hard;
    throw std::invalid_argument("unknown tier: " + std::string(s));
}

const char* tier_name(Tier t) {
    switch (t) {
        case Tier::easy: return "easy";
        case Tier::medium: return "medium";
        case Tier::hard: return "hard";
    }
    return "unknown";
}

std::string task_record_to_json_line(const TaskRecord& rec) {
    nlohmann::json doc;
    doc["id"] = rec.id;
    doc["cpp"] = rec.cpp_source;
    nlohmann::json tests = nlohmann::json::array();
    for (const TestInput& t : rec.tests)
        tests.push_back({{"input", t.payload}, {"policy", compare_policy_name(t.policy)}});
    doc["tests"] = std::move(tests);
    if (rec.tier) doc["tier"] = tier_name(*rec.tier);
    if (rec.trajectory_length) doc["traj_len"] = *rec.trajectory_length;
    return doc.dump();
}

TaskRecord task_record_from_json_line(std::string_view line, int line_number) {
    auto fail = [&](const std::string& what) -> std::runtime_error {
        return std::runtime_error("dataset line " + std::to_string(line_number) + ": " + what);
    };
    nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw fail("not a JSON object");

    TaskRecord rec;
    if (!doc.contains("id") || !doc["id"].is_string() || doc["id"].get<std::string>().empty())
        throw fail("missing or empty 'id'");
    rec.id = doc["id"].get<std::string>();
    if (!doc.contains("cpp") || !doc["cpp"].is_string() ||
        doc["cpp"].get<std::string>().empty())
        throw fail("missing or empty 'cpp'");
    rec.cpp_source = doc["cpp"].get<std::string>();

    if (!doc.contains("tests") || !doc["tests"].is_array() || doc["tests"].empty())
        throw fail("missing or empty 'tests'");
    for (const nlohmann::json& t : doc["tests"]) {
        if (!t.is_object() || !t.contains("input") || !t["input"].is_string() ||
            !t.contains("policy") || !t["policy"].is_string())
            throw fail("each test needs string 'input' and 'policy'");
        TestInput input;
        input.payload = t["input"].get<std::string>();
        try {
            input.policy = compare_policy_from_string(t["policy"].get<std::string>());
        } catch (const std::invalid_argument& e) {
            throw fail(e.what());
        }
        rec.tests.push_back(std::move(input));
    }

    if (doc.contains("tier")) {
        if (!doc["tier"].is_string()) throw fail("'tier' must be a string");
        try {
            rec.tier = tier_from_string(doc["tier"].get<std::string>());
        } catch (const std::invalid_argument& e) {
            throw fail(e.what());
        }
    }
    if (doc.contains("traj_len")) {
        if (!doc["traj_len"].is_number_integer() || doc["traj_len"].get<int>() < 1)
            throw fail("'traj_len' must be a positive integer");
        rec.trajectory_length = doc["traj_len"].get<int>();
    }
    return rec;
}

std::vector<TaskRecord> load_dataset(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset: " + file.string());
    std::vector<TaskRecord> records;
    std::set<std::string> ids;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
        if (blank) continue;
        TaskRecord rec = task_record_from_json_line(line, line_number);
        if (!ids.insert(rec.id).second)
            throw std::runtime_error("dataset line " + std::to_string(line_number) +
                                     ": duplicate task id '" + rec.id + "'");
        records.push_back(std::move(rec));
    }
    return records;
}

void save_dataset(const std::vector<TaskRecord>& records, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + file.string());
    for (const TaskRecord& rec : records) out << task_record_to_json_line(rec) << "\n";
}

}  // namespace regraph
