#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "regraph/verify.hpp"

namespace regraph {

enum class Tier { easy, medium, hard };

Tier tier_from_string(std::string_view s);
const char* tier_name(Tier t);

// One benchmark task: a complete serial C++ program (driver included) plus
// the inputs used to judge candidates against it.
struct TaskRecord {
    std::string id;
    std::string cpp_source;
    std::vector<TestInput> tests;
    std::optional<Tier> tier;
    std::optional<int> trajectory_length;
};

// JSONL, one record per line:
// {"id", "cpp", "tests": [{"input", "policy"}], "tier"?, "traj_len"?}
std::vector<TaskRecord> load_dataset(const std::filesystem::path& file);
void save_dataset(const std::vector<TaskRecord>& records, const std::filesystem::path& file);

std::string task_record_to_json_line(const TaskRecord& rec);
TaskRecord task_record_from_json_line(std::string_view line, int line_number = 0);

}  // namespace regraph
