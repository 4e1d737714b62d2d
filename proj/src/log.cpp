#include "regraph/log.hpp"

#include <iostream>
#include <stdexcept>

#include <json.hpp>

namespace regraph {

LogLevel log_level_from_string(std::string_view s) {
    if (s == "debug") return LogLevel::debug;
    if (s == "info") return LogLevel::info;
    if (s == "warn") return LogLevel::warn;
    if (s == "error") return LogLevel::error;
    throw std::invalid_argument("unknown log level: " + std::string(s));
}

const char* log_level_name(LogLevel level) {
    switch (level) {
        case LogLevel::debug: return "debug";
        case LogLevel::info: return "info";
        case LogLevel::warn: return "warn";
        case LogLevel::error: return "error";
    }
    return "unknown";
}

Logger::Logger(LogLevel threshold, std::ostream* sink)
    : threshold_(threshold), sink_(sink != nullptr ? sink : &std::cerr) {}

void Logger::log(LogLevel level, const std::string& event,
                 const std::map<std::string, std::string>& fields) {
    if (static_cast<int>(level) < static_cast<int>(threshold_)) return;
    if (threshold_ == LogLevel::debug) {
        nlohmann::json line = {{"level", log_level_name(level)}, {"event", event}};
        for (const auto& [key, value] : fields) line[key] = value;
        *sink_ << line.dump() << "\n";
        return;
    }
    *sink_ << log_level_name(level) << ": " << event;
    for (const auto& [key, value] : fields) *sink_ << " " << key << "=" << value;
    *sink_ << "\n";
}

}  // namespace regraph
