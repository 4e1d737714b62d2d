#pragma once

#include <map>
#include <ostream>
#include <string>
#include <string_view>

namespace regraph {

enum class LogLevel { debug, info, warn, error };

LogLevel log_level_from_string(std::string_view s);
const char* log_level_name(LogLevel level);

// Leveled stderr logger. At the debug threshold every line is a JSON object
// (machine-checkable); at info and above lines are plain text. No timestamps:
// output artifacts and logs stay byte-reproducible.
class Logger {
public:
    explicit Logger(LogLevel threshold = LogLevel::info, std::ostream* sink = nullptr);

    void log(LogLevel level, const std::string& event,
             const std::map<std::string, std::string>& fields = {});

    void debug(const std::string& event, const std::map<std::string, std::string>& fields = {}) {
        log(LogLevel::debug, event, fields);
    }
    void info(const std::string& event, const std::map<std::string, std::string>& fields = {}) {
        log(LogLevel::info, event, fields);
    }
    void warn(const std::string& event, const std::map<std::string, std::string>& fields = {}) {
        log(LogLevel::warn, event, fields);
    }
    void error(const std::string& event, const std::map<std::string, std::string>& fields = {}) {
        log(LogLevel::error, event, fields);
    }

    LogLevel threshold() const { return threshold_; }

private:
    LogLevel threshold_;
    std::ostream* sink_;
};

}  // namespace regraph
