#include "wakd/log.hpp"

#include <cstdlib>
#include <iostream>

namespace wakd {

LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("WAKD_LOG");
        if (!env)
            return LogLevel::Info;
        const std::string v(env);
        if (v == "error")
            return LogLevel::Error;
        if (v == "debug")
            return LogLevel::Debug;
        return LogLevel::Info;
    }();
    return level;
}

namespace {

void emit(LogLevel at, const char* tag, const std::string& msg) {
    if (static_cast<int>(log_level()) >= static_cast<int>(at))
        std::cerr << "[wakd " << tag << "] " << msg << '\n';
}

} // namespace

void log_error(const std::string& msg) { emit(LogLevel::Error, "error", msg); }
void log_info(const std::string& msg) { emit(LogLevel::Info, "info", msg); }
void log_debug(const std::string& msg) { emit(LogLevel::Debug, "debug", msg); }

} // namespace wakd
