#pragma once

#include <string>

namespace wakd {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

// Level comes from the WAKD_LOG env var (error|info|debug); default info.
LogLevel log_level();

void log_error(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

} // namespace wakd
