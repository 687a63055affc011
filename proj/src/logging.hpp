#pragma once

#include <string>

namespace meshguard {

// Verbosity is read once from the MESHGUARD_LOG environment variable:
// "quiet", "warn" (default), "info" or "debug".
enum class LogLevel { Quiet = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel log_level();

void log_warn(const std::string& message);
void log_info(const std::string& message);
void log_debug(const std::string& message);

}  // namespace meshguard
