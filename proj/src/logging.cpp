#include "logging.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace meshguard {

namespace {

LogLevel parse_level() {
    const char* env = std::getenv("MESHGUARD_LOG");
    if (!env) return LogLevel::Warn;
    std::string value(env);
    if (value == "quiet" || value == "0") return LogLevel::Quiet;
    if (value == "info") return LogLevel::Info;
    if (value == "debug") return LogLevel::Debug;
    return LogLevel::Warn;
}

std::mutex& log_mutex() {
    static std::mutex m;
    return m;
}

void emit(const char* tag, const std::string& message) {
    std::lock_guard<std::mutex> lock(log_mutex());
    std::cerr << "[meshguard:" << tag << "] " << message << "\n";
}

}  // namespace

LogLevel log_level() {
    static LogLevel level = parse_level();
    return level;
}

void log_warn(const std::string& message) {
    if (log_level() >= LogLevel::Warn) emit("warn", message);
}

void log_info(const std::string& message) {
    if (log_level() >= LogLevel::Info) emit("info", message);
}

void log_debug(const std::string& message) {
    if (log_level() >= LogLevel::Debug) emit("debug", message);
}

}  // namespace meshguard
