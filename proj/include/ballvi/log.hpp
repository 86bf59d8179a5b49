#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace ballvi {

enum class LogLevel { error = 0, info = 1, debug = 2 };

// Level comes from BALLVI_LOG (error | info | debug), read once. Diagnostics
// go to stderr so stdout stays a clean report stream.
inline LogLevel log_level() {
    static LogLevel level = [] {
        const char* env = std::getenv("BALLVI_LOG");
        if (env == nullptr) return LogLevel::error;
        if (std::strcmp(env, "debug") == 0) return LogLevel::debug;
        if (std::strcmp(env, "info") == 0) return LogLevel::info;
        return LogLevel::error;
    }();
    return level;
}

template <class... Args>
inline void log_at(LogLevel lvl, const char* fmt, Args... args) {
    if (log_level() < lvl) return;
    const char* tag = lvl == LogLevel::debug ? "debug" : lvl == LogLevel::info ? "info" : "error";
    std::fprintf(stderr, "[ballvi %s] ", tag);
    std::fprintf(stderr, fmt, args...);
    std::fprintf(stderr, "\n");
}

template <class... Args>
inline void log_info(const char* fmt, Args... args) {
    log_at(LogLevel::info, fmt, args...);
}

template <class... Args>
inline void log_debug(const char* fmt, Args... args) {
    log_at(LogLevel::debug, fmt, args...);
}

template <class... Args>
inline void log_error(const char* fmt, Args... args) {
    log_at(LogLevel::error, fmt, args...);
}

} // namespace ballvi
