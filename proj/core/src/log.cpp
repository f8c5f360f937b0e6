#include "prunesearch/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace prunesearch::log {

namespace {
Level read_level() {
    const char* env = std::getenv("PRUNESEARCH_LOG");
    if (!env) return Level::error;
    std::string v(env);
    if (v == "debug") return Level::debug;
    if (v == "info") return Level::info;
    return Level::error;
}

std::mutex& out_mutex() {
    static std::mutex m;
    return m;
}

void emit(std::string_view tag, std::string_view msg) {
    std::lock_guard lock(out_mutex());
    std::cerr << "[prunesearch " << tag << "] " << msg << "\n";
}
} // namespace

Level level() {
    static Level l = read_level();
    return l;
}

void error(std::string_view msg) { emit("error", msg); }

void info(std::string_view msg) {
    if (level() >= Level::info) emit("info", msg);
}

void debug(std::string_view msg) {
    if (level() >= Level::debug) emit("debug", msg);
}

} // namespace prunesearch::log
