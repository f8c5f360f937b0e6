#pragma once

#include <string_view>

namespace prunesearch::log {

// Level comes from PRUNESEARCH_LOG (error|info|debug), read once. Default: error.
enum class Level { error = 0, info = 1, debug = 2 };

Level level();
void error(std::string_view msg);
void info(std::string_view msg);
void debug(std::string_view msg);

} // namespace prunesearch::log
