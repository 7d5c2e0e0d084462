#pragma once

#include <iostream>
#include <string_view>

namespace coevo::log {

enum class Level { Quiet = 0, Warn = 1, Info = 2 };

inline Level& threshold() {
    static Level level = Level::Warn;
    return level;
}

inline void warn(std::string_view msg) {
    if (threshold() >= Level::Warn) std::cerr << "warning: " << msg << '\n';
}

inline void info(std::string_view msg) {
    if (threshold() >= Level::Info) std::cerr << msg << '\n';
}

}  // namespace coevo::log
