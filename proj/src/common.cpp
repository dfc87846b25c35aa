#include "fisherdoc/common.hpp"

#include <atomic>
#include <cmath>
#include <iostream>
#include <numbers>

namespace fisherdoc {

namespace {
std::atomic<int> g_level{static_cast<int>(LogLevel::warn)};
}

void set_log_level(LogLevel level) { g_level.store(static_cast<int>(level)); }

LogLevel log_level() { return static_cast<LogLevel>(g_level.load()); }

void warn(std::string_view message) {
    if (g_level.load() >= static_cast<int>(LogLevel::warn)) {
        std::cerr << "warning: " << message << '\n';
    }
}

void info(std::string_view message) {
    if (g_level.load() >= static_cast<int>(LogLevel::info)) {
        std::cerr << message << '\n';
    }
}

double standard_normal(Rng& rng) {
    // Box-Muller; one variate per call keeps the stream position predictable.
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace fisherdoc
