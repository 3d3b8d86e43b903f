#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tournsim {

// Operators are numbered 1..N; 0 means "nobody".
using OperatorId = uint32_t;
inline constexpr OperatorId kNoOperator = 0;

using TemplateId = int32_t;
inline constexpr TemplateId kExternalFunding = -1;

using Period = int64_t;

inline constexpr int kPeriodsPerEpoch = 5;

// Discrete simulator time measured in timelock periods; five periods per epoch.
struct Time {
    Period periods = 0;
    Period epoch() const { return periods / kPeriodsPerEpoch; }
    bool operator==(const Time&) const = default;
    auto operator<=>(const Time&) const = default;
};

struct SimError : std::runtime_error {
    explicit SimError(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
    ConfigError(const std::string& path, const std::string& what)
        : std::runtime_error("config error at " + path + ": " + what), field_path(path) {}
    std::string field_path;
};

inline uint32_t ceil_log2(uint64_t n) {
    uint32_t r = 0;
    uint64_t v = 1;
    while (v < n) {
        v <<= 1;
        ++r;
    }
    return r;
}

inline bool is_power_of_two(uint64_t n) { return n != 0 && (n & (n - 1)) == 0; }

} // namespace tournsim
