#pragma once

#include <cstdint>
#include <string>

namespace esim {

// Identifiers as they appear in the dataset files. Distinct enum types keep
// cell and radio-unit ids from being mixed up.
enum class CellId : std::int32_t {};
enum class RadioId : std::int32_t {};

constexpr std::int32_t raw(CellId id) { return static_cast<std::int32_t>(id); }
constexpr std::int32_t raw(RadioId id) { return static_cast<std::int32_t>(id); }

inline std::string to_string(CellId id) { return std::to_string(raw(id)); }
inline std::string to_string(RadioId id) { return std::to_string(raw(id)); }

inline constexpr int kHoursPerDay = 24;

}  // namespace esim
