#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace horizon::cli {

inline constexpr std::uint64_t kDefaultSeed = 20160704;

/// Runs the tool on arguments excluding the program name; returns the exit
/// status. 0 success, 1 usage error, 2 data or model error.
int run(const std::vector<std::string>& args);

}  // namespace horizon::cli
