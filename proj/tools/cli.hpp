#pragma once

// Command-line front end. Kept as a library so tests can drive it in-process.

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

namespace ntsram::cli {

enum ExitCode : int { kOk = 0, kAnalysisFailure = 1, kUsageError = 2 };

/// Plain table used for both CSV output and the JSON "curves" section.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<nlohmann::json>> rows;

    nlohmann::json to_json() const;
};

/// Shortest round-trip text of a number.
std::string format_number(double v);

/// CSV rendering; `preamble` lines are written first, each prefixed "# ".
std::string to_csv(const Table& t, const std::vector<std::string>& preamble = {});

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(const std::string& bytes);

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ntsram::cli
