#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "galam/room_config.hpp"

namespace galam::cli {

/// Seed used when neither --seed nor GALAM_SEED is given.
inline constexpr std::uint64_t kDefaultSeed = 20240601;

enum ExitCode : int { kOk = 0, kUsage = 1, kDomain = 2 };

enum class Format { json, csv };

/// Inline JSON (first non-blank character '{') or a path to a JSON file, in
/// any form accepted by room_config_from_json. Configurations built from
/// fractions echo the achieved n and a_i to `diag`.
RoomConfig load_room_config(const std::string& source, std::ostream& diag);

/// Writes either the single-line JSON document or the CSV produced by
/// `write_csv` to `path` ("" or "-" means `out`). Throws on I/O failure.
void write_output(const nlohmann::json& doc, const std::function<void(std::ostream&)>& write_csv, Format format,
                  const std::string& path, std::ostream& out);

/// Full command line: subcommand routing, output, and error reporting as a
/// single "error: ..." line on `err`. Returns the process exit code.
int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace galam::cli
