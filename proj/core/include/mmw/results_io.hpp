// SPDX-License-Identifier: Apache-2.0
//
// CSV and JSON serialization of run results. Bodies are a pure function of
// the result; the wall-clock timestamp only goes into the sidecar file.

#pragma once

#include "mmw/harness.hpp"

#include <string>

namespace mmw {

enum class OutputFormat { Csv, Json };

OutputFormat parse_format(const std::string& name);

inline constexpr int kResultSchemaVersion = 1;

/// Header "x" then "<series>_mean,<series>_stderr" pairs; LF line endings.
std::string to_csv(const RunResult& result);

/// Canonical schema-versioned JSON, including the metadata block.
std::string to_json(const RunResult& result);
/// Throws InvalidInput on malformed documents or an unknown schema version.
RunResult result_from_json(const std::string& text);

/// Metadata plus the given timestamp and output format.
std::string metadata_json(const RunResult& result, const std::string& timestamp,
                          OutputFormat format);

/// Shortest round-trip decimal text, '.' separator, locale independent.
std::string format_number(double v);

/// Writes the body to `path` and the metadata to `path + ".meta.json"`.
/// Throws Error naming the destination and cause on I/O failure.
void emit_results(const RunResult& result, OutputFormat format, const std::string& path);

} // namespace mmw
