// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cerule {

std::string_view trim(std::string_view s);

/// Splits on '\n', dropping a trailing '\r' from each line. A final empty
/// line after the last newline is not reported.
std::vector<std::string_view> split_lines(std::string_view text);

std::optional<double> parse_double(std::string_view s);

/// Shortest representation that parses back to the same double.
std::string format_double(double value);

}  // namespace cerule
