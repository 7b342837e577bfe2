// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <ostream>
#include <string>

namespace cerule {

/// Writes `path` by streaming into a sibling temporary file and renaming it
/// into place once `fill` returns. If `fill` throws, the temporary is removed
/// and `path` is left untouched.
void write_file_atomic(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& fill,
                       bool binary = false);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace cerule
