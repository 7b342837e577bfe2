// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

#include "cerule/common/atomic_file.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

#include "cerule/common/error.hpp"

namespace cerule {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path,
                       const std::function<void(std::ostream&)>& fill,
                       bool binary) {
  fs::path tmp = path;
  tmp += ".tmp";
  try {
    {
      std::ofstream out(tmp, binary ? std::ios::binary | std::ios::trunc
                                    : std::ios::trunc);
      if (!out) throw Error(Errc::kIo, "cannot open " + tmp.string() + " for writing");
      fill(out);
      out.flush();
      if (!out) throw Error(Errc::kIo, "failed writing " + tmp.string());
    }
    fs::rename(tmp, path);
  } catch (...) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw;
  }
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace cerule
