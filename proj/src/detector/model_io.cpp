// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

#include "cerule/detector/model_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cerule/common/atomic_file.hpp"
#include "cerule/common/binary_io.hpp"
#include "cerule/common/error.hpp"

namespace cerule {

namespace {

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint32_t narrow(std::size_t v, const char* what) {
  if (v > 0xFFFFFFFFull) throw Error(Errc::kInvalidConfig, std::string(what) + " too large");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void write_model(std::ostream& out, const DetectorModel& model) {
  // Serialize to memory first so the checksum covers exactly what is written.
  std::ostringstream body;
  io::Writer w(body);
  const auto& a = model.arch();
  w.raw(kModelMagic, 4);
  w.put(kModelVersion);
  w.put(std::uint16_t{0});
  for (auto v : {a.input_dim, a.num_layers, a.hidden, a.num_labels, a.segment_len}) {
    w.put(narrow(v, "dimension"));
  }
  w.put(narrow(model.label_names().size(), "label count"));
  for (const auto& n : model.label_names()) w.put_string(n);
  w.put(narrow(model.tensors().size(), "tensor count"));
  for (const auto& t : model.tensors()) {
    w.put_string(t.name);
    w.put(narrow(t.rows, "rows"));
    w.put(narrow(t.cols, "cols"));
  }
  w.put(static_cast<std::uint64_t>(model.parameter_count()));
  w.put_f32s(model.params());
  const std::string bytes = body.str();
  io::Writer final_out(out);
  final_out.raw(bytes.data(), bytes.size());
  final_out.put(fnv1a(bytes));
}

DetectorModel read_model(std::istream& in) {
  std::ostringstream copy;
  copy << in.rdbuf();
  const std::string all = copy.str();
  std::istringstream src(all);
  io::Reader r(src);
  char magic[4];
  r.raw(magic, 4, "magic");
  if (std::memcmp(magic, kModelMagic, 4) != 0) {
    throw Error(Errc::kBadMagic, "not a detector model file (bad magic)");
  }
  const auto version = r.get<std::uint16_t>("version");
  if (version != kModelVersion) {
    throw Error(Errc::kBadMagic, "unsupported model file version " + std::to_string(version));
  }
  if (r.get<std::uint16_t>("dtype") != 0) throw Error(Errc::kBadMagic, "unsupported dtype");
  Architecture a;
  a.input_dim = r.get<std::uint32_t>("input_dim");
  a.num_layers = r.get<std::uint32_t>("num_layers");
  a.hidden = r.get<std::uint32_t>("hidden");
  a.num_labels = r.get<std::uint32_t>("num_labels");
  a.segment_len = r.get<std::uint32_t>("segment_len");
  a.validate();
  std::vector<std::string> names(r.get<std::uint32_t>("label count"));
  for (auto& n : names) n = r.get_string("label name");
  DetectorModel model(a, std::move(names));
  const auto n_tensors = r.get<std::uint32_t>("tensor count");
  if (n_tensors != model.tensors().size()) {
    throw Error(Errc::kConfigMismatch, "tensor table has " + std::to_string(n_tensors) +
                                           " entries, architecture implies " +
                                           std::to_string(model.tensors().size()));
  }
  for (const auto& t : model.tensors()) {
    auto name = r.get_string("tensor name");
    auto rows = r.get<std::uint32_t>("tensor rows");
    auto cols = r.get<std::uint32_t>("tensor cols");
    if (name != t.name || rows != t.rows || cols != t.cols) {
      throw Error(Errc::kConfigMismatch, "tensor '" + name + "' does not match the architecture");
    }
  }
  const auto count = r.get<std::uint64_t>("parameter count");
  if (count != model.parameter_count()) {
    throw Error(Errc::kConfigMismatch, "parameter count disagrees with the architecture");
  }
  r.get_f32s(model.params(), "parameters");
  const auto body_len = r.offset();
  const auto stored = r.get<std::uint64_t>("checksum");
  if (stored != fnv1a(all.substr(0, body_len))) {
    throw Error(Errc::kConfigMismatch, "model file checksum mismatch");
  }
  for (float v : model.params()) {
    if (!std::isfinite(v)) throw Error(Errc::kNonFiniteValue, "model has non-finite weights");
  }
  return model;
}

void save_model(const std::filesystem::path& path, const DetectorModel& model) {
  write_file_atomic(path, [&](std::ostream& out) { write_model(out, model); }, true);
}

DetectorModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  return read_model(in);
}

}  // namespace cerule
