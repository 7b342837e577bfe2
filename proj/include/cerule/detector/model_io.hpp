// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

// Detector weight file (.cedm). Layout, all integers little-endian:
//
//   "CEDM"  u16 version(=1)  u16 dtype(=0, f32)
//   u32 input_dim  u32 num_layers  u32 hidden  u32 num_labels  u32 segment_len
//   u32 n_labels, then n_labels x (u32 len, bytes)   label names
//   u32 n_tensors, then n_tensors x (u32 len, bytes name, u32 rows, u32 cols)
//   u64 n_params, then n_params x f32                tensors in table order
//   u64 FNV-1a 64 over every preceding byte

#pragma once

#include <filesystem>
#include <iosfwd>

#include "cerule/detector/gru.hpp"

namespace cerule {

inline constexpr char kModelMagic[4] = {'C', 'E', 'D', 'M'};
inline constexpr std::uint16_t kModelVersion = 1;

void write_model(std::ostream& out, const DetectorModel& model);
/// Throws kBadMagic, kTruncatedFrame, kConfigMismatch (tensor table or
/// checksum disagrees), kNonFiniteValue.
DetectorModel read_model(std::istream& in);

void save_model(const std::filesystem::path& path, const DetectorModel& model);
DetectorModel load_model(const std::filesystem::path& path);

}  // namespace cerule
