// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cerule {

/// Failure categories shared by every module. The CLI maps these onto exit
/// codes, tests match on them.
enum class Errc : std::uint8_t {
  // rule language
  kSyntax,
  kUnknownCe,
  kUnknownAction,
  kDuplicateRule,
  kInvalidVocabulary,
  // traces
  kMissingLayer,
  kDimensionMismatch,
  kNonFiniteValue,
  kBadMagic,
  kTruncatedFrame,
  kConfigMismatch,
  // detector
  kEmptyDataset,
  kNonFiniteGradient,
  kEmptySet,
  kDegenerateDirection,
  kInvalidConfig,
  // monitor
  kOutOfOrderToken,
  kProbabilityOutOfRange,
  kStaleRecord,
  kStreamHalted,
  // evalkit
  kSingleClass,
  kEmptyCorpus,
  kRejectedConfig,
  // generic
  kIo,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace cerule
