// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

#include "cerule/common/error.hpp"

namespace cerule {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::kSyntax: return "SyntaxError";
    case Errc::kUnknownCe: return "UnknownCe";
    case Errc::kUnknownAction: return "UnknownAction";
    case Errc::kDuplicateRule: return "DuplicateRule";
    case Errc::kInvalidVocabulary: return "InvalidVocabulary";
    case Errc::kMissingLayer: return "MissingLayer";
    case Errc::kDimensionMismatch: return "DimensionMismatch";
    case Errc::kNonFiniteValue: return "NonFiniteValue";
    case Errc::kBadMagic: return "BadMagic";
    case Errc::kTruncatedFrame: return "TruncatedFrame";
    case Errc::kConfigMismatch: return "ConfigMismatch";
    case Errc::kEmptyDataset: return "EmptyDataset";
    case Errc::kNonFiniteGradient: return "NonFiniteGradient";
    case Errc::kEmptySet: return "EmptySet";
    case Errc::kDegenerateDirection: return "DegenerateDirection";
    case Errc::kInvalidConfig: return "InvalidConfig";
    case Errc::kOutOfOrderToken: return "OutOfOrderToken";
    case Errc::kProbabilityOutOfRange: return "ProbabilityOutOfRange";
    case Errc::kStaleRecord: return "StaleRecord";
    case Errc::kStreamHalted: return "StreamHalted";
    case Errc::kSingleClass: return "SingleClass";
    case Errc::kEmptyCorpus: return "EmptyCorpus";
    case Errc::kRejectedConfig: return "RejectedConfig";
    case Errc::kIo: return "IoError";
  }
  return "Unknown";
}

}  // namespace cerule
