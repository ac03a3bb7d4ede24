// Copyright 2026 The epidiv Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "epidiv/error.hpp"

namespace epidiv {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kDepthNonPositive: return "DepthNonPositive";
    case Errc::kCoincidentCenters: return "CoincidentCenters";
    case Errc::kDegenerateLine: return "DegenerateLine";
    case Errc::kGazeParallelToBaseline: return "GazeParallelToBaseline";
    case Errc::kInsufficientViews: return "InsufficientViews";
    case Errc::kIllConditioned: return "IllConditioned";
    case Errc::kNoConsensus: return "NoConsensus";
    case Errc::kEpipoleInImage: return "EpipoleInImage";
    case Errc::kSingularHomography: return "SingularHomography";
    case Errc::kZeroScale: return "ZeroScale";
    case Errc::kLengthMismatch: return "LengthMismatch";
    case Errc::kEmptyPairSet: return "EmptyPairSet";
    case Errc::kShapeMismatch: return "ShapeMismatch";
    case Errc::kNoApplicableTerm: return "NoApplicableTerm";
    case Errc::kNonFiniteLoss: return "NonFiniteLoss";
    case Errc::kEmptySamples: return "EmptySamples";
    case Errc::kIo: return "Io";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what),
      code_(code) {}

}  // namespace epidiv
