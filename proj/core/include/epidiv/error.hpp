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

#ifndef EPIDIV_ERROR_HPP_
#define EPIDIV_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace epidiv {

/// Failure categories raised by the toolkit. Every throwing operation reports
/// one of these through `Error::code()`.
enum class Errc {
  kInvalidArgument,
  kDepthNonPositive,
  kCoincidentCenters,
  kDegenerateLine,
  kGazeParallelToBaseline,
  kInsufficientViews,
  kIllConditioned,
  kNoConsensus,
  kEpipoleInImage,
  kSingularHomography,
  kZeroScale,
  kLengthMismatch,
  kEmptyPairSet,
  kShapeMismatch,
  kNoApplicableTerm,
  kNonFiniteLoss,
  kEmptySamples,
  kIo,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace epidiv

#endif  // EPIDIV_ERROR_HPP_
