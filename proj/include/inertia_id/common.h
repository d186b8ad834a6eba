// Copyright 2026 The inertia_id Authors
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

#ifndef INERTIA_ID_COMMON_H_
#define INERTIA_ID_COMMON_H_

#include <Eigen/Core>
#include <array>
#include <stdexcept>
#include <string>

namespace inertia_id {

using Eigen::Matrix3d;
using Eigen::Matrix4d;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::Vector4d;
using Eigen::VectorXd;

inline constexpr int kNumJoints = 4;

// Failure categories surfaced by the library. Each maps to one of the error
// conditions named in the module contracts.
enum class ErrorCode {
  kNonPositiveMass,
  kInvalidRotation,
  kSingularMassMatrix,
  kDiverged,
  kInvalidPerturbation,
  kConfigMismatch,
  kTooShort,
  kRankDeficient,
  kLengthMismatch,
  kIllConditioned,
  kNonFinite,
  kShapeMismatch,
  kInvalidArgument,
  kIo,
};

const char* ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace inertia_id

#endif  // INERTIA_ID_COMMON_H_
