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

// The test object: three ABS cuboids (a centre bar and two end blocks) with
// ten through-holes that take steel weights, ABS plugs, or stay empty.

#ifndef INERTIA_ID_OBJECT_CATALOG_H_
#define INERTIA_ID_OBJECT_CATALOG_H_

#include <array>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "inertia_id/rigidbody.h"
#include "json.hpp"

namespace inertia_id {

inline constexpr int kNumHoles = 10;

enum class HoleFill { kEmpty, kAbs, kSteel };

using HoleFills = std::array<HoleFill, kNumHoles>;

struct ObjectDesign {
  double body_density = 1050.0;   // ABS
  double steel_density = 7850.0;
  double abs_density = 1050.0;
  Vector3d bar_dims{0.14, 0.035, 0.035};
  Vector3d end_dims{0.04, 0.09, 0.07};
  double end_offset_x = 0.09;
  double hole_radius = 0.008;
  // Holes 0-3 run along the bar; 4-6 sit in the -x block, 7-9 in the +x block.
  std::array<Vector3d, kNumHoles> hole_centers{{
      {-0.0525, 0.0, 0.0}, {-0.0175, 0.0, 0.0}, {0.0175, 0.0, 0.0}, {0.0525, 0.0, 0.0},
      {-0.09, -0.03, 0.0}, {-0.09, 0.0, 0.0}, {-0.09, 0.03, 0.0},
      {0.09, -0.03, 0.0}, {0.09, 0.0, 0.0}, {0.09, 0.03, 0.0}}};
  RigidTransform grasp_pose{AxisAngle(Vector3d::UnitZ(), 1.5707963267948966),
                            Vector3d(0.0, 0.0, -0.045)};
};

CompositeObject BuildObject(const HoleFills& fills, const std::string& label,
                            const ObjectDesign& design = ObjectDesign());

// A "Free" entry (no primitives) means the gripper is empty.
inline bool IsFree(const CompositeObject& object) { return object.primitives.empty(); }

// Payload params in the end-effector frame, or nullopt for a free gripper.
std::optional<InertialParams> PayloadInEeFrame(const CompositeObject& object);

// Ground-truth params in the object frame.
InertialParams ObjectParams(const CompositeObject& object);

// The ten reference configurations plus "Empty" and "Free".
std::vector<CompositeObject> DefaultCatalog(const ObjectDesign& design = ObjectDesign());

// Per-component NMAE scale: Full Steel mass and inertia diagonal; for the COM
// components (zero by symmetry on Full Steel) its per-axis radius of gyration.
Vector7d TargetScale(const std::vector<CompositeObject>& catalog);

const CompositeObject& FindObject(const std::vector<CompositeObject>& catalog,
                                  const std::string& label);

// Draws a random hole-fill pattern, uniform over {steel, ABS, empty} per hole.
HoleFills SampleFills(std::mt19937_64& rng);

nlohmann::json ToJson(const RigidTransform& t);
RigidTransform RigidTransformFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const CompositeObject& object);
CompositeObject CompositeObjectFromJson(const nlohmann::json& j);
nlohmann::json CatalogToJson(const std::vector<CompositeObject>& catalog);
std::vector<CompositeObject> CatalogFromJson(const nlohmann::json& j);

void SaveCatalog(const std::string& path, const std::vector<CompositeObject>& catalog);
std::vector<CompositeObject> LoadCatalog(const std::string& path);

}  // namespace inertia_id

#endif  // INERTIA_ID_OBJECT_CATALOG_H_
