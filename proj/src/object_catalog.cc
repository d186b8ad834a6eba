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

#include "inertia_id/object_catalog.h"

#include <cmath>
#include <fstream>

namespace inertia_id {

using nlohmann::json;

CompositeObject BuildObject(const HoleFills& fills, const std::string& label,
                            const ObjectDesign& design) {
  CompositeObject obj;
  obj.label = label;
  obj.grasp_pose = design.grasp_pose;

  obj.primitives.push_back({Cuboid{design.bar_dims}, design.body_density, {}});
  for (double side : {-1.0, 1.0}) {
    obj.primitives.push_back(
        {Cuboid{design.end_dims}, design.body_density,
         RigidTransform::Translation({side * design.end_offset_x, 0.0, 0.0})});
  }

  for (int i = 0; i < kNumHoles; ++i) {
    const Vector3d& c = design.hole_centers[i];
    // Bar holes go through the bar, end holes through the taller end blocks.
    const double height = i < 4 ? design.bar_dims.z() : design.end_dims.z();
    const Cylinder cyl{design.hole_radius, height};
    const RigidTransform pose = RigidTransform::Translation(c);
    obj.primitives.push_back({cyl, -design.body_density, pose});
    switch (fills[i]) {
      case HoleFill::kEmpty:
        break;
      case HoleFill::kAbs:
        obj.primitives.push_back({cyl, design.abs_density, pose});
        break;
      case HoleFill::kSteel:
        obj.primitives.push_back({cyl, design.steel_density, pose});
        break;
    }
  }
  return obj;
}

std::optional<InertialParams> PayloadInEeFrame(const CompositeObject& object) {
  if (IsFree(object)) return std::nullopt;
  return TransformParams(CompositeInertia(object), object.grasp_pose);
}

InertialParams ObjectParams(const CompositeObject& object) {
  return CompositeInertia(object);
}

namespace {

HoleFills Fill(HoleFill base, std::initializer_list<std::pair<int, HoleFill>> overrides) {
  HoleFills f;
  f.fill(base);
  for (const auto& [idx, fill] : overrides) f[idx] = fill;
  return f;
}

}  // namespace

std::vector<CompositeObject> DefaultCatalog(const ObjectDesign& design) {
  using enum HoleFill;
  std::vector<CompositeObject> catalog;
  catalog.push_back(BuildObject(Fill(kSteel, {}), "Full Steel", design));
  catalog.push_back(BuildObject(Fill(kAbs, {}), "Full ABS", design));
  catalog.push_back(BuildObject(
      Fill(kEmpty, {{0, kAbs}, {1, kAbs}, {4, kAbs}, {5, kAbs}, {6, kAbs}}),
      "Full ABS Half", design));
  catalog.push_back(BuildObject(
      Fill(kAbs, {{0, kSteel}, {1, kSteel}, {4, kSteel}, {5, kSteel}, {6, kSteel}}),
      "Half and Half", design));
  catalog.push_back(BuildObject(Fill(kAbs, {{5, kSteel}, {8, kSteel}}), "Barbell", design));
  catalog.push_back(BuildObject(Fill(kAbs, {{4, kSteel}}), "Corner", design));
  catalog.push_back(BuildObject(Fill(kAbs, {{7, kSteel}, {8, kSteel}, {9, kSteel}}),
                                "Hammer", design));
  catalog.push_back(BuildObject(
      Fill(kEmpty, {{0, kSteel}, {1, kSteel}, {2, kSteel}, {3, kSteel},
                    {7, kSteel}, {8, kSteel}, {9, kSteel}}),
      "Tee", design));
  catalog.push_back(BuildObject(Fill(kEmpty, {{1, kSteel}, {2, kSteel}, {5, kSteel}, {8, kSteel}}),
                                "Cross", design));
  catalog.push_back(BuildObject(Fill(kAbs, {{4, kSteel}, {9, kSteel}}),
                                "Diagonal", design));
  catalog.push_back(BuildObject(Fill(kEmpty, {}), "Empty", design));
  catalog.push_back(CompositeObject{"Free", {}, design.grasp_pose});
  return catalog;
}

const CompositeObject& FindObject(const std::vector<CompositeObject>& catalog,
                                  const std::string& label) {
  for (const auto& obj : catalog) {
    if (obj.label == label) return obj;
  }
  throw Error(ErrorCode::kInvalidArgument, "no catalog object labelled '" + label + "'");
}

Vector7d TargetScale(const std::vector<CompositeObject>& catalog) {
  const InertialParams ref = ObjectParams(FindObject(catalog, "Full Steel"));
  const Vector7d y = TargetVector(ref);
  Vector7d scale = y.cwiseAbs();
  for (int k = 0; k < 3; ++k) scale(1 + k) = std::sqrt(y(4 + k) / y(0));
  return scale;
}

HoleFills SampleFills(std::mt19937_64& rng) {
  HoleFills fills;
  for (auto& f : fills) {
    // Raw modulo keeps the draw identical across standard libraries.
    f = static_cast<HoleFill>(rng() % 3);
  }
  return fills;
}

json ToJson(const RigidTransform& t) {
  json rot = json::array();
  for (int r = 0; r < 3; ++r) {
    rot.push_back({t.rotation(r, 0), t.rotation(r, 1), t.rotation(r, 2)});
  }
  return {{"rotation", rot},
          {"translation", {t.translation.x(), t.translation.y(), t.translation.z()}}};
}

RigidTransform RigidTransformFromJson(const json& j) {
  RigidTransform t;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) t.rotation(r, c) = j.at("rotation").at(r).at(c).get<double>();
  }
  for (int k = 0; k < 3; ++k) t.translation(k) = j.at("translation").at(k).get<double>();
  ValidateRotation(t.rotation);
  return t;
}

json ToJson(const CompositeObject& object) {
  json prims = json::array();
  for (const auto& p : object.primitives) {
    json jp;
    if (const auto* c = std::get_if<Cuboid>(&p.shape)) {
      jp["kind"] = "cuboid";
      jp["dims"] = {c->dims.x(), c->dims.y(), c->dims.z()};
    } else {
      const auto& cyl = std::get<Cylinder>(p.shape);
      jp["kind"] = "cylinder";
      jp["radius"] = cyl.radius;
      jp["height"] = cyl.height;
    }
    jp["density"] = p.density;
    jp["pose"] = ToJson(p.pose);
    prims.push_back(jp);
  }
  return {{"label", object.label}, {"grasp_pose", ToJson(object.grasp_pose)},
          {"primitives", prims}};
}

CompositeObject CompositeObjectFromJson(const json& j) {
  CompositeObject obj;
  obj.label = j.at("label").get<std::string>();
  obj.grasp_pose = RigidTransformFromJson(j.at("grasp_pose"));
  for (const auto& jp : j.at("primitives")) {
    PrimitiveShape p;
    const std::string kind = jp.at("kind").get<std::string>();
    if (kind == "cuboid") {
      Cuboid c;
      for (int k = 0; k < 3; ++k) c.dims(k) = jp.at("dims").at(k).get<double>();
      p.shape = c;
    } else if (kind == "cylinder") {
      p.shape = Cylinder{jp.at("radius").get<double>(), jp.at("height").get<double>()};
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown primitive kind '" + kind + "'");
    }
    p.density = jp.at("density").get<double>();
    p.pose = RigidTransformFromJson(jp.at("pose"));
    obj.primitives.push_back(p);
  }
  return obj;
}

json CatalogToJson(const std::vector<CompositeObject>& catalog) {
  json arr = json::array();
  for (const auto& obj : catalog) arr.push_back(ToJson(obj));
  return arr;
}

std::vector<CompositeObject> CatalogFromJson(const json& j) {
  std::vector<CompositeObject> catalog;
  for (const auto& jo : j) catalog.push_back(CompositeObjectFromJson(jo));
  return catalog;
}

void SaveCatalog(const std::string& path, const std::vector<CompositeObject>& catalog) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << CatalogToJson(catalog).dump(2) << "\n";
}

std::vector<CompositeObject> LoadCatalog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  return CatalogFromJson(json::parse(in));
}

}  // namespace inertia_id
