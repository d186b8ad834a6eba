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

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "inertia_id/simworld.h"

namespace inertia_id {

using nlohmann::json;

namespace {

template <int N>
json VecToJson(const Eigen::Matrix<double, N, 1>& v) {
  json a = json::array();
  for (int i = 0; i < N; ++i) a.push_back(v(i));
  return a;
}

template <int N>
Eigen::Matrix<double, N, 1> VecFromJson(const json& j) {
  if (!j.is_array() || static_cast<int>(j.size()) != N) {
    throw Error(ErrorCode::kShapeMismatch, "expected an array of length " + std::to_string(N));
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v(i) = j.at(i).get<double>();
  return v;
}

std::vector<double> ParseCsvRow(const std::string& line) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
  return out;
}

}  // namespace

json ToJson(const InertialParams& p) {
  const Matrix3d& i = p.inertia;
  return {{"mass", p.mass},
          {"com", VecToJson<3>(p.com)},
          {"inertia_origin", {i(0, 0), i(0, 1), i(0, 2), i(1, 1), i(1, 2), i(2, 2)}}};
}

InertialParams InertialParamsFromJson(const json& j) {
  InertialParams p;
  p.mass = j.at("mass").get<double>();
  p.com = VecFromJson<3>(j.at("com"));
  const auto v = VecFromJson<6>(j.at("inertia_origin"));
  p.inertia << v(0), v(1), v(2), v(1), v(3), v(4), v(2), v(4), v(5);
  return p;
}

json ToJson(const RobotModel& model) {
  json links = json::array();
  for (const auto& l : model.links) {
    links.push_back({{"inertial", ToJson(l.inertial)},
                     {"axis", VecToJson<3>(l.axis)},
                     {"offset", VecToJson<3>(l.offset)}});
  }
  json j = {{"links", links},
            {"ee_offset", VecToJson<3>(model.ee_offset)},
            {"damping", VecToJson<4>(model.damping)},
            {"armature", VecToJson<4>(model.armature)},
            {"kp", VecToJson<4>(model.kp)},
            {"kd", VecToJson<4>(model.kd)},
            {"gravity", VecToJson<3>(model.gravity)},
            {"torque_limit", model.torque_limit},
            {"hold_pose", VecToJson<4>(model.hold_pose)}};
  if (model.payload) j["payload"] = ToJson(*model.payload);
  return j;
}

RobotModel RobotModelFromJson(const json& j) {
  RobotModel m;
  const json& links = j.at("links");
  if (links.size() != kNumJoints) {
    throw Error(ErrorCode::kShapeMismatch, "robot model needs exactly 4 links");
  }
  for (int i = 0; i < kNumJoints; ++i) {
    m.links[i].inertial = InertialParamsFromJson(links[i].at("inertial"));
    m.links[i].axis = VecFromJson<3>(links[i].at("axis"));
    m.links[i].offset = VecFromJson<3>(links[i].at("offset"));
  }
  m.ee_offset = VecFromJson<3>(j.at("ee_offset"));
  m.damping = VecFromJson<4>(j.at("damping"));
  m.armature = VecFromJson<4>(j.at("armature"));
  m.kp = VecFromJson<4>(j.at("kp"));
  m.kd = VecFromJson<4>(j.at("kd"));
  m.gravity = VecFromJson<3>(j.at("gravity"));
  m.torque_limit = j.at("torque_limit").get<double>();
  m.hold_pose = VecFromJson<4>(j.at("hold_pose"));
  if (j.contains("payload")) m.payload = InertialParamsFromJson(j.at("payload"));
  m.Validate();
  return m;
}

json ToJson(const Perturbation& p) {
  return {{"mass_scale", VecToJson<4>(p.mass_scale)},
          {"damping_offset", VecToJson<4>(p.damping_offset)},
          {"coulomb", VecToJson<4>(p.friction.coulomb)},
          {"viscous_extra", VecToJson<4>(p.friction.viscous_extra)},
          {"stiction_blend", p.friction.stiction_blend}};
}

Perturbation PerturbationFromJson(const json& j) {
  Perturbation p;
  p.mass_scale = VecFromJson<4>(j.at("mass_scale"));
  p.damping_offset = VecFromJson<4>(j.at("damping_offset"));
  p.friction.coulomb = VecFromJson<4>(j.at("coulomb"));
  p.friction.viscous_extra = VecFromJson<4>(j.at("viscous_extra"));
  p.friction.stiction_blend = j.value("stiction_blend", 0.05);
  return p;
}

void WriteRolloutCsv(const std::string& path, const RolloutRecord& record) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << "t,q1,q2,q3,q4,qd1,qd2,qd3,qd4,tau1,tau2,tau3,tau4,ex,ey,ez\n";
  out << std::setprecision(17);
  for (std::size_t k = 0; k < record.size(); ++k) {
    const auto& s = record.samples[k];
    out << static_cast<double>(k) * record.dt;
    for (int i = 0; i < 4; ++i) out << ',' << s.q(i);
    for (int i = 0; i < 4; ++i) out << ',' << s.qdot(i);
    for (int i = 0; i < 4; ++i) out << ',' << s.tau(i);
    for (int i = 0; i < 3; ++i) out << ',' << s.ee_pos(i);
    out << '\n';
  }
}

RolloutRecord ReadRolloutCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::string line;
  std::getline(in, line);
  RolloutRecord record;
  std::vector<double> times;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto row = ParseCsvRow(line);
    if (row.size() != 16) throw Error(ErrorCode::kShapeMismatch, "rollout CSV row needs 16 columns");
    RolloutSample s;
    for (int i = 0; i < 4; ++i) {
      s.q(i) = row[1 + i];
      s.qdot(i) = row[5 + i];
      s.tau(i) = row[9 + i];
    }
    for (int i = 0; i < 3; ++i) s.ee_pos(i) = row[13 + i];
    times.push_back(row[0]);
    record.samples.push_back(s);
  }
  if (times.size() >= 2) record.dt = times[1] - times[0];
  return record;
}

namespace {

constexpr char kRolloutMagic[4] = {'I', 'I', 'D', 'R'};
constexpr std::uint32_t kRolloutVersion = 1;

template <typename T>
void WritePod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T ReadPod(std::istream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error(ErrorCode::kIo, "truncated rollout file");
  return v;
}

}  // namespace

void WriteRolloutBinary(const std::string& path, const RolloutRecord& record) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out.write(kRolloutMagic, 4);
  WritePod(out, kRolloutVersion);
  WritePod(out, record.dt);
  WritePod(out, static_cast<std::uint32_t>(record.payload_label.size()));
  out.write(record.payload_label.data(), static_cast<std::streamsize>(record.payload_label.size()));
  WritePod(out, static_cast<std::uint64_t>(record.size()));
  for (const auto& s : record.samples) {
    out.write(reinterpret_cast<const char*>(s.q.data()), 4 * sizeof(double));
    out.write(reinterpret_cast<const char*>(s.qdot.data()), 4 * sizeof(double));
    out.write(reinterpret_cast<const char*>(s.tau.data()), 4 * sizeof(double));
    out.write(reinterpret_cast<const char*>(s.ee_pos.data()), 3 * sizeof(double));
  }
}

RolloutRecord ReadRolloutBinary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kRolloutMagic, 4) != 0) {
    throw Error(ErrorCode::kIo, path + " is not a rollout file");
  }
  if (ReadPod<std::uint32_t>(in) != kRolloutVersion) {
    throw Error(ErrorCode::kIo, "unsupported rollout file version");
  }
  RolloutRecord record;
  record.dt = ReadPod<double>(in);
  record.payload_label.resize(ReadPod<std::uint32_t>(in));
  in.read(record.payload_label.data(), static_cast<std::streamsize>(record.payload_label.size()));
  const auto n = ReadPod<std::uint64_t>(in);
  record.samples.resize(n);
  for (auto& s : record.samples) {
    in.read(reinterpret_cast<char*>(s.q.data()), 4 * sizeof(double));
    in.read(reinterpret_cast<char*>(s.qdot.data()), 4 * sizeof(double));
    in.read(reinterpret_cast<char*>(s.tau.data()), 4 * sizeof(double));
    in.read(reinterpret_cast<char*>(s.ee_pos.data()), 3 * sizeof(double));
  }
  if (!in) throw Error(ErrorCode::kIo, "truncated rollout file");
  return record;
}

void WriteJointTrajectoryCsv(const std::string& path, const JointTrajectory& traj) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << "t,q1,q2,q3,q4,qd1,qd2,qd3,qd4\n" << std::setprecision(17);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out << static_cast<double>(k) * traj.dt;
    for (int i = 0; i < 4; ++i) out << ',' << traj.q[k](i);
    for (int i = 0; i < 4; ++i) out << ',' << traj.qdot[k](i);
    out << '\n';
  }
}

JointTrajectory ReadJointTrajectoryCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::string line;
  std::getline(in, line);
  JointTrajectory traj;
  std::vector<double> times;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto row = ParseCsvRow(line);
    if (row.size() != 9) throw Error(ErrorCode::kShapeMismatch, "trajectory CSV row needs 9 columns");
    times.push_back(row[0]);
    traj.q.emplace_back(row[1], row[2], row[3], row[4]);
    traj.qdot.emplace_back(row[5], row[6], row[7], row[8]);
  }
  if (times.size() >= 2) traj.dt = times[1] - times[0];
  return traj;
}

}  // namespace inertia_id
