#include "sparsekin/kinematics.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "sparsekin/errors.h"

namespace sparsekin {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Vec3 ReadVec3(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorCode::kParse, std::string(what) + " must be an array of 3 numbers");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

Skeleton::Skeleton(std::string name, std::vector<JointSpec> joints,
                   std::vector<LandmarkSpec> landmarks, std::vector<JointGroup> groups)
    : name_(std::move(name)),
      joints_(std::move(joints)),
      landmarks_(std::move(landmarks)),
      groups_(std::move(groups)) {
  const int d = dof();
  const int n = numLandmarks();
  chains_.resize(n);
  chainMask_.setZero(n, d);
  for (int i = 0; i < n; ++i) {
    std::vector<int> chain;
    for (int j = landmarks_[i].joint; j >= 0; j = joints_[j].parent) chain.push_back(j);
    chains_[i].assign(chain.rbegin(), chain.rend());
    for (int j : chain) chainMask_(i, j) = 1;
  }
}

Eigen::VectorXd Skeleton::lowerBounds() const {
  Eigen::VectorXd lo(dof());
  for (int j = 0; j < dof(); ++j) lo[j] = joints_[j].boundMin;
  return lo;
}

Eigen::VectorXd Skeleton::upperBounds() const {
  Eigen::VectorXd hi(dof());
  for (int j = 0; j < dof(); ++j) hi[j] = joints_[j].boundMax;
  return hi;
}

Skeleton LoadSkeleton(std::string_view configText) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(configText);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("skeleton config: ") + e.what());
  }

  try {
    const std::string name = doc.value("name", std::string("skeleton"));
    const auto& jjoints = doc.at("joints");
    const auto& jlandmarks = doc.at("landmarks");
    if (!jjoints.is_array() || jjoints.empty()) {
      throw Error(ErrorCode::kInvalidConfig, "skeleton config: joints must be a non-empty array");
    }

    struct RawJoint {
      int id;
      std::string name;
      int parent;
      Vec3 offset;
      std::vector<std::tuple<Vec3, double, double>> dofs;
    };
    std::vector<RawJoint> raw;
    std::map<int, int> byId;
    for (const auto& jj : jjoints) {
      RawJoint r;
      r.id = jj.at("id").get<int>();
      r.name = jj.value("name", "joint" + std::to_string(r.id));
      r.parent = jj.at("parent").get<int>();
      r.offset = jj.contains("offset") ? ReadVec3(jj["offset"], "offset") : Vec3::Zero();
      if (jj.contains("dof")) {
        for (const auto& jd : jj["dof"]) {
          Vec3 axis = ReadVec3(jd.at("axis"), "axis");
          if (std::abs(axis.norm() - 1.0) > 1e-8) {
            throw Error(ErrorCode::kNonUnitAxis, "joint '" + r.name + "' has a non-unit axis");
          }
          double lo = jd.at("min_deg").get<double>();
          double hi = jd.at("max_deg").get<double>();
          if (lo > hi) {
            throw Error(ErrorCode::kInvalidBounds, "joint '" + r.name + "' has min_deg > max_deg");
          }
          r.dofs.emplace_back(axis, lo * kDeg, hi * kDeg);
        }
      }
      if (byId.count(r.id)) {
        throw Error(ErrorCode::kDuplicateId, "duplicate joint id " + std::to_string(r.id));
      }
      byId[r.id] = static_cast<int>(raw.size());
      raw.push_back(std::move(r));
    }

    int roots = 0;
    for (const auto& r : raw) {
      if (r.parent == -1) {
        ++roots;
        continue;
      }
      if (!byId.count(r.parent)) {
        throw Error(ErrorCode::kUnknownJoint, "joint '" + r.name + "' references unknown parent " +
                                                  std::to_string(r.parent));
      }
      std::set<int> seen{r.id};
      for (int p = r.parent; p != -1; p = raw[byId[p]].parent) {
        if (!seen.insert(p).second) {
          throw Error(ErrorCode::kCycle, "cycle in joint tree through '" + r.name + "'");
        }
      }
    }
    if (roots != 1) {
      throw Error(ErrorCode::kInvalidConfig, "skeleton must have exactly one root (parent -1)");
    }
    for (const auto& r : raw) {
      if (r.parent != -1 && r.parent > r.id) {
        throw Error(ErrorCode::kInvalidConfig,
                    "joint '" + r.name + "' is listed before its parent (ids must be topological)");
      }
    }

    // Expand to 1-DoF joints in id order. A config joint without DoFs is a
    // fixed frame; its offset carries into children and landmarks.
    std::vector<int> order(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return raw[a].id < raw[b].id; });

    std::vector<JointSpec> joints;
    std::vector<JointGroup> groups;
    std::map<int, std::pair<int, Vec3>> anchor;  // config id -> (last DoF, pending offset)
    std::map<int, int> groupIndex;
    for (int idx : order) {
      const RawJoint& r = raw[idx];
      int parentDof = -1;
      Vec3 pending = Vec3::Zero();
      if (r.parent != -1) std::tie(parentDof, pending) = anchor.at(r.parent);
      JointGroup g;
      g.id = r.id;
      g.name = r.name;
      g.parent = r.parent;
      Vec3 offset = pending + r.offset;
      for (size_t k = 0; k < r.dofs.size(); ++k) {
        JointSpec js;
        js.id = static_cast<int>(joints.size());
        js.name = r.dofs.size() == 1 ? r.name : r.name + "." + std::to_string(k);
        js.parent = parentDof;
        js.offset = k == 0 ? offset : Vec3::Zero();
        std::tie(js.axis, js.boundMin, js.boundMax) = r.dofs[k];
        js.group = static_cast<int>(groups.size());
        parentDof = js.id;
        g.dofs.push_back(js.id);
        joints.push_back(js);
      }
      anchor[r.id] = r.dofs.empty() ? std::make_pair(parentDof, offset)
                                    : std::make_pair(parentDof, Vec3(Vec3::Zero()));
      groupIndex[r.id] = static_cast<int>(groups.size());
      groups.push_back(std::move(g));
    }

    std::vector<LandmarkSpec> landmarks;
    std::set<int> landmarkIds;
    for (const auto& jl : jlandmarks) {
      LandmarkSpec l;
      l.id = jl.at("id").get<int>();
      int joint = jl.at("joint").get<int>();
      l.name = jl.value("name", "landmark" + std::to_string(l.id));
      Vec3 local = ReadVec3(jl.at("local"), "local");
      if (!anchor.count(joint)) {
        throw Error(ErrorCode::kUnknownJoint, "landmark " + std::to_string(l.id) +
                                                  " references unknown joint " + std::to_string(joint));
      }
      if (!landmarkIds.insert(l.id).second) {
        throw Error(ErrorCode::kDuplicateId, "duplicate landmark id " + std::to_string(l.id));
      }
      l.joint = anchor[joint].first;
      l.local = anchor[joint].second + local;
      landmarks.push_back(l);
    }
    std::sort(landmarks.begin(), landmarks.end(),
              [](const LandmarkSpec& a, const LandmarkSpec& b) { return a.id < b.id; });
    for (size_t i = 0; i < landmarks.size(); ++i) {
      if (landmarks[i].id != static_cast<int>(i)) {
        throw Error(ErrorCode::kInvalidConfig, "landmark ids must be contiguous from 0");
      }
    }
    if (landmarks.empty()) {
      throw Error(ErrorCode::kInvalidConfig, "skeleton config: no landmarks");
    }
    return Skeleton(name, std::move(joints), std::move(landmarks), std::move(groups));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("skeleton config: ") + e.what());
  }
}

Skeleton LoadSkeletonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open skeleton file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return LoadSkeleton(ss.str());
}

namespace {

void CheckDims(const Skeleton& skel, const Pose& pose) {
  if (pose.theta.size() != skel.dof()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "pose has " + std::to_string(pose.theta.size()) + " angles, skeleton has " +
                    std::to_string(skel.dof()) + " DoFs");
  }
}

// Camera -> parent frame of DoF j.
const RigidTransform& ParentFrame(const std::vector<RigidTransform>& frames, const Pose& pose,
                                  int parent) {
  return parent < 0 ? pose.cameraToRoot : frames[parent];
}

}  // namespace

ForwardKinematicsResult ForwardKinematics(const Skeleton& skel, const Pose& pose) {
  CheckDims(skel, pose);
  ForwardKinematicsResult out;
  out.joints.resize(skel.dof());
  for (const JointSpec& j : skel.joints()) {
    const RigidTransform& parent = ParentFrame(out.joints, pose, j.parent);
    RigidTransform local{AxisAngle(j.axis, pose.theta[j.id]), j.offset};
    out.joints[j.id] = parent * local;
  }
  out.landmarks.reserve(skel.numLandmarks());
  for (const LandmarkSpec& l : skel.landmarks()) {
    out.landmarks.push_back(ParentFrame(out.joints, pose, l.joint) * l.local);
  }
  return out;
}

std::vector<Vec3> LandmarkPositions(const Skeleton& skel, const Pose& pose) {
  return ForwardKinematics(skel, pose).landmarks;
}

Eigen::MatrixXd ArticulatedJacobian(const Skeleton& skel, const Pose& pose) {
  const ForwardKinematicsResult fk = ForwardKinematics(skel, pose);
  const int n = skel.numLandmarks();
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(3 * n, skel.dof());
  std::vector<Twist> spatial(skel.dof());
  for (const JointSpec& j : skel.joints()) {
    spatial[j.id] = ConjugateTwist(ParentFrame(fk.joints, pose, j.parent), j.twist());
  }
  for (int i = 0; i < n; ++i) {
    for (int j : skel.chain(i)) {
      J.block<3, 1>(3 * i, j) = ApplyBodyVelocity(spatial[j], fk.landmarks[i]);
    }
  }
  return J;
}

Eigen::MatrixXd RigidJacobian(const std::vector<Vec3>& points) {
  const int n = static_cast<int>(points.size());
  Eigen::MatrixXd G(3 * n, 6);
  for (int i = 0; i < n; ++i) {
    G.block<3, 3>(3 * i, 0).setIdentity();
    G.block<3, 3>(3 * i, 3) = -Skew(points[i]);
  }
  return G;
}

Eigen::VectorXd ClampAngles(const Eigen::VectorXd& theta, const Skeleton& skel) {
  if (theta.size() != skel.dof()) {
    throw Error(ErrorCode::kDimensionMismatch, "ClampAngles: dimension mismatch");
  }
  return theta.cwiseMax(skel.lowerBounds()).cwiseMin(skel.upperBounds());
}

bool WithinBounds(const Eigen::VectorXd& theta, const Skeleton& skel, double slack) {
  if (theta.size() != skel.dof()) return false;
  for (int j = 0; j < skel.dof(); ++j) {
    if (theta[j] < skel.joints()[j].boundMin - slack || theta[j] > skel.joints()[j].boundMax + slack)
      return false;
  }
  return true;
}

Pose RestPose(const Skeleton& skel, const RigidTransform& cameraToRoot) {
  return {cameraToRoot, Eigen::VectorXd::Zero(skel.dof())};
}

RigidTransform FrontalCameraToRoot(double depth) {
  RigidTransform T;
  T.rotation = Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal();
  T.translation = Vec3(0.0, 0.0, depth);
  return T;
}

}  // namespace sparsekin
