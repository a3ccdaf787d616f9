#pragma once

#include <compare>
#include <cstdint>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace panrec {

using Vec3 = Eigen::Vector3d;
using Pose = Eigen::Isometry3d;

using CategoryId = std::uint32_t;
using InstanceId = std::uint32_t;

/// Instance id 0 is reserved for "no instance" (stuff, freespace, unassigned).
inline constexpr InstanceId kNoInstance = 0;

struct PanopticLabel {
  CategoryId semantic = 0;
  InstanceId instance = kNoInstance;

  friend auto operator<=>(const PanopticLabel&, const PanopticLabel&) = default;
};

}  // namespace panrec
