#include "qdrive/motion.hpp"

#include <stdexcept>
#include <string>

namespace qdrive {

char motion_char(MotionAction m) {
  switch (m) {
    case MotionAction::Accelerate: return 'A';
    case MotionAction::Decelerate: return 'D';
    case MotionAction::DoNothing: return 'N';
    case MotionAction::ChangeLane: return 'L';
  }
  throw std::logic_error("motion_char: bad enum");
}

Kinematics apply_kinematics(int velocity, int accel, int v_max) {
  int v_next = velocity + accel;
  if (v_next < 0 || v_next > v_max) {
    throw std::invalid_argument("apply_kinematics: velocity " + std::to_string(v_next) +
                                " out of [0," + std::to_string(v_max) + "]");
  }
  // floor(a/2) with rounding toward minus infinity, so braking gives up the
  // cell immediately while accelerating only pays off next step.
  int half_floor = (accel >= 0) ? accel / 2 : (accel - 1) / 2;
  return Kinematics{velocity + half_floor, v_next};
}

std::vector<MotionAction> feasible_motion_actions(const EgoPose& pose, int v_max, int lanes) {
  std::vector<MotionAction> out;
  out.reserve(kNumMotionActions);
  if (pose.velocity < v_max) out.push_back(MotionAction::Accelerate);
  if (pose.velocity > 0) out.push_back(MotionAction::Decelerate);
  out.push_back(MotionAction::DoNothing);
  if (lanes > 1) out.push_back(MotionAction::ChangeLane);
  return out;
}

MotionOutcome resolve_motion(const GridWindow& window, const EgoPose& pose,
                             MotionAction action, int v_max) {
  const GridGeometry& g = window.geometry();
  int accel = 0;
  int target_lane = pose.lane;
  switch (action) {
    case MotionAction::Accelerate: accel = +1; break;
    case MotionAction::Decelerate: accel = -1; break;
    case MotionAction::DoNothing: accel = 0; break;
    case MotionAction::ChangeLane:
      if (g.lanes < 2) throw std::invalid_argument("resolve_motion: ChangeLane needs two lanes");
      target_lane = 1 - pose.lane;
      break;
  }
  Kinematics k = apply_kinematics(pose.velocity, accel, v_max);
  if (k.displacement > g.front_offset()) {
    throw std::invalid_argument("resolve_motion: displacement exceeds look-ahead window");
  }

  // Cells the ego sweeps through, all in the target lane.  A moving lane
  // change claims the diagonal path +1..+d; only a standing lane change
  // (d = 0) claims the cell directly alongside.
  bool collided = false;
  if (k.displacement == 0) {
    if (target_lane != pose.lane) {
      collided = window.at(target_lane, 0) == Occupancy::Occupied;
    }
  } else {
    for (int off = 1; off <= k.displacement; ++off) {
      if (window.at(target_lane, off) == Occupancy::Occupied) {
        collided = true;
        break;
      }
    }
  }

  if (collided) {
    // Emergency stop: the vehicle halts in its current cell.
    return MotionOutcome{EgoPose{0, pose.lane}, 0, true};
  }
  return MotionOutcome{EgoPose{k.velocity_next, target_lane}, k.displacement, false};
}

}  // namespace qdrive
