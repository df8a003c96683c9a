#pragma once

#include <cstdint>
#include <vector>

#include "qdrive/grid.hpp"

namespace qdrive {

enum class MotionAction : uint8_t { Accelerate = 0, Decelerate = 1, DoNothing = 2, ChangeLane = 3 };
constexpr int kNumMotionActions = 4;

char motion_char(MotionAction m);

struct EgoPose {
  int velocity = 0;  // cells per step, in [0, v_max]
  int lane = 0;      // 0-based

  bool operator==(const EgoPose&) const = default;
};

// Longitudinal kinematics for one step under acceleration a in {-1,0,+1}:
// the vehicle covers d = v + floor(a/2) cells (deceleration costs the cell
// budget up front, acceleration pays off only next step) and leaves with
// velocity v + a.  Always: 0 <= d and |v_next - v| <= 1.
struct Kinematics {
  int displacement = 0;
  int velocity_next = 0;
};

// Throws std::invalid_argument when v + a falls outside [0, v_max].
Kinematics apply_kinematics(int velocity, int accel, int v_max);

// Motion actions admissible at the given pose: Accelerate needs v < v_max,
// Decelerate needs v > 0, ChangeLane needs a second lane.  DoNothing is
// always admissible.  Order matches MotionAction's declaration order.
std::vector<MotionAction> feasible_motion_actions(const EgoPose& pose, int v_max, int lanes);

struct MotionOutcome {
  EgoPose pose;        // pose after the step
  int displacement = 0;
  bool collided = false;
};

// Resolves a motion action against ground truth.  The ego sweeps the target
// lane's cells at offsets +1..+d (for a pure lateral move, d = 0, the target
// cell at offset 0 instead); if any swept cell is occupied the step is a
// collision: the vehicle halts in place (d = 0, v = 0, lane unchanged) and
// the frame does not move.  Throws std::invalid_argument for infeasible
// actions (caller bug).
MotionOutcome resolve_motion(const GridWindow& window, const EgoPose& pose,
                             MotionAction action, int v_max);

}  // namespace qdrive
