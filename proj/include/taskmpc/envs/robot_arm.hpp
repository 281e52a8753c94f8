#pragma once

#include "taskmpc/types.hpp"

#include <utility>

namespace taskmpc::envs {

// 1-D velocity-commanded arm pushing a box along a rail.
//
// Arm transition (exact):   x(t+1) = [x1 + dt*u, u]
// Box, no contact:          F = 0, v' = max(0, v - mu*g*dt), pos += dt*v'
// Box, contact:             v' = u, pos rides the arm face,
//                           F = m*(u - v)/dt + Fs with Fs = mu*m*g
//
// Contact requires the arm face to overtake the free-rolling box by more than
// `contact_eps` while moving forward; the epsilon keeps the decision away from
// floating-point ties when the arm parks exactly at the face. The face can
// only push (u <= 0 never engages), so the box position is non-decreasing.
struct RobotArmWorld {
  // arm state
  double arm_pos = 0.0;
  double arm_vel = 0.0;
  // box state
  double box_pos = 1.0;
  double box_vel = 0.0;
  // constants
  double box_mass = 1.0;
  double friction_coeff = 0.2;
  double gravity = 9.81;
  double dt = 0.1;
  double control_bound = 1.0;
  double contact_eps = 1e-3;

  struct StepOut;  // defined below, once the world type is complete

  State state() const {
    State x(2);
    x << arm_pos, arm_vel;
    return x;
  }

  double sliding_friction() const { return friction_coeff * box_mass * gravity; }

  StepOut step(const Control& u) const;

  // The arm world is fully observed; prediction uses the true model.
  RobotArmWorld planning_view() const { return *this; }
};

struct RobotArmWorld::StepOut {
  RobotArmWorld next;
  Observables obs;
};

// Pure arm transition, exposed for direct use in tests and toy problems.
State step_robot_arm(const State& x, double u, double dt);

// Full world step including the box contact closure. Returns the next world
// and the contact force exerted during the step (0 when not in contact).
std::pair<RobotArmWorld, double> step_box(const RobotArmWorld& w, double u);

}  // namespace taskmpc::envs
