#include "taskmpc/envs/robot_arm.hpp"

#include <algorithm>
#include <cmath>

namespace taskmpc::envs {

State step_robot_arm(const State& x, double u, double dt) {
  if (x.size() != 2) throw DimensionMismatch("step_robot_arm: state must have size 2");
  State next(2);
  next << x[0] + dt * u, u;
  return next;
}

std::pair<RobotArmWorld, double> step_box(const RobotArmWorld& w, double u) {
  RobotArmWorld next = w;
  const double uc = std::clamp(u, -w.control_bound, w.control_bound);

  const double arm_next = w.arm_pos + w.dt * uc;
  next.arm_vel = uc;

  // Where the box would end up rolling freely under kinetic friction.
  const double v_free = std::max(0.0, w.box_vel - w.friction_coeff * w.gravity * w.dt);
  const double box_free_pos = w.box_pos + w.dt * v_free;

  double force = 0.0;
  const bool contact = uc > 0.0 && arm_next >= box_free_pos + w.contact_eps;
  if (contact) {
    force = w.box_mass * (uc - w.box_vel) / w.dt + w.sliding_friction();
    next.box_vel = uc;
    next.box_pos = arm_next;  // box rides the face
  } else {
    next.box_vel = v_free;
    next.box_pos = box_free_pos;
  }
  next.arm_pos = arm_next;
  return {next, force};
}

RobotArmWorld::StepOut RobotArmWorld::step(const Control& u) const {
  if (u.size() != 1) throw DimensionMismatch("RobotArmWorld::step: control must have size 1");
  auto [next, force] = step_box(*this, u[0]);
  Observables obs;
  obs.contact_force = force;
  obs.box_velocity = next.box_vel;
  return {next, obs};
}

}  // namespace taskmpc::envs
