#pragma once

#include "taskmpc/plan.hpp"
#include "taskmpc/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace taskmpc::envs {

enum class ObjectClass { SchoolBus, Child, Teenager, Adult };

std::string to_string(ObjectClass c);
ObjectClass object_class_from_string(const std::string& s);

// Whether this class can unexpectedly enter the vehicle's lane, and with what
// probability. Children (hidden behind a stopped bus) and teenagers may enter;
// school buses and adults never do.
double entry_probability(ObjectClass c);

// Whether the class is visible to the scene observer. Children hide behind
// the bus, everyone else is in plain sight.
bool is_visible(ObjectClass c);

struct LatentEntry {
  bool enters = false;
  int entry_time = 0;  // step index at which the object appears on the path
};

struct SceneObject {
  std::string id;
  ObjectClass cls = ObjectClass::Adult;
  double station = 0.0;         // longitudinal position along the road, m
  double lateral_offset = 0.0;  // descriptive only; the path model is 1-D
  std::optional<LatentEntry> latent_entry;
};

// Static description of one driving scenario.
struct VehicleScenario {
  std::string name;
  std::string instruction;
  double start_position = 0.0;
  double start_velocity = 0.0;
  double mass = 1500.0;
  double drag = 200.0;          // constant resistive force, N
  double force_bound = 5000.0;  // |u| bound, N
  double dt = 0.1;
  double target_position = 50.0;
  double target_tolerance = 0.5;
  int episode_steps = 600;
  int entry_window_lo = 0;  // inclusive step range for latent entries
  int entry_window_hi = 0;
  int crossing_steps = 30;  // how long an entered object stays on the path
  std::string risk_object;  // object id scored by the min-distance metric
  std::vector<SceneObject> objects;
};

// Draws the latent entry schedule for every object: Bernoulli entry with the
// class probability, entry time uniform over the scenario's window. Each
// object gets an independent substream derived from (seed, object id), so the
// draw is a pure function of its arguments.
std::vector<SceneObject> sample_latent_events(const VehicleScenario& scenario, uint64_t seed);

struct SceneDescription {
  std::string text;
};

// Renders what a camera would report: every visible object with its class and
// station, and the target location. Never reveals latent entry schedules or
// hidden objects.
SceneDescription observe_scene(const VehicleScenario& scenario);

// Longitudinal point-mass with constant drag:
//   x(t+1) = [x1 + dt*x2, max(0, x2 + dt*(u - F_r)/m)]
State step_vehicle(const State& x, double u, double mass, double drag, double dt);

// Closed-loop world. Presence of an entered object lasts `crossing_steps`
// steps from its entry time; distances to present objects are measured after
// each transition.
struct VehicleWorld {
  Eigen::Vector2d x{0.0, 0.0};
  double mass = 1500.0;
  double drag = 200.0;
  double force_bound = 5000.0;
  double dt = 0.1;
  int crossing_steps = 30;
  int step_index = 0;
  std::vector<SceneObject> objects;  // with realized latent_entry

  struct StepOut;  // defined below, once the world type is complete

  static VehicleWorld make(const VehicleScenario& scenario, uint64_t seed);

  State state() const { return x; }
  bool present_at(const SceneObject& o, int t) const;
  StepOut step(const Control& u) const;

  // Planner's model of the future: objects currently on the path are assumed
  // to stay there, objects not on the path are assumed never to enter. The
  // realized schedule is latent and must not leak into predictions.
  VehicleWorld planning_view() const;
};

struct VehicleWorld::StepOut {
  VehicleWorld next;
  Observables obs;
};

// Minimum |vehicle - station| over the steps where the object was on the
// path; +inf when it never entered.
double min_distance(const Trajectory& traj, const std::string& object_id,
                    const std::vector<SceneObject>& objects);

// First state index within `tol` of `target`, or `episode_steps` when the
// trajectory never gets there.
int time_to_travel(const Trajectory& traj, double target, double tol, int episode_steps);

}  // namespace taskmpc::envs
