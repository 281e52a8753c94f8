#include "taskmpc/envs/vehicle.hpp"

#include "taskmpc/util/format.hpp"
#include "taskmpc/util/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace taskmpc::envs {

std::string to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::SchoolBus: return "SchoolBus";
    case ObjectClass::Child: return "Child";
    case ObjectClass::Teenager: return "Teenager";
    case ObjectClass::Adult: return "Adult";
  }
  throw Error("unknown object class");
}

ObjectClass object_class_from_string(const std::string& s) {
  if (s == "SchoolBus") return ObjectClass::SchoolBus;
  if (s == "Child") return ObjectClass::Child;
  if (s == "Teenager") return ObjectClass::Teenager;
  if (s == "Adult") return ObjectClass::Adult;
  throw Error("unknown object class: " + s);
}

double entry_probability(ObjectClass c) {
  switch (c) {
    case ObjectClass::Child:
    case ObjectClass::Teenager:
      return 0.5;
    case ObjectClass::SchoolBus:
    case ObjectClass::Adult:
      return 0.0;
  }
  throw Error("unknown object class");
}

bool is_visible(ObjectClass c) { return c != ObjectClass::Child; }

std::vector<SceneObject> sample_latent_events(const VehicleScenario& scenario, uint64_t seed) {
  std::vector<SceneObject> out = scenario.objects;
  for (SceneObject& o : out) {
    // Independent substream per object, keyed by id so list order is
    // irrelevant.
    Rng rng(seed ^ fnv1a(o.id));
    LatentEntry entry;
    entry.enters = rng.bernoulli(entry_probability(o.cls));
    entry.entry_time =
        entry.enters ? rng.uniform_int(scenario.entry_window_lo, scenario.entry_window_hi) : 0;
    o.latent_entry = entry;
  }
  return out;
}

SceneDescription observe_scene(const VehicleScenario& scenario) {
  std::ostringstream os;
  os << "The roadway ahead is a single straight lane. The target location is "
     << fmt_double(scenario.target_position) << " m ahead.";
  std::vector<SceneObject> sorted = scenario.objects;
  std::sort(sorted.begin(), sorted.end(),
            [](const SceneObject& a, const SceneObject& b) { return a.id < b.id; });
  for (const SceneObject& o : sorted) {
    if (!is_visible(o.cls)) continue;
    switch (o.cls) {
      case ObjectClass::SchoolBus:
        os << " A school bus is stopped on the right shoulder at the " << fmt_double(o.station)
           << " m mark with its hazard lights flashing.";
        break;
      case ObjectClass::Teenager:
        os << " A group of teenagers is walking along the roadside near the "
           << fmt_double(o.station) << " m mark.";
        break;
      case ObjectClass::Adult:
        os << " There are adults walking along the road near the " << fmt_double(o.station)
           << " m mark.";
        break;
      case ObjectClass::Child:
        break;  // hidden
    }
  }
  return {os.str()};
}

State step_vehicle(const State& x, double u, double mass, double drag, double dt) {
  if (x.size() != 2) throw DimensionMismatch("step_vehicle: state must have size 2");
  State next(2);
  next[0] = x[0] + dt * x[1];
  next[1] = std::max(0.0, x[1] + dt * (u - drag) / mass);
  return next;
}

VehicleWorld VehicleWorld::make(const VehicleScenario& scenario, uint64_t seed) {
  VehicleWorld w;
  w.x << scenario.start_position, scenario.start_velocity;
  w.mass = scenario.mass;
  w.drag = scenario.drag;
  w.force_bound = scenario.force_bound;
  w.dt = scenario.dt;
  w.crossing_steps = scenario.crossing_steps;
  w.objects = sample_latent_events(scenario, seed);
  return w;
}

bool VehicleWorld::present_at(const SceneObject& o, int t) const {
  if (!o.latent_entry || !o.latent_entry->enters) return false;
  return t >= o.latent_entry->entry_time && t < o.latent_entry->entry_time + crossing_steps;
}

VehicleWorld::StepOut VehicleWorld::step(const Control& u) const {
  if (u.size() != 1) throw DimensionMismatch("VehicleWorld::step: control must have size 1");
  const double uc = std::clamp(u[0], -force_bound, force_bound);

  VehicleWorld next = *this;
  next.x = step_vehicle(x, uc, mass, drag, dt);
  next.step_index = step_index + 1;

  Observables obs;
  for (const SceneObject& o : objects) {
    obs.known_objects.push_back(o.id);
    if (next.present_at(o, next.step_index))
      obs.distances[o.id] = std::abs(next.x[0] - o.station);
  }
  return {next, obs};
}

VehicleWorld VehicleWorld::planning_view() const {
  VehicleWorld view = *this;
  for (SceneObject& o : view.objects) {
    LatentEntry frozen;
    if (present_at(o, step_index)) {
      // Observed on the path right now; assume it stays until further notice.
      frozen.enters = true;
      frozen.entry_time = 0;
    } else {
      frozen.enters = false;
    }
    o.latent_entry = frozen;
  }
  // An "entered" frozen object must stay present throughout any rollout.
  view.crossing_steps = std::numeric_limits<int>::max() / 2;
  return view;
}

double min_distance(const Trajectory& traj, const std::string& object_id,
                    const std::vector<SceneObject>& objects) {
  bool known = false;
  for (const auto& o : objects) known = known || o.id == object_id;
  if (!known) throw MissingObservable("min_distance: unknown object '" + object_id + "'");

  double best = std::numeric_limits<double>::infinity();
  for (const Observables& obs : traj.step_obs) {
    auto it = obs.distances.find(object_id);
    if (it != obs.distances.end()) best = std::min(best, it->second);
  }
  return best;
}

int time_to_travel(const Trajectory& traj, double target, double tol, int episode_steps) {
  for (size_t t = 0; t < traj.states.size(); ++t) {
    if (std::abs(traj.states[t][0] - target) <= tol) return static_cast<int>(t);
  }
  return episode_steps;
}

}  // namespace taskmpc::envs
