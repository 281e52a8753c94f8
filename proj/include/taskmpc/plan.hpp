#pragma once

#include "taskmpc/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace taskmpc {

// ---------------------------------------------------------------------------
// Task-plan model
//
// A TaskPlan is an ordered list of subtasks. Each subtask carries a reward to
// maximize, zero or more inequality constraints (margin >= 0 means satisfied),
// a named parameter vector, a declared step budget (its window), and a
// terminal condition. Rewards, constraints and terminal conditions come from a
// closed template vocabulary; every parameter reference must resolve by name
// inside the owning subtask's ParamVector.
// ---------------------------------------------------------------------------

enum class RewardKind {
  // -scale * ||target - x[state_index]||^2
  QuadraticTracking,
  // -scale * ||target - x[1]||^2, i.e. tracking of the velocity component.
  VelocityTracking,
};

struct RewardSpec {
  RewardKind kind = RewardKind::QuadraticTracking;
  std::string target_ref;  // parameter name holding the tracked value
  int state_index = 0;     // used by QuadraticTracking
  double scale = 1.0;
};

enum class ConstraintKind {
  ForceLimit,   // margin = theta_f - |F|
  MinDistance,  // margin = distance(object_id) - theta_d
  SpeedLimit,   // margin = theta_s - |x[1]|
};

struct ConstraintSpec {
  ConstraintKind kind = ConstraintKind::ForceLimit;
  std::string threshold_ref;  // parameter name holding the threshold
  std::string object_id;      // MinDistance only
  bool latent = false;
  // Where a latent flag came from: "hint:<object>" when carried from a risk
  // handling solution, "file" for plans loaded from disk, "strategy:..." when
  // injected by a benchmark strategy. Empty for plain apparent-risk
  // constraints.
  std::string provenance;
};

enum class TerminalKind {
  // |x[state_index] - target| <= tol. The target is either a parameter
  // reference (subtask level) or a literal (whole-task level).
  StateWithinTolerance,
  // Subtask level: true once the elapsed step count reaches the declared
  // window. Whole-task level: true once every subtask has completed
  // successfully.
  WindowElapsed,
};

struct TerminalCondition {
  TerminalKind kind = TerminalKind::WindowElapsed;
  int state_index = 0;
  std::optional<std::string> target_ref;  // resolves in the owning subtask
  std::optional<double> target_literal;   // used when no ref is given
  double tol = 0.0;
};

struct SubtaskSpec {
  int index = 0;  // 1-based, contiguous within a plan
  RewardSpec reward;
  std::vector<ConstraintSpec> constraints;
  ParamVector params;
  int window = 0;  // declared step budget (omega)
  TerminalCondition terminal;
};

enum class PlanSource { LlmGenerated, Fixture, Corrected };

struct TaskPlan {
  std::vector<SubtaskSpec> subtasks;
  TerminalCondition whole_task_done;
  PlanSource source = PlanSource::Fixture;
  int corrected_at_step = 0;  // outer step of the last correction, if any
};

// Witness type: can only be produced by validate_plan().
class ValidatedPlan {
 public:
  const TaskPlan& plan() const { return plan_; }
  const SubtaskSpec& subtask(int i) const { return plan_.subtasks.at(static_cast<size_t>(i)); }
  int size() const { return static_cast<int>(plan_.subtasks.size()); }

 private:
  friend ValidatedPlan validate_plan(const TaskPlan&);
  explicit ValidatedPlan(TaskPlan p) : plan_(std::move(p)) {}
  TaskPlan plan_;
};

// Thrown by validate_plan; `violations` lists every problem found, not just
// the first one.
struct PlanValidationError : Error {
  explicit PlanValidationError(std::vector<std::string> v);
  std::vector<std::string> violations;
};

// Closed-loop execution record. `states` has one more entry than `controls`;
// `step_obs[t]` holds the measurements produced by the transition from
// states[t] to states[t+1].
struct SubtaskBoundary {
  int index = 0;    // subtask index
  int start = 0;    // first state index of the slice
  int end = 0;      // one past the last control of the slice (= start + realized window)
  bool success = false;
};

struct Trajectory {
  std::vector<State> states;
  std::vector<Control> controls;
  std::vector<Observables> step_obs;
  std::vector<SubtaskBoundary> subtask_boundaries;

  int length() const { return static_cast<int>(controls.size()); }
};

// --- Operations ------------------------------------------------------------

// Checks structural invariants: non-empty plan, contiguous 1-based indices,
// strictly positive windows, every parameter reference resolvable, bounds
// ordered and containing the value, latent MinDistance constraints carrying an
// object id. Returns a validation witness or throws PlanValidationError
// listing every violation.
ValidatedPlan validate_plan(const TaskPlan& plan);

// Reward value for one (state, control) sample. Higher is better; tracking
// templates are maximized at zero error.
double eval_reward(const RewardSpec& spec, const ParamVector& params, const State& x,
                   const Control& u);

// Margins for every constraint of a subtask, in declaration order.
// margin >= 0 means satisfied. MinDistance over an object that is currently
// absent yields kInactiveMargin; an object the world has never heard of
// throws MissingObservable, as does ForceLimit in a world without contact.
Eigen::VectorXd eval_constraints(const std::vector<ConstraintSpec>& specs,
                                 const ParamVector& params, const State& x, const Control& u,
                                 const Observables& obs);

// Terminal test for a subtask-level condition. `elapsed` is the number of
// steps spent in the subtask so far, `window` its declared budget. `params`
// resolves target references; pass nullptr for literal-only conditions.
bool check_terminal(const TerminalCondition& cond, const State& x, int elapsed, int window,
                    const ParamVector* params);

// Pools every subtask's parameters into one ParamVector with names qualified
// as "s<index>.<name>", ordered by qualified name.
ParamVector pool_params(const TaskPlan& plan);

// Writes pooled values back into a copy of the plan. Throws
// DimensionMismatch when the pooled vector does not match pool_params(plan)
// entry for entry.
TaskPlan scatter_params(const TaskPlan& plan, const ParamVector& pooled);

}  // namespace taskmpc
