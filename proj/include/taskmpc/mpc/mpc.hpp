#pragma once

#include "taskmpc/llm/messages.hpp"
#include "taskmpc/plan.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace taskmpc::mpc {

// ---------------------------------------------------------------------------
// Finite-horizon constrained control.
//
// A solve maximizes the predicted reward sum subject to every constraint
// margin staying nonnegative along the rollout. PenaltyShooting runs projected
// gradient ascent on the exterior-penalty objective
//
//   J_w(U) = sum_t R(x_{t+1}, u_t) - w * sum_{t,k} max(0, -Phi_k(t))^2
//
// over a continuation ladder of weights w (each stage multiplies the weight by
// penalty_growth), with control gradients from central finite differences and
// iterates clipped to the control box. GridSearchOracle enumerates a uniform
// control grid exhaustively and exists to bound the shooting solver's error in
// tests; it is only practical for short horizons.
//
// Rewards and margins are evaluated post-step, i.e. at (x_{t+1}, u_t) with the
// observables produced by that transition. Predictions roll the world's
// planning_view(), never the world itself, so latent information the
// controller should not have stays hidden.
// ---------------------------------------------------------------------------

enum class SolverKind { PenaltyShooting, GridSearchOracle };

struct MpcConfig {
  int horizon = 5;
  Eigen::VectorXd control_lo = -Eigen::VectorXd::Ones(1);
  Eigen::VectorXd control_hi = Eigen::VectorXd::Ones(1);
  SolverKind solver = SolverKind::PenaltyShooting;
  double penalty_weight = 1e3;   // first continuation stage
  double penalty_growth = 100.0; // weight multiplier per stage
  int penalty_stages = 4;
  int iterations = 200;          // ascent iteration cap per stage
  double constraint_tolerance = 1e-6;
  int grid_points = 11;          // GridSearchOracle resolution per step
};

// Throws taskmpc::Error on an unusable configuration.
void validate_config(const MpcConfig& cfg);

struct SolveResult {
  std::vector<Control> controls;  // length = horizon
  double objective = 0.0;         // predicted reward sum (no penalty terms)
  double worst_margin = std::numeric_limits<double>::infinity();
  bool feasible = true;  // worst predicted margin >= -constraint_tolerance
};

struct SubtaskOutcome {
  int index = 0;
  bool success = false;
  int realized_window = 0;  // steps actually spent (omega')
  Trajectory slice;         // states incl. the start state, controls, observables
  // Minimum realized margin over the slice; +inf when nothing constrained.
  double worst_margin = std::numeric_limits<double>::infinity();
  // False when any receding-horizon solve failed to find a feasible sequence.
  bool solver_always_feasible = true;
};

struct PlanRunResult {
  Trajectory trajectory;  // all subtask slices stitched together
  std::vector<SubtaskOutcome> outcomes;
  bool whole_task_done = false;
  // Present when a mid-run correction spliced the remaining subtasks.
  std::optional<TaskPlan> corrected_plan;
};

// Invoked on subtask failure when mid-run correction is enabled; returns the
// replacement plan (validated by run_plan before adoption) or nullopt to keep
// the current one.
using CorrectionHook = std::function<std::optional<TaskPlan>(
    const TaskPlan& current, int failed_subtask, const llm::FeedbackText& feedback)>;

// Rendered on subtask failure: the recent state/control history, the final
// constraint margins, and the terminal residual.
llm::FeedbackText render_subtask_feedback(const SubtaskSpec& spec, const SubtaskOutcome& outcome);

namespace detail {

struct RolloutScore {
  double reward = 0.0;
  double violation_sq = 0.0;  // sum of squared margin violations
  double min_margin = std::numeric_limits<double>::infinity();
};

template <class World>
RolloutScore score_rollout(const SubtaskSpec& spec, World w, const std::vector<Control>& seq) {
  RolloutScore r;
  for (const Control& u : seq) {
    auto out = w.step(u);
    const State xn = out.next.state();
    r.reward += eval_reward(spec.reward, spec.params, xn, u);
    if (!spec.constraints.empty()) {
      const Eigen::VectorXd m = eval_constraints(spec.constraints, spec.params, xn, u, out.obs);
      for (Eigen::Index k = 0; k < m.size(); ++k) {
        r.min_margin = std::min(r.min_margin, m[k]);
        if (m[k] < 0.0) r.violation_sq += m[k] * m[k];
      }
    }
    w = std::move(out.next);
  }
  return r;
}

inline double clip_to(double v, double lo, double hi) { return std::clamp(v, lo, hi); }

template <class World>
SolveResult solve_penalty_shooting(const SubtaskSpec& spec, const World& view,
                                   const MpcConfig& cfg) {
  const int tau = cfg.horizon;
  const int m = static_cast<int>(cfg.control_lo.size());

  std::vector<Control> U(static_cast<size_t>(tau), Control(m));
  for (auto& u : U)
    for (int j = 0; j < m; ++j) u[j] = clip_to(0.0, cfg.control_lo[j], cfg.control_hi[j]);

  const auto objective = [&](const std::vector<Control>& seq, double w) {
    const RolloutScore s = score_rollout(spec, view, seq);
    return s.reward - w * s.violation_sq;
  };

  std::vector<double> grad(static_cast<size_t>(tau * m), 0.0);
  double weight = cfg.penalty_weight;
  for (int stage = 0; stage < cfg.penalty_stages; ++stage, weight *= cfg.penalty_growth) {
    double alpha = 0.1;  // ascent step, in units of the control span
    double current = objective(U, weight);
    for (int iter = 0; iter < cfg.iterations; ++iter) {
      // Central differences over every control entry, probes clipped to the
      // box and divided by the span they actually achieved. A probe that
      // lands in a locally flat region (a stopped vehicle inside its static
      // drag dead zone reacts to no small control change) escalates to wider
      // spans before the stage is declared converged.
      double grad_norm = 0.0;
      for (const double scale : {1e-5, 1e-3, 1e-1}) {
        grad_norm = 0.0;
        for (int t = 0; t < tau; ++t) {
          for (int j = 0; j < m; ++j) {
            const double lo = cfg.control_lo[j], hi = cfg.control_hi[j];
            const double eps = scale * (hi - lo);
            const double base = U[static_cast<size_t>(t)][j];
            const double up = clip_to(base + eps, lo, hi);
            const double dn = clip_to(base - eps, lo, hi);
            double g = 0.0;
            if (up > dn) {
              auto& slot = U[static_cast<size_t>(t)][j];
              slot = up;
              const double j_up = objective(U, weight);
              slot = dn;
              const double j_dn = objective(U, weight);
              slot = base;
              g = (j_up - j_dn) / (up - dn);
            }
            grad[static_cast<size_t>(t * m + j)] = g;
            grad_norm += g * g;
          }
        }
        grad_norm = std::sqrt(grad_norm);
        if (grad_norm >= 1e-14) break;
      }
      if (grad_norm < 1e-14) break;

      // Normalized ascent with backtracking on the step length.
      bool accepted = false;
      while (alpha > 1e-10) {
        std::vector<Control> cand = U;
        for (int t = 0; t < tau; ++t) {
          for (int j = 0; j < m; ++j) {
            const double lo = cfg.control_lo[j], hi = cfg.control_hi[j];
            const double delta =
                alpha * (hi - lo) * grad[static_cast<size_t>(t * m + j)] / grad_norm;
            cand[static_cast<size_t>(t)][j] =
                clip_to(U[static_cast<size_t>(t)][j] + delta, lo, hi);
          }
        }
        const double next = objective(cand, weight);
        if (next > current) {
          U = std::move(cand);
          current = next;
          alpha = std::min(alpha * 1.5, 0.5);
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) break;  // stage converged: no improving step exists
    }
  }

  const RolloutScore final_score = score_rollout(spec, view, U);
  SolveResult out;
  out.controls = std::move(U);
  out.objective = final_score.reward;
  out.worst_margin = final_score.min_margin;
  out.feasible = final_score.min_margin >= -cfg.constraint_tolerance;
  return out;
}

template <class World>
SolveResult solve_grid_oracle(const SubtaskSpec& spec, const World& view, const MpcConfig& cfg) {
  const int tau = cfg.horizon;
  if (cfg.control_lo.size() != 1)
    throw Error("GridSearchOracle supports scalar controls only");
  double total = 1.0;
  for (int t = 0; t < tau; ++t) total *= cfg.grid_points;
  if (total > 2e6)
    throw Error("GridSearchOracle: grid of " + std::to_string(static_cast<long long>(total)) +
                " sequences is too large; shorten the horizon or coarsen the grid");

  const double lo = cfg.control_lo[0], hi = cfg.control_hi[0];
  std::vector<double> grid(static_cast<size_t>(cfg.grid_points));
  for (int i = 0; i < cfg.grid_points; ++i)
    grid[static_cast<size_t>(i)] =
        cfg.grid_points == 1 ? lo : lo + (hi - lo) * i / (cfg.grid_points - 1);

  const double final_weight =
      cfg.penalty_weight * std::pow(cfg.penalty_growth, cfg.penalty_stages - 1);

  std::vector<int> idx(static_cast<size_t>(tau), 0);
  std::vector<Control> seq(static_cast<size_t>(tau), Control(1));
  SolveResult best;
  bool have_best = false;
  double best_key = -std::numeric_limits<double>::infinity();
  while (true) {
    for (int t = 0; t < tau; ++t) seq[static_cast<size_t>(t)][0] = grid[static_cast<size_t>(idx[static_cast<size_t>(t)])];
    const RolloutScore s = score_rollout(spec, view, seq);
    const bool feasible = s.min_margin >= -cfg.constraint_tolerance;
    // Feasible sequences are ranked by reward alone; infeasible ones fall
    // back to the penalty objective and never outrank a feasible one.
    const double key = feasible ? s.reward : -1e30 + (s.reward - final_weight * s.violation_sq);
    if (!have_best || key > best_key) {
      have_best = true;
      best_key = key;
      best.controls = seq;
      best.objective = s.reward;
      best.worst_margin = s.min_margin;
      best.feasible = feasible;
    }
    int t = 0;
    for (; t < tau; ++t) {
      if (++idx[static_cast<size_t>(t)] < cfg.grid_points) break;
      idx[static_cast<size_t>(t)] = 0;
    }
    if (t == tau) break;
  }
  return best;
}

}  // namespace detail

// Optimal control sequence for one subtask from the world's current state.
// Predictions run on world.planning_view().
template <class World>
SolveResult solve(const SubtaskSpec& spec, const World& world, const MpcConfig& cfg) {
  validate_config(cfg);
  const World view = world.planning_view();
  if (cfg.solver == SolverKind::GridSearchOracle)
    return detail::solve_grid_oracle(spec, view, cfg);
  return detail::solve_penalty_shooting(spec, view, cfg);
}

// Receding-horizon step: exactly the first entry of solve()'s sequence.
template <class World>
Control control_step(const SubtaskSpec& spec, const World& world, const MpcConfig& cfg) {
  return solve(spec, world, cfg).controls.front();
}

template <class World>
struct SubtaskRun {
  SubtaskOutcome outcome;
  World final_world;
  std::optional<llm::FeedbackText> feedback;  // present on failure
};

// Executes one subtask with receding-horizon control until its terminal
// condition holds or the declared window is exhausted. The terminal condition
// is checked before each step, so a condition that already holds costs zero
// steps, and WindowElapsed fires exactly when the budget is used up.
template <class World>
SubtaskRun<World> run_subtask(const World& env, const SubtaskSpec& spec, const MpcConfig& cfg) {
  SubtaskRun<World> run{SubtaskOutcome{}, env, std::nullopt};
  SubtaskOutcome& out = run.outcome;
  out.index = spec.index;
  out.slice.states.push_back(run.final_world.state());

  int elapsed = 0;
  while (true) {
    if (check_terminal(spec.terminal, run.final_world.state(), elapsed, spec.window,
                       &spec.params)) {
      out.success = true;
      break;
    }
    if (elapsed >= spec.window) {
      out.success = false;  // budget exhausted before the condition held
      break;
    }
    SolveResult sol = solve(spec, run.final_world, cfg);
    out.solver_always_feasible = out.solver_always_feasible && sol.feasible;
    const Control u = sol.controls.front();

    auto step_out = run.final_world.step(u);
    const State xn = step_out.next.state();
    if (!spec.constraints.empty()) {
      const Eigen::VectorXd margins =
          eval_constraints(spec.constraints, spec.params, xn, u, step_out.obs);
      out.worst_margin = std::min(out.worst_margin, margins.minCoeff());
    }
    out.slice.states.push_back(xn);
    out.slice.controls.push_back(u);
    out.slice.step_obs.push_back(step_out.obs);
    run.final_world = std::move(step_out.next);
    ++elapsed;
  }

  out.realized_window = elapsed;
  out.slice.subtask_boundaries.push_back(SubtaskBoundary{spec.index, 0, elapsed, out.success});
  if (!out.success) run.feedback = render_subtask_feedback(spec, out);
  return run;
}

namespace detail {

inline void append_slice(Trajectory& total, const SubtaskOutcome& out) {
  const int offset = total.length();
  if (total.states.empty()) total.states.push_back(out.slice.states.front());
  total.states.insert(total.states.end(), out.slice.states.begin() + 1, out.slice.states.end());
  total.controls.insert(total.controls.end(), out.slice.controls.begin(),
                        out.slice.controls.end());
  total.step_obs.insert(total.step_obs.end(), out.slice.step_obs.begin(),
                        out.slice.step_obs.end());
  total.subtask_boundaries.push_back(
      SubtaskBoundary{out.index, offset, offset + out.realized_window, out.success});
}

// Whole-task completion. A plan-level WindowElapsed condition means "every
// subtask completed successfully"; a tolerance condition is checked against
// the current state.
inline bool whole_task_done(const TerminalCondition& done, const State& x,
                            const std::vector<SubtaskOutcome>& outcomes, size_t subtask_count) {
  if (done.kind == TerminalKind::WindowElapsed) {
    if (outcomes.size() < subtask_count) return false;
    for (const auto& o : outcomes)
      if (!o.success) return false;
    return true;
  }
  return check_terminal(done, x, 0, 0, nullptr);
}

}  // namespace detail

// Executes the plan's subtasks in ascending order. On a subtask failure the
// optional correction hook may rewrite the not-yet-executed subtasks; the
// spliced plan is validated before adoption and rejected (with the previous
// plan retained) when invalid. The returned trajectory spans exactly the sum
// of realized windows.
template <class World>
PlanRunResult run_plan(const World& env, const ValidatedPlan& plan, const MpcConfig& cfg,
                       const CorrectionHook& correct = CorrectionHook{}) {
  PlanRunResult result;
  TaskPlan current = plan.plan();
  World world = env;

  for (size_t i = 0; i < current.subtasks.size(); ++i) {
    // A tolerance-style whole-task condition can complete the task early.
    if (current.whole_task_done.kind == TerminalKind::StateWithinTolerance &&
        detail::whole_task_done(current.whole_task_done, world.state(), result.outcomes,
                                current.subtasks.size()))
      break;

    SubtaskRun<World> run = run_subtask(world, current.subtasks[i], cfg);
    world = std::move(run.final_world);
    detail::append_slice(result.trajectory, run.outcome);
    result.outcomes.push_back(std::move(run.outcome));

    if (!result.outcomes.back().success && correct && run.feedback) {
      std::optional<TaskPlan> replacement =
          correct(current, current.subtasks[i].index, *run.feedback);
      if (replacement) {
        // Splice: keep the subtasks already executed, adopt the rest.
        TaskPlan spliced = current;
        spliced.subtasks.assign(current.subtasks.begin(),
                                current.subtasks.begin() + static_cast<long>(i) + 1);
        for (const SubtaskSpec& s : replacement->subtasks)
          if (s.index > current.subtasks[i].index) spliced.subtasks.push_back(s);
        spliced.whole_task_done = replacement->whole_task_done;
        spliced.source = PlanSource::Corrected;
        try {
          validate_plan(spliced);
          current = std::move(spliced);
          result.corrected_plan = current;
        } catch (const PlanValidationError&) {
          // Keep the previous plan; the failure is recorded in the outcome.
        }
      }
    }
  }

  result.whole_task_done = detail::whole_task_done(
      current.whole_task_done, world.state(), result.outcomes, current.subtasks.size());
  return result;
}

}  // namespace taskmpc::mpc
