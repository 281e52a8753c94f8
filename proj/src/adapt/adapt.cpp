#include "taskmpc/adapt/adapt.hpp"

#include "taskmpc/util/format.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace taskmpc::adapt {

namespace {

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

std::string constraint_label(const ConstraintSpec& c) {
  switch (c.kind) {
    case ConstraintKind::ForceLimit:
      return "ForceLimit(" + c.threshold_ref + ")";
    case ConstraintKind::MinDistance:
      return "MinDistance(" + c.object_id + ", " + c.threshold_ref + ")";
    case ConstraintKind::SpeedLimit:
      return "SpeedLimit(" + c.threshold_ref + ")";
  }
  return "Constraint";
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Full:
      return "full";
    case Variant::SgdOnly:
      return "sgd_only";
    case Variant::LlmOnly:
      return "llm_only";
  }
  throw Error("to_string: unknown variant");
}

Variant variant_from_string(const std::string& s) {
  if (s == "full") return Variant::Full;
  if (s == "sgd_only") return Variant::SgdOnly;
  if (s == "llm_only") return Variant::LlmOnly;
  throw Error("unknown variant '" + s + "' (expected full, sgd_only or llm_only)");
}

void validate_schedule(const LearningSchedule& s) {
  if (!(s.eta0 > 0.0)) throw Error("learning schedule: eta0 must be positive");
  if (!(s.gamma >= 0.0)) throw Error("learning schedule: gamma must be non-negative");
  if (s.inner_epochs < 1) throw Error("learning schedule: inner_epochs must be at least 1");
  if (!(s.fd_epsilon > 0.0)) throw Error("learning schedule: fd_epsilon must be positive");
  if (!(s.stop_epsilon > 0.0)) throw Error("learning schedule: stop_epsilon must be positive");
  if (s.max_outer < 1) throw Error("learning schedule: max_outer must be at least 1");
  if (s.rollouts_per_eval < 1) throw Error("learning schedule: rollouts_per_eval must be at least 1");
}

LossEstimate expected_loss(const RolloutFn& rollout, const TaskPlan& plan,
                           const LearningSchedule& schedule) {
  validate_schedule(schedule);
  if (!rollout) throw Error("expected_loss: no rollout function");

  LossEstimate est;
  est.rollout_count = schedule.rollouts_per_eval;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int k = 0; k < schedule.rollouts_per_eval; ++k) {
    const uint64_t seed = schedule.base_seed + static_cast<uint64_t>(k);
    EvalOutcome out = rollout(plan, seed);
    if (!std::isfinite(out.loss))
      throw Error("expected_loss: rollout under seed " + std::to_string(seed) +
                  " produced a non-finite loss");
    est.seeds.push_back(seed);
    sum += out.loss;
    sum_sq += out.loss * out.loss;
    if (k == 0) est.representative = std::move(out);
  }
  const double n = static_cast<double>(schedule.rollouts_per_eval);
  est.value = sum / n;
  if (schedule.rollouts_per_eval > 1) {
    const double var = std::max(0.0, (sum_sq - n * est.value * est.value) / (n - 1.0));
    est.std_error = std::sqrt(var / n);
  }
  return est;
}

Eigen::VectorXd finite_diff_grad(const LossFn& loss, const ParamVector& theta, double fd_epsilon) {
  if (!loss) throw Error("finite_diff_grad: no loss function");
  if (!(fd_epsilon > 0.0)) throw Error("finite_diff_grad: fd_epsilon must be positive");

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta.size());
  for (int j = 0; j < theta.size(); ++j) {
    const Param& p = theta[j];
    const double up = std::min(p.value + fd_epsilon, p.upper);
    const double dn = std::max(p.value - fd_epsilon, p.lower);
    if (!(up > dn)) continue;  // pinned parameter: nothing to probe
    ParamVector probe = theta;
    probe.set_value(p.name, up);
    const double loss_up = loss(probe);
    probe.set_value(p.name, dn);
    const double loss_dn = loss(probe);
    grad[j] = (loss_up - loss_dn) / (up - dn);
  }
  return grad;
}

InnerLoopResult sgd_inner_loop(const ParamVector& theta0, const LossFn& loss,
                               const LearningSchedule& schedule, int n0, int outer_step,
                               const int* eval_counter) {
  validate_schedule(schedule);
  if (!loss) throw Error("sgd_inner_loop: no loss function");
  if (n0 < 0) throw Error("sgd_inner_loop: negative step counter");

  InnerLoopResult out;
  out.theta = theta0;
  for (int i = 0; i < schedule.inner_epochs; ++i) {
    const double t0 = now_ms();
    const int n = n0 + i;
    const double eta = schedule.eta0 * std::exp(-schedule.gamma * static_cast<double>(n));
    const Eigen::VectorXd grad = finite_diff_grad(loss, out.theta, schedule.fd_epsilon);
    out.theta.set_values(out.theta.values() - eta * grad);
    out.theta.clip();

    AdaptationRecord rec;
    rec.outer_step = outer_step;
    rec.inner_step = i;
    rec.global_n = n;
    rec.theta = out.theta.values();
    rec.loss = loss(out.theta);
    rec.grad_norm = grad.norm();
    rec.eta = eta;
    rec.evals_so_far = eval_counter ? *eval_counter : 0;
    rec.wall_ms = now_ms() - t0;
    out.records.push_back(std::move(rec));
  }
  return out;
}

llm::FeedbackText render_adaptation_feedback(const TaskPlan& plan, const EvalOutcome& evaluation,
                                             const LossEstimate& loss) {
  const Trajectory& traj = evaluation.trajectory;
  std::ostringstream os;
  os << "Evaluation metric: " << fmt_double(loss.value) << " (mean over " << loss.rollout_count
     << " rollouts, std error " << fmt_double(loss.std_error) << ").\n";
  os << "Task " << (evaluation.plan_completed ? "completed" : "did not complete") << " within "
     << traj.subtask_boundaries.size() << " of " << plan.subtasks.size()
     << " planned subtasks.\n";

  // Worst margin per constraint, measured on the representative rollout.
  std::vector<std::string> violated;
  for (const SubtaskBoundary& b : traj.subtask_boundaries) {
    const SubtaskSpec* spec = nullptr;
    for (const SubtaskSpec& s : plan.subtasks)
      if (s.index == b.index) spec = &s;
    if (spec == nullptr || spec->constraints.empty()) continue;
    Eigen::VectorXd worst =
        Eigen::VectorXd::Constant(static_cast<int>(spec->constraints.size()),
                                  std::numeric_limits<double>::infinity());
    for (int t = b.start; t < b.end; ++t) {
      const Eigen::VectorXd m =
          eval_constraints(spec->constraints, spec->params, traj.states.at(t + 1),
                           traj.controls.at(t), traj.step_obs.at(t));
      worst = worst.cwiseMin(m);
    }
    for (int k = 0; k < worst.size(); ++k) {
      if (worst[k] < 0.0)
        violated.push_back("subtask " + std::to_string(spec->index) + " " +
                           constraint_label(spec->constraints[static_cast<size_t>(k)]) +
                           " worst margin " + fmt_double(worst[k]));
    }
    if (!b.success)
      violated.push_back("subtask " + std::to_string(b.index) +
                         " ended unsuccessfully after " + std::to_string(b.end - b.start) +
                         " steps");
  }
  if (violated.empty()) {
    os << "No constraint violations observed.\n";
  } else {
    os << "Violations:\n";
    for (const std::string& v : violated) os << "  " << v << "\n";
  }

  if (!traj.states.empty()) {
    os << "Final state: [";
    const State& x = traj.states.back();
    for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << fmt_double(x[i]);
    os << "]\n";
  }
  return llm::FeedbackText{os.str()};
}

OuterCorrectionResult outer_correction(const FrameworkSetup& setup, const TaskPlan& plan,
                                       const ParamVector& theta, const EvalOutcome& evaluation,
                                       const LossEstimate& loss, int outer_step) {
  if (setup.backend == nullptr) throw Error("outer_correction: no backend");

  OuterCorrectionResult out;
  out.plan = plan;
  out.theta = theta;

  const llm::FeedbackText feedback = render_adaptation_feedback(plan, evaluation, loss);
  const std::string context = "outer_step=" + std::to_string(outer_step);
  out.command = llm::request_correction(*setup.backend, setup.scenario, context, feedback);
  if (out.command.no_change) return out;

  // A command that names subtasks asks for a structural rewrite through the
  // coder; otherwise the correction is a parameter reseed on the current plan.
  if (!out.command.target_subtasks.empty()) {
    try {
      ValidatedPlan rewritten =
          llm::generate_plan(*setup.backend, setup.scenario, setup.instruction, setup.scene,
                             setup.solution, out.command.text);
      out.plan = rewritten.plan();
      out.theta = pool_params(out.plan);
      out.plan_rewritten = true;
    } catch (const ParseError& e) {
      out.warning = std::string("correction rewrite rejected: ") + e.what();
    } catch (const PlanValidationError& e) {
      out.warning = std::string("correction rewrite rejected: ") + e.what();
    }
  }

  for (const auto& [name, value] : out.command.theta_seeds) {
    if (!out.theta.contains(name)) {
      if (!out.warning.empty()) out.warning += "; ";
      out.warning += "correction seeds unknown parameter '" + name + "'";
      continue;
    }
    out.theta.set_value(name, value);
  }
  out.theta.clip();
  out.plan = scatter_params(out.plan, out.theta);
  return out;
}

FrameworkResult run_framework(const FrameworkSetup& setup, const LearningSchedule& schedule,
                              Variant variant) {
  validate_schedule(schedule);
  if (setup.backend == nullptr) throw Error("run_framework: no backend");
  if (!setup.rollout) throw Error("run_framework: no rollout function");

  FrameworkResult out;
  out.variant = variant;

  TaskPlan plan =
      llm::generate_plan(*setup.backend, setup.scenario, setup.instruction, setup.scene,
                         setup.solution)
          .plan();
  ParamVector theta = pool_params(plan);

  int evals = 0;
  const auto loss_at = [&](const ParamVector& th) -> double {
    ++evals;
    return expected_loss(setup.rollout, scatter_params(plan, th), schedule).value;
  };

  const auto consider_best = [&](const ParamVector& th, double loss_value) {
    if (loss_value < out.loss) {
      out.loss = loss_value;
      out.theta = th;
      out.plan = scatter_params(plan, th);
    }
  };

  int global_n = 0;
  for (int outer = 0; outer < schedule.max_outer; ++outer) {
    const double t0 = now_ms();
    LossEstimate est = expected_loss(setup.rollout, plan, schedule);
    ++evals;
    const Eigen::VectorXd grad = finite_diff_grad(loss_at, theta, schedule.fd_epsilon);

    AdaptationRecord rec;
    rec.outer_step = outer;
    rec.inner_step = -1;
    rec.global_n = global_n;
    rec.theta = theta.values();
    rec.loss = est.value;
    rec.grad_norm = grad.norm();
    rec.eta = schedule.eta0 * std::exp(-schedule.gamma * static_cast<double>(global_n));
    rec.evals_so_far = evals;
    rec.wall_ms = now_ms() - t0;
    out.records.push_back(rec);
    consider_best(theta, est.value);

    if (grad.norm() <= schedule.stop_epsilon) {
      out.converged = true;
      break;
    }

    if (variant != Variant::SgdOnly) {
      OuterCorrectionResult corr = outer_correction(setup, plan, theta, est.representative,
                                                    est, outer);
      plan = corr.plan;
      theta = corr.theta;
      out.records.back().correction_text = corr.command.no_change ? "no_change" : corr.command.text;
      out.records.back().warning = corr.warning;
      if (corr.plan_rewritten && theta.size() != out.records.back().theta.size())
        out.records.clear();  // layout changed; earlier curve points are not comparable
    }

    if (variant != Variant::LlmOnly) {
      InnerLoopResult inner = sgd_inner_loop(theta, loss_at, schedule, global_n, outer, &evals);
      theta = inner.theta;
      plan = scatter_params(plan, theta);
      global_n += schedule.inner_epochs;
      for (const AdaptationRecord& r : inner.records) {
        ParamVector th = theta;
        th.set_values(r.theta);
        consider_best(th, r.loss);
        out.records.push_back(r);
      }
    }
  }

  out.non_convergence = !out.converged;
  out.total_evals = evals;
  if (!std::isfinite(out.loss)) {
    // No evaluation happened (cannot occur with max_outer >= 1), but keep the
    // result well-formed.
    out.theta = theta;
    out.plan = plan;
  }
  return out;
}

void write_learning_curve_csv(const std::string& path,
                              const std::vector<AdaptationRecord>& records,
                              const std::vector<std::string>& theta_names) {
  for (const AdaptationRecord& r : records) {
    if (r.theta.size() != static_cast<int>(theta_names.size()))
      throw Error("learning curve export requires a fixed parameter layout");
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  os << "outer_step,inner_step,global_n";
  for (const std::string& name : theta_names) os << ",theta_" << name;
  os << ",loss,grad_norm,eta\n";
  for (const AdaptationRecord& r : records) {
    os << r.outer_step << "," << r.inner_step << "," << r.global_n;
    for (int i = 0; i < r.theta.size(); ++i) os << "," << fmt_double(r.theta[i]);
    os << "," << fmt_double(r.loss) << "," << fmt_double(r.grad_norm) << ","
       << fmt_double(r.eta) << "\n";
  }
  if (!os) throw Error("failed writing '" + path + "'");
}

}  // namespace taskmpc::adapt
