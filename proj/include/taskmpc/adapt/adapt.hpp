#pragma once

#include "taskmpc/llm/pipeline.hpp"
#include "taskmpc/plan.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace taskmpc::adapt {

// ---------------------------------------------------------------------------
// Bi-level parameter adaptation. The outer loop asks the reasoning backend for
// corrections (parameter reseeds or plan rewrites) based on execution
// feedback; the inner loop refines the pooled parameter vector theta with
// finite-difference SGD on the expected evaluation metric. The loop stops when
// the gradient norm drops to stop_epsilon, or flags non-convergence after
// max_outer outer steps.
// ---------------------------------------------------------------------------

enum class Variant { Full, SgdOnly, LlmOnly };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct LearningSchedule {
  double eta0 = 2.5;           // initial learning rate
  double gamma = 0.03;         // exponential decay factor
  int inner_epochs = 6;        // SGD updates per outer step
  double fd_epsilon = 1e-3;    // finite-difference probe half-width
  double stop_epsilon = 1e-2;  // gradient-norm stopping threshold
  int max_outer = 10;
  int rollouts_per_eval = 8;  // seeds averaged per loss estimate
  uint64_t base_seed = 0;
  // Whether the decay exponent n counts inner steps across the whole run
  // (true) or restarts at every outer step (false).
  bool global_step_index = true;
};

// Throws Error on an unusable schedule.
void validate_schedule(const LearningSchedule& schedule);

// One evaluation rollout of a plan under a world seed: the metric value (an
// error-style quantity, lower is better, always finite — a plan that runs out
// of steps scores the metric at episode end rather than failing), plus the
// execution record used for feedback.
struct EvalOutcome {
  double loss = 0.0;
  Trajectory trajectory;
  double worst_margin = std::numeric_limits<double>::infinity();
  bool plan_completed = true;
};

// Case-specific evaluator supplied by the caller; must be deterministic in
// (plan, seed).
using RolloutFn = std::function<EvalOutcome(const TaskPlan& plan, uint64_t seed)>;

// Scalar loss as a function of the pooled parameters, with seeds held fixed
// by the caller (common random numbers across finite-difference probes).
using LossFn = std::function<double(const ParamVector& theta)>;

struct LossEstimate {
  double value = 0.0;
  double std_error = 0.0;
  int rollout_count = 0;
  std::vector<uint64_t> seeds;
  EvalOutcome representative;  // outcome under the first seed
};

// Mean metric over rollouts_per_eval seeds (base_seed + k). Deterministic
// given (plan, schedule); throws Error if any rollout reports a non-finite
// loss.
LossEstimate expected_loss(const RolloutFn& rollout, const TaskPlan& plan,
                           const LearningSchedule& schedule);

// Central finite differences over every pooled parameter: probes are clipped
// to the parameter's box and divided by the span they actually achieved; a
// pinned parameter (lower == upper) gets a zero entry.
Eigen::VectorXd finite_diff_grad(const LossFn& loss, const ParamVector& theta, double fd_epsilon);

// One point of the learning curve. Rows with inner_step == -1 are outer-step
// evaluations (the loss/gradient measured before any correction); rows with
// inner_step >= 0 snapshot theta after that SGD update.
struct AdaptationRecord {
  int outer_step = 0;
  int inner_step = -1;
  int global_n = 0;  // decay exponent in effect
  Eigen::VectorXd theta;
  double loss = 0.0;
  double grad_norm = 0.0;
  double eta = 0.0;             // eta0 * exp(-gamma * global_n), exactly
  std::string correction_text;  // outer rows only, when a correction ran
  std::string warning;          // e.g. a rejected plan rewrite
  int evals_so_far = 0;         // loss estimates spent when this row was made
  double wall_ms = 0.0;         // not exported; result files stay time-free
};

struct InnerLoopResult {
  ParamVector theta;
  std::vector<AdaptationRecord> records;  // one per update
};

// inner_epochs updates theta <- clip(theta - eta * grad), eta indexed by the
// global step counter starting at n0. `eval_counter`, when given, is
// snapshotted into each record (the caller's loss closure increments it).
InnerLoopResult sgd_inner_loop(const ParamVector& theta0, const LossFn& loss,
                               const LearningSchedule& schedule, int n0, int outer_step,
                               const int* eval_counter = nullptr);

// Everything run_framework needs to talk to the reasoning backend and score
// rollouts. `scene` and `solution` may be empty when the case has no
// perception stage.
struct FrameworkSetup {
  llm::Backend* backend = nullptr;
  std::string scenario;
  std::string instruction;
  std::string scene;
  llm::RiskHandlingSolution solution;
  RolloutFn rollout;
};

// Feedback for the correction role: the metric value, per-subtask outcomes,
// every violated constraint's worst margin, and the trajectory tail.
llm::FeedbackText render_adaptation_feedback(const TaskPlan& plan, const EvalOutcome& evaluation,
                                             const LossEstimate& loss);

struct OuterCorrectionResult {
  TaskPlan plan;
  ParamVector theta;
  llm::CorrectionCommand command;
  bool plan_rewritten = false;
  std::string warning;  // nonempty when a rewrite or seed was rejected
};

// One outer-loop correction: renders feedback, obtains a command, and applies
// it. A no-change command leaves everything untouched; explicit theta seeds
// are written into the pooled vector (clipped to their boxes); a command
// targeting subtasks regenerates the plan through the coder, falling back to
// the previous plan (with a warning) when the rewrite does not validate.
OuterCorrectionResult outer_correction(const FrameworkSetup& setup, const TaskPlan& plan,
                                       const ParamVector& theta, const EvalOutcome& evaluation,
                                       const LossEstimate& loss, int outer_step);

struct FrameworkResult {
  Variant variant = Variant::Full;
  TaskPlan plan;      // best-evaluated plan
  ParamVector theta;  // best-evaluated pooled parameters
  double loss = std::numeric_limits<double>::infinity();
  bool converged = false;        // gradient stop fired
  bool non_convergence = false;  // max_outer exhausted without the stop
  int total_evals = 0;           // loss estimates spent
  std::vector<AdaptationRecord> records;
};

// The full loop. Full alternates corrections and SGD; SgdOnly never asks for
// corrections; LlmOnly skips the SGD refinement (corrections only). The
// returned plan/theta/loss are the best evaluated point.
FrameworkResult run_framework(const FrameworkSetup& setup, const LearningSchedule& schedule,
                              Variant variant);

// Learning-curve export with columns
//   outer_step,inner_step,global_n,theta_<name>...,loss,grad_norm,eta
// (one theta column per pooled parameter). Requires every record to have the
// same parameter layout.
void write_learning_curve_csv(const std::string& path,
                              const std::vector<AdaptationRecord>& records,
                              const std::vector<std::string>& theta_names);

}  // namespace taskmpc::adapt
