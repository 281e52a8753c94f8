#include "taskmpc/plan.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace taskmpc {

// --- ParamVector -------------------------------------------------------------

void ParamVector::insert(Param p) {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), p.name,
                             [](const Param& a, const std::string& n) { return a.name < n; });
  if (it != entries_.end() && it->name == p.name) {
    *it = std::move(p);
  } else {
    entries_.insert(it, std::move(p));
  }
}

bool ParamVector::contains(const std::string& name) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), name,
                             [](const Param& a, const std::string& n) { return a.name < n; });
  return it != entries_.end() && it->name == name;
}

const Param& ParamVector::at(const std::string& name) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), name,
                             [](const Param& a, const std::string& n) { return a.name < n; });
  if (it == entries_.end() || it->name != name)
    throw UnresolvedParamRef("unresolved parameter reference: " + name);
  return *it;
}

void ParamVector::set_value(const std::string& name, double v) {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), name,
                             [](const Param& a, const std::string& n) { return a.name < n; });
  if (it == entries_.end() || it->name != name)
    throw UnresolvedParamRef("unresolved parameter reference: " + name);
  it->value = v;
}

Eigen::VectorXd ParamVector::values() const {
  Eigen::VectorXd v(size());
  for (int i = 0; i < size(); ++i) v[i] = entries_[static_cast<size_t>(i)].value;
  return v;
}

void ParamVector::set_values(const Eigen::VectorXd& v) {
  if (v.size() != size())
    throw DimensionMismatch("ParamVector::set_values: expected " + std::to_string(size()) +
                            " values, got " + std::to_string(v.size()));
  for (int i = 0; i < size(); ++i) entries_[static_cast<size_t>(i)].value = v[i];
}

ParamVector& ParamVector::clip() {
  for (auto& p : entries_) p.value = std::clamp(p.value, p.lower, p.upper);
  return *this;
}

bool ParamVector::operator==(const ParamVector& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (size_t i = 0; i < entries_.size(); ++i) {
    const Param& a = entries_[i];
    const Param& b = other.entries_[i];
    if (a.name != b.name || a.value != b.value || a.lower != b.lower || a.upper != b.upper)
      return false;
  }
  return true;
}

// --- Validation --------------------------------------------------------------

PlanValidationError::PlanValidationError(std::vector<std::string> v)
    : Error([&v] {
        std::ostringstream os;
        os << "invalid plan (" << v.size() << " violation" << (v.size() == 1 ? "" : "s") << "):";
        for (const auto& s : v) os << "\n  - " << s;
        return os.str();
      }()),
      violations(std::move(v)) {}

namespace {

void check_ref(const std::string& ref, const ParamVector& params, const std::string& where,
               std::vector<std::string>& out) {
  if (ref.empty()) {
    out.push_back(where + ": empty parameter reference");
  } else if (!params.contains(ref)) {
    out.push_back(where + ": parameter reference '" + ref + "' does not resolve");
  }
}

}  // namespace

ValidatedPlan validate_plan(const TaskPlan& plan) {
  std::vector<std::string> bad;
  if (plan.subtasks.empty()) bad.push_back("plan has no subtasks");

  for (size_t k = 0; k < plan.subtasks.size(); ++k) {
    const SubtaskSpec& s = plan.subtasks[k];
    const std::string where = "subtask " + std::to_string(s.index);
    if (s.index != static_cast<int>(k) + 1)
      bad.push_back("subtask at position " + std::to_string(k + 1) + " has index " +
                    std::to_string(s.index) + "; indices must be 1-based and contiguous");
    if (s.window <= 0) bad.push_back(where + ": window must be positive");

    for (const auto& p : s.params.entries()) {
      if (!(p.lower <= p.upper))
        bad.push_back(where + ": parameter '" + p.name + "' has lower > upper");
      if (p.value < p.lower || p.value > p.upper)
        bad.push_back(where + ": parameter '" + p.name + "' value outside [lower, upper]");
    }

    check_ref(s.reward.target_ref, s.params, where + " reward", bad);
    if (s.reward.state_index < 0) bad.push_back(where + " reward: negative state index");
    if (s.reward.scale < 0.0) bad.push_back(where + " reward: negative scale");

    for (size_t c = 0; c < s.constraints.size(); ++c) {
      const ConstraintSpec& cs = s.constraints[c];
      const std::string cw = where + " constraint " + std::to_string(c + 1);
      check_ref(cs.threshold_ref, s.params, cw, bad);
      if (cs.kind == ConstraintKind::MinDistance && cs.object_id.empty())
        bad.push_back(cw + ": MinDistance requires an object id");
      if (cs.kind != ConstraintKind::MinDistance && !cs.object_id.empty())
        bad.push_back(cw + ": object id is only meaningful for MinDistance");
    }

    if (s.terminal.kind == TerminalKind::StateWithinTolerance) {
      if (s.terminal.target_ref) {
        check_ref(*s.terminal.target_ref, s.params, where + " terminal", bad);
      } else if (!s.terminal.target_literal) {
        bad.push_back(where + " terminal: StateWithinTolerance needs a target");
      }
      if (s.terminal.tol < 0.0) bad.push_back(where + " terminal: negative tolerance");
      if (s.terminal.state_index < 0) bad.push_back(where + " terminal: negative state index");
    }
  }

  // The whole-task condition has no owning ParamVector, so a reference target
  // cannot resolve; require a literal.
  if (plan.whole_task_done.kind == TerminalKind::StateWithinTolerance) {
    if (plan.whole_task_done.target_ref)
      bad.push_back("whole_task_done: parameter references are not allowed at plan level");
    if (!plan.whole_task_done.target_literal)
      bad.push_back("whole_task_done: StateWithinTolerance needs a literal target");
    if (plan.whole_task_done.tol < 0.0) bad.push_back("whole_task_done: negative tolerance");
  }

  if (!bad.empty()) throw PlanValidationError(std::move(bad));
  return ValidatedPlan(plan);
}

// --- Evaluation --------------------------------------------------------------

double eval_reward(const RewardSpec& spec, const ParamVector& params, const State& x,
                   const Control& /*u*/) {
  const double target = params.at(spec.target_ref).value;
  switch (spec.kind) {
    case RewardKind::QuadraticTracking: {
      if (spec.state_index >= x.size())
        throw DimensionMismatch("QuadraticTracking: state index " +
                                std::to_string(spec.state_index) + " out of range for state of size " +
                                std::to_string(x.size()));
      const double e = target - x[spec.state_index];
      return -spec.scale * e * e;
    }
    case RewardKind::VelocityTracking: {
      if (x.size() < 2)
        throw DimensionMismatch("VelocityTracking: state has no velocity component");
      const double e = target - x[1];
      return -spec.scale * e * e;
    }
  }
  throw Error("eval_reward: unknown reward kind");
}

Eigen::VectorXd eval_constraints(const std::vector<ConstraintSpec>& specs,
                                 const ParamVector& params, const State& x, const Control& /*u*/,
                                 const Observables& obs) {
  Eigen::VectorXd margins(static_cast<Eigen::Index>(specs.size()));
  for (size_t k = 0; k < specs.size(); ++k) {
    const ConstraintSpec& c = specs[k];
    const double threshold = params.at(c.threshold_ref).value;
    switch (c.kind) {
      case ConstraintKind::ForceLimit: {
        if (!obs.contact_force)
          throw MissingObservable("ForceLimit: world reports no contact force");
        margins[static_cast<Eigen::Index>(k)] = threshold - std::abs(*obs.contact_force);
        break;
      }
      case ConstraintKind::MinDistance: {
        auto it = obs.distances.find(c.object_id);
        if (it != obs.distances.end()) {
          margins[static_cast<Eigen::Index>(k)] = it->second - threshold;
        } else if (obs.knows_object(c.object_id)) {
          // Object exists but is not on the path right now: constraint is
          // vacuously satisfied.
          margins[static_cast<Eigen::Index>(k)] = kInactiveMargin;
        } else {
          throw MissingObservable("MinDistance: unknown object '" + c.object_id + "'");
        }
        break;
      }
      case ConstraintKind::SpeedLimit: {
        if (x.size() < 2)
          throw DimensionMismatch("SpeedLimit: state has no velocity component");
        margins[static_cast<Eigen::Index>(k)] = threshold - std::abs(x[1]);
        break;
      }
    }
  }
  return margins;
}

bool check_terminal(const TerminalCondition& cond, const State& x, int elapsed, int window,
                    const ParamVector* params) {
  switch (cond.kind) {
    case TerminalKind::WindowElapsed:
      return elapsed >= window;
    case TerminalKind::StateWithinTolerance: {
      double target;
      if (cond.target_ref) {
        if (!params)
          throw UnresolvedParamRef("check_terminal: reference target without a ParamVector");
        target = params->at(*cond.target_ref).value;
      } else if (cond.target_literal) {
        target = *cond.target_literal;
      } else {
        throw Error("check_terminal: StateWithinTolerance without a target");
      }
      if (cond.state_index >= x.size())
        throw DimensionMismatch("check_terminal: state index out of range");
      return std::abs(x[cond.state_index] - target) <= cond.tol;
    }
  }
  throw Error("check_terminal: unknown terminal kind");
}

// --- Pooling -----------------------------------------------------------------

ParamVector pool_params(const TaskPlan& plan) {
  ParamVector pooled;
  for (const SubtaskSpec& s : plan.subtasks) {
    const std::string prefix = "s" + std::to_string(s.index) + ".";
    for (const Param& p : s.params.entries()) {
      Param q = p;
      q.name = prefix + p.name;
      pooled.insert(std::move(q));
    }
  }
  return pooled;
}

TaskPlan scatter_params(const TaskPlan& plan, const ParamVector& pooled) {
  const ParamVector expected = pool_params(plan);
  if (expected.size() != pooled.size())
    throw DimensionMismatch("scatter_params: pooled vector has " + std::to_string(pooled.size()) +
                            " entries, plan expects " + std::to_string(expected.size()));
  for (int i = 0; i < expected.size(); ++i) {
    if (expected[i].name != pooled[i].name)
      throw DimensionMismatch("scatter_params: entry '" + pooled[i].name +
                              "' does not match plan layout entry '" + expected[i].name + "'");
  }

  TaskPlan out = plan;
  for (SubtaskSpec& s : out.subtasks) {
    const std::string prefix = "s" + std::to_string(s.index) + ".";
    for (const Param& p : s.params.entries()) {
      s.params.set_value(p.name, pooled.at(prefix + p.name).value);
    }
  }
  return out;
}

}  // namespace taskmpc
