#include "taskmpc/mpc/mpc.hpp"

#include "taskmpc/util/format.hpp"

#include <sstream>

namespace taskmpc::mpc {

void validate_config(const MpcConfig& cfg) {
  if (cfg.horizon < 1) throw Error("MpcConfig: horizon must be >= 1");
  if (cfg.control_lo.size() != cfg.control_hi.size())
    throw Error("MpcConfig: control bound dimensions differ");
  if (cfg.control_lo.size() < 1) throw Error("MpcConfig: control bounds are empty");
  for (Eigen::Index j = 0; j < cfg.control_lo.size(); ++j)
    if (!(cfg.control_lo[j] < cfg.control_hi[j]))
      throw Error("MpcConfig: control_lo must be strictly below control_hi");
  if (cfg.penalty_stages < 1) throw Error("MpcConfig: penalty_stages must be >= 1");
  if (cfg.penalty_weight <= 0.0) throw Error("MpcConfig: penalty_weight must be positive");
  if (cfg.penalty_growth < 1.0) throw Error("MpcConfig: penalty_growth must be >= 1");
  if (cfg.iterations < 1) throw Error("MpcConfig: iterations must be >= 1");
  if (cfg.constraint_tolerance < 0.0)
    throw Error("MpcConfig: constraint_tolerance must be nonnegative");
  if (cfg.grid_points < 1) throw Error("MpcConfig: grid_points must be >= 1");
}

namespace {

std::string fmt_vector(const Eigen::VectorXd& v) {
  std::ostringstream os;
  os << "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    os << fmt_double(v[i]);
  }
  os << "]";
  return os.str();
}

const char* terminal_name(TerminalKind kind) {
  switch (kind) {
    case TerminalKind::StateWithinTolerance: return "state-within-tolerance";
    case TerminalKind::WindowElapsed: return "window-elapsed";
  }
  return "unknown";
}

}  // namespace

llm::FeedbackText render_subtask_feedback(const SubtaskSpec& spec, const SubtaskOutcome& outcome) {
  std::ostringstream os;
  os << "Subtask " << spec.index << " failed: terminal condition "
     << terminal_name(spec.terminal.kind) << " did not hold after " << outcome.realized_window
     << " of " << spec.window << " allotted steps.\n";

  const auto& states = outcome.slice.states;
  if (spec.terminal.kind == TerminalKind::StateWithinTolerance && !states.empty()) {
    const State& last = states.back();
    const int si = spec.terminal.state_index;
    if (si >= 0 && si < last.size()) {
      double target = 0.0;
      bool have_target = true;
      if (spec.terminal.target_literal) {
        target = *spec.terminal.target_literal;
      } else if (spec.terminal.target_ref) {
        try {
          target = spec.params.at(*spec.terminal.target_ref).value;
        } catch (const UnresolvedParamRef&) {
          have_target = false;
        }
      } else {
        have_target = false;
      }
      if (have_target) {
        os << "Final state[" << si << "] = " << fmt_double(last[si]) << ", target "
           << fmt_double(target) << " with tolerance " << fmt_double(spec.terminal.tol)
           << "; residual " << fmt_double(last[si] - target) << ".\n";
      }
    }
  }

  constexpr size_t kTail = 5;
  const size_t n_states = states.size();
  const size_t first = n_states > kTail ? n_states - kTail : 0;
  os << "Recent states:\n";
  for (size_t i = first; i < n_states; ++i)
    os << "  t=" << i << " x=" << fmt_vector(states[i]) << "\n";
  const auto& controls = outcome.slice.controls;
  if (!controls.empty()) {
    const size_t n_controls = controls.size();
    const size_t cfirst = n_controls > kTail ? n_controls - kTail : 0;
    os << "Recent controls:\n";
    for (size_t i = cfirst; i < n_controls; ++i)
      os << "  t=" << i << " u=" << fmt_vector(controls[i]) << "\n";
  }

  if (!spec.constraints.empty()) {
    os << "Worst constraint margin over the attempt: " << fmt_double(outcome.worst_margin)
       << (outcome.solver_always_feasible ? " (every solve reported feasible)"
                                          : " (at least one solve reported infeasible)")
       << ".\n";
  }
  return llm::FeedbackText{os.str()};
}

}  // namespace taskmpc::mpc
