#pragma once

#include <Eigen/Core>

#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace taskmpc {

// Dense state and control vectors. Both environments use small fixed sizes
// (n = 2, m = 1) but everything downstream is written against dynamic sizes
// so toy problems in tests can use whatever dimensions they like.
using State = Eigen::VectorXd;
using Control = Eigen::VectorXd;

// Base class for all errors thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

// A constraint template asked for a measurement the environment never
// produces (e.g. a contact force in the vehicle world).
struct MissingObservable : Error {
  using Error::Error;
};

// A parameter name did not resolve in the owning subtask's ParamVector.
struct UnresolvedParamRef : Error {
  using Error::Error;
};

// Structured-text parse failure; `raw` retains the offending input so it can
// be logged or attached to a report.
struct ParseError : Error {
  ParseError(const std::string& msg, std::string raw_text)
      : Error(msg), raw(std::move(raw_text)) {}
  std::string raw;
};

// Per-step measurements produced by an environment transition. `contact_force`
// is only present in worlds that model contact; `distances` holds the gap to
// every scene object that is currently on the vehicle's path (absent objects
// have no entry). `known_objects` lists every declared object id so constraint
// evaluation can tell "temporarily absent" apart from "no such object".
struct Observables {
  std::optional<double> contact_force;
  std::map<std::string, double> distances;
  std::vector<std::string> known_objects;
  // Box velocity after the step, recorded by the robot-arm world so metrics
  // can score the pushed object rather than the arm itself.
  std::optional<double> box_velocity;

  bool knows_object(const std::string& id) const {
    for (const auto& k : known_objects)
      if (k == id) return true;
    return false;
  }
};

// Margin value used for a MinDistance constraint whose object is currently
// not on the path: large enough to never bind, finite so penalty terms and
// finite differences stay well defined.
inline constexpr double kInactiveMargin = 1e9;

// One named, box-bounded scalar parameter (an entry of some theta vector).
struct Param {
  std::string name;
  double value = 0.0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

// Ordered set of named parameters with box bounds. Entries are kept sorted by
// name so that pooling, serialization and gradient layouts are reproducible
// regardless of insertion or file order.
class ParamVector {
 public:
  ParamVector() = default;

  void insert(Param p);
  bool contains(const std::string& name) const;
  const Param& at(const std::string& name) const;  // throws UnresolvedParamRef
  void set_value(const std::string& name, double v);

  int size() const { return static_cast<int>(entries_.size()); }
  bool empty() const { return entries_.empty(); }
  const std::vector<Param>& entries() const { return entries_; }
  const Param& operator[](int i) const { return entries_.at(static_cast<size_t>(i)); }

  // Values as a dense vector, in entry order.
  Eigen::VectorXd values() const;
  // Overwrites all values from a dense vector of matching length.
  void set_values(const Eigen::VectorXd& v);
  // Clamps every value into its [lower, upper] box and returns *this.
  ParamVector& clip();

  bool operator==(const ParamVector& other) const;

 private:
  std::vector<Param> entries_;  // sorted by name
};

}  // namespace taskmpc
