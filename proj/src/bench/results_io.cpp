#include "taskmpc/bench/bench.hpp"

#include "taskmpc/util/format.hpp"

#include <filesystem>
#include <fstream>

namespace taskmpc::bench {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open output file: " + path.string());
  return out;
}

const char* bool_text(bool b) { return b ? "true" : "false"; }

}  // namespace

void write_robot_results(const std::string& out_dir,
                         const std::vector<RobotCaseResult>& results) {
  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);

  for (const RobotCaseResult& r : results) {
    adapt::write_learning_curve_csv(
        (dir / ("learning_curve_" + adapt::to_string(r.variant) + ".csv")).string(),
        r.records, r.theta_names);
  }

  if (!results.empty()) {
    std::ofstream out = open_out(dir / "oracle_sweep.csv");
    out << "theta,loss\n";
    for (const OracleSweepPoint& p : results.front().oracle)
      out << fmt_double(p.theta) << "," << fmt_double(p.loss) << "\n";
  }

  std::ofstream out = open_out(dir / "robot_summary.csv");
  out << "variant,evals_to_band,final_loss,band_threshold,oracle_best_theta,"
         "oracle_best_loss,non_convergence,total_evals,worst_successful_margin,"
         "window_identity\n";
  for (const RobotCaseResult& r : results) {
    out << adapt::to_string(r.variant) << "," << r.evals_to_band << ","
        << fmt_double(r.final_loss) << "," << fmt_double(r.band_threshold) << ","
        << fmt_double(r.oracle_best_theta) << "," << fmt_double(r.oracle_best_loss) << ","
        << bool_text(r.non_convergence) << "," << r.total_evals << ","
        << fmt_double(r.worst_successful_margin) << "," << bool_text(r.window_identity)
        << "\n";
  }
}

void write_vehicle_results(const std::string& out_dir,
                           const std::vector<VehicleCaseResult>& results) {
  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);

  for (const VehicleCaseResult& r : results) {
    std::ofstream out =
        open_out(dir / ("vehicle_" + to_string(r.strategy) + ".csv"));
    out << "scenario,seed,min_distance,time_to_travel\n";
    for (const ScenarioMetrics& sm : r.scenarios) {
      for (std::size_t k = 0; k < sm.seeds.size(); ++k) {
        out << sm.scenario << "," << sm.seeds[k] << ","
            << fmt_double(sm.min_distances[k]) << "," << sm.times[k] << "\n";
      }
    }
  }

  std::ofstream out = open_out(dir / "vehicle_summary.csv");
  out << "strategy,scenario,mean_min_distance,mean_time_to_travel\n";
  for (const VehicleCaseResult& r : results) {
    for (const ScenarioMetrics& sm : r.scenarios) {
      out << to_string(r.strategy) << "," << sm.scenario << ","
          << fmt_double(sm.mean_min_distance) << "," << fmt_double(sm.mean_time) << "\n";
    }
    out << to_string(r.strategy) << ",average," << fmt_double(r.avg_min_distance) << ","
        << fmt_double(r.avg_time) << "\n";
  }
}

}  // namespace taskmpc::bench
