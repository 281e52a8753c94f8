#include "taskmpc/cli/cli.hpp"

#include "taskmpc/bench/bench.hpp"
#include "taskmpc/llm/backend.hpp"
#include "taskmpc/plan_io.hpp"
#include "taskmpc/util/format.hpp"

#include <optional>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace taskmpc::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// --- logging -----------------------------------------------------------------

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel log_level_from_string(const std::string& s) {
  if (s == "error") return LogLevel::Error;
  if (s == "warn") return LogLevel::Warn;
  if (s == "info") return LogLevel::Info;
  if (s == "debug") return LogLevel::Debug;
  throw Error("unknown log level '" + s + "' (expected error, warn, info or debug)");
}

struct Logger {
  LogLevel level = LogLevel::Info;
  std::ostream* sink = nullptr;

  void at(LogLevel lvl, const char* tag, const std::string& msg) const {
    if (sink != nullptr && lvl <= level) *sink << "[" << tag << "] " << msg << "\n";
  }
  void warn(const std::string& msg) const { at(LogLevel::Warn, "warn", msg); }
  void info(const std::string& msg) const { at(LogLevel::Info, "info", msg); }
  void debug(const std::string& msg) const { at(LogLevel::Debug, "debug", msg); }
};

// --- shared options ----------------------------------------------------------

struct GlobalOpts {
  std::string config;
  std::string out;
  std::optional<uint64_t> seed;
  std::string backend = "scripted";
  std::string fixtures;
  std::string log_level = "info";
  std::string endpoint;
  std::string model;
  std::string api_key;
};

void add_global_options(CLI::App* cmd, GlobalOpts& g) {
  cmd->add_option("--config", g.config, "case configuration file (JSON)");
  cmd->add_option("--out", g.out, "output directory for result files");
  cmd->add_option("--seed", g.seed, "override the run's base seed");
  cmd->add_option("--backend", g.backend, "reasoning backend")
      ->check(CLI::IsMember({"scripted", "remote"}))
      ->capture_default_str();
  cmd->add_option("--fixtures", g.fixtures, "fixture root for the scripted backend");
  cmd->add_option("--log-level", g.log_level, "diagnostic verbosity")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}))
      ->capture_default_str();
  cmd->add_option("--endpoint", g.endpoint, "remote backend base URL (overrides LLM_ENDPOINT)");
  cmd->add_option("--model", g.model, "remote model name (overrides LLM_MODEL)");
  cmd->add_option("--api-key", g.api_key, "remote credential (overrides LLM_API_KEY)");
}

// Flags take precedence over the LLM_* environment variables.
llm::RemoteConfig remote_config(const GlobalOpts& g) {
  llm::RemoteConfig cfg = llm::RemoteConfig::from_env();
  if (!g.endpoint.empty()) cfg.endpoint = g.endpoint;
  if (!g.model.empty()) cfg.model = g.model;
  if (!g.api_key.empty()) cfg.api_key = g.api_key;
  return cfg;
}

// --- manifests ---------------------------------------------------------------

json mpc_to_json(const mpc::MpcConfig& cfg) {
  json j;
  j["horizon"] = cfg.horizon;
  j["iterations"] = cfg.iterations;
  j["penalty_weight"] = cfg.penalty_weight;
  j["penalty_growth"] = cfg.penalty_growth;
  j["penalty_stages"] = cfg.penalty_stages;
  j["constraint_tolerance"] = cfg.constraint_tolerance;
  j["grid_points"] = cfg.grid_points;
  return j;
}

// One manifest per run: the resolved configuration, the code version and every
// seed in play. Deliberately time-free so reruns stay byte-identical.
void write_manifest(const fs::path& dir, const json& doc) {
  fs::create_directories(dir);
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw Error("cannot write manifest in " + dir.string());
  out << doc.dump(2) << "\n";
}

// --- run-robot ---------------------------------------------------------------

int cmd_run_robot(const GlobalOpts& g, std::vector<std::string> variant_names,
                  const Logger& log, std::ostream& out) {
  const std::string config_path = g.config.empty() ? "configs/robot_case.json" : g.config;
  bench::RobotCaseConfig cfg = bench::load_robot_case_config(config_path);
  if (!g.fixtures.empty()) cfg.fixtures_root = g.fixtures;
  if (g.seed) cfg.schedule.base_seed = *g.seed;

  std::optional<llm::RemoteBackend> remote;
  if (g.backend == "remote") cfg.backend = &remote.emplace(remote_config(g));

  if (variant_names.empty()) variant_names = {"full", "sgd_only", "llm_only"};
  std::vector<adapt::Variant> variants;
  for (std::string name : variant_names) {
    std::replace(name.begin(), name.end(), '-', '_');
    variants.push_back(adapt::variant_from_string(name));
  }

  std::vector<bench::RobotCaseResult> results;
  for (adapt::Variant v : variants) {
    log.info("robot case: running variant " + adapt::to_string(v));
    results.push_back(bench::run_robot_case(cfg, v));
  }

  const std::string out_dir = g.out.empty() ? "results/robot" : g.out;
  bench::write_robot_results(out_dir, results);

  json manifest;
  manifest["command"] = "run-robot";
  manifest["version"] = kVersion;
  manifest["backend"] = g.backend;
  manifest["config_file"] = config_path;
  manifest["fixtures_root"] = cfg.fixtures_root;
  manifest["scenario"] = cfg.scenario.name;
  manifest["force_param"] = cfg.force_param;
  manifest["variants"] = json::array();
  for (adapt::Variant v : variants) manifest["variants"].push_back(adapt::to_string(v));
  manifest["schedule"] = {{"eta0", cfg.schedule.eta0},
                          {"gamma", cfg.schedule.gamma},
                          {"inner_epochs", cfg.schedule.inner_epochs},
                          {"fd_epsilon", cfg.schedule.fd_epsilon},
                          {"stop_epsilon", cfg.schedule.stop_epsilon},
                          {"max_outer", cfg.schedule.max_outer},
                          {"rollouts_per_eval", cfg.schedule.rollouts_per_eval},
                          {"base_seed", cfg.schedule.base_seed},
                          {"global_step_index", cfg.schedule.global_step_index}};
  manifest["mpc"] = mpc_to_json(cfg.mpc);
  manifest["oracle"] = {{"lo", cfg.oracle_lo},
                        {"hi", cfg.oracle_hi},
                        {"step", cfg.oracle_step},
                        {"band_factor", cfg.band_factor}};
  manifest["seeds"] = json::array();
  for (int k = 0; k < cfg.schedule.rollouts_per_eval; ++k)
    manifest["seeds"].push_back(cfg.schedule.base_seed + static_cast<uint64_t>(k));
  write_manifest(out_dir, manifest);

  bool non_convergent = false;
  for (const bench::RobotCaseResult& r : results) {
    out << adapt::to_string(r.variant) << ": final_loss=" << fmt_double(r.final_loss)
        << " evals_to_band=" << r.evals_to_band << " total_evals=" << r.total_evals
        << " band_threshold=" << fmt_double(r.band_threshold)
        << (r.non_convergence ? " (non-convergent)" : "") << "\n";
    non_convergent |= r.non_convergence;
  }
  out << "results written to " << out_dir << "\n";
  if (non_convergent)
    log.warn("a variant exhausted its outer budget before the gradient stop fired");
  return non_convergent ? kExitNonConvergence : kExitOk;
}

// --- run-vehicle -------------------------------------------------------------

int cmd_run_vehicle(const GlobalOpts& g, std::vector<std::string> strategy_names,
                    const int* seeds_override, const Logger& log, std::ostream& out) {
  const std::string config_path = g.config.empty() ? "configs/vehicle_case.json" : g.config;
  bench::VehicleCaseConfig cfg = bench::load_vehicle_case_config(config_path);
  if (!g.fixtures.empty()) cfg.fixtures_root = g.fixtures;
  if (g.seed) cfg.seed_base = *g.seed;
  if (seeds_override != nullptr) cfg.seeds = *seeds_override;

  std::optional<llm::RemoteBackend> remote;
  if (g.backend == "remote") cfg.backend = &remote.emplace(remote_config(g));

  if (strategy_names.empty()) strategy_names = {"typical", "conservative", "proposed"};
  std::vector<bench::Strategy> strategies;
  for (const std::string& name : strategy_names)
    strategies.push_back(bench::strategy_from_string(name));

  std::vector<bench::VehicleCaseResult> results;
  for (bench::Strategy s : strategies) {
    log.info("vehicle case: running strategy " + bench::to_string(s) + " over " +
             std::to_string(cfg.seeds) + " seeds per scenario");
    results.push_back(bench::run_vehicle_case(cfg, s));
  }

  const std::string out_dir = g.out.empty() ? "results/vehicle" : g.out;
  bench::write_vehicle_results(out_dir, results);

  json manifest;
  manifest["command"] = "run-vehicle";
  manifest["version"] = kVersion;
  manifest["backend"] = g.backend;
  manifest["config_file"] = config_path;
  manifest["fixtures_root"] = cfg.fixtures_root;
  manifest["strategies"] = json::array();
  for (bench::Strategy s : strategies) manifest["strategies"].push_back(bench::to_string(s));
  manifest["scenarios"] = json::array();
  for (const envs::VehicleScenario& sc : cfg.scenarios) manifest["scenarios"].push_back(sc.name);
  manifest["conservative"] = {{"speed_limit", cfg.conservative_speed_limit},
                              {"min_distance", cfg.conservative_min_distance}};
  manifest["mpc"] = mpc_to_json(cfg.mpc);
  manifest["seeds"] = json::array();
  for (int k = 0; k < cfg.seeds; ++k)
    manifest["seeds"].push_back(cfg.seed_base + static_cast<uint64_t>(k));
  write_manifest(out_dir, manifest);

  for (const bench::VehicleCaseResult& r : results) {
    out << bench::to_string(r.strategy)
        << ": avg_min_distance=" << fmt_double(r.avg_min_distance)
        << " avg_time_to_travel=" << fmt_double(r.avg_time) << "\n";
  }
  out << "results written to " << out_dir << "\n";
  return kExitOk;
}

// --- validate-plan -----------------------------------------------------------

int cmd_validate_plan(const std::string& path, std::ostream& out, std::ostream& err) {
  TaskPlan plan;
  try {
    plan = load_plan_file(path);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kExitUsage;
  }
  try {
    validate_plan(plan);
  } catch (const PlanValidationError& e) {
    err << "plan is invalid:\n";
    for (const std::string& v : e.violations) err << "  - " << v << "\n";
    return kExitUsage;
  }
  out << "OK\n";
  return kExitOk;
}

// --- emit-plots --------------------------------------------------------------

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::optional<Table> read_table(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  Table t;
  std::string line;
  if (!std::getline(in, line)) return std::nullopt;
  t.header = split_csv_line(line);
  while (std::getline(in, line))
    if (!line.empty()) t.rows.push_back(split_csv_line(line));
  return t;
}

std::size_t column_of(const Table& t, const std::string& name, const fs::path& path) {
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i] == name) return i;
  throw Error("column '" + name + "' not found in " + path.string());
}

std::ofstream open_plot(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open output file: " + path.string());
  return out;
}

// Learning curves -> one theta trace and one loss trace per variant, indexed
// by update step.
bool emit_robot_plots(const fs::path& dir, const fs::path& out_dir, std::ostream& out) {
  struct Curve {
    std::string variant;
    fs::path path;
    Table table;
  };
  std::vector<Curve> curves;
  for (const char* v : {"full", "sgd_only", "llm_only"}) {
    const fs::path path = dir / ("learning_curve_" + std::string(v) + ".csv");
    if (std::optional<Table> t = read_table(path)) curves.push_back({v, path, std::move(*t)});
  }
  if (curves.empty()) return false;

  std::ofstream theta_out = open_plot(out_dir / "theta_curve.csv");
  std::ofstream loss_out = open_plot(out_dir / "loss_curve.csv");

  theta_out << "variant,step";
  for (const std::string& h : curves.front().table.header)
    if (h.rfind("theta_", 0) == 0) theta_out << "," << h;
  theta_out << "\n";
  loss_out << "variant,step,loss\n";

  for (const Curve& c : curves) {
    std::vector<std::size_t> theta_cols;
    for (std::size_t i = 0; i < c.table.header.size(); ++i)
      if (c.table.header[i].rfind("theta_", 0) == 0) theta_cols.push_back(i);
    const std::size_t loss_col = column_of(c.table, "loss", c.path);

    for (std::size_t row = 0; row < c.table.rows.size(); ++row) {
      const std::vector<std::string>& cells = c.table.rows[row];
      theta_out << c.variant << "," << row;
      for (std::size_t i : theta_cols) theta_out << "," << cells.at(i);
      theta_out << "\n";
      loss_out << c.variant << "," << row << "," << cells.at(loss_col) << "\n";
    }
  }
  out << "wrote " << (out_dir / "theta_curve.csv").string() << "\n";
  out << "wrote " << (out_dir / "loss_curve.csv").string() << "\n";
  return true;
}

// Strategy comparison table -> one file per plotted metric.
bool emit_vehicle_plots(const fs::path& dir, const fs::path& out_dir, std::ostream& out) {
  const fs::path summary = dir / "vehicle_summary.csv";
  const std::optional<Table> t = read_table(summary);
  if (!t) return false;

  const std::size_t strategy_col = column_of(*t, "strategy", summary);
  const std::size_t scenario_col = column_of(*t, "scenario", summary);
  const std::size_t dist_col = column_of(*t, "mean_min_distance", summary);
  const std::size_t time_col = column_of(*t, "mean_time_to_travel", summary);

  std::ofstream dist_out = open_plot(out_dir / "min_distance.csv");
  std::ofstream time_out = open_plot(out_dir / "time_to_travel.csv");
  dist_out << "strategy,scenario,min_distance\n";
  time_out << "strategy,scenario,time_to_travel\n";
  for (const std::vector<std::string>& cells : t->rows) {
    dist_out << cells.at(strategy_col) << "," << cells.at(scenario_col) << ","
             << cells.at(dist_col) << "\n";
    time_out << cells.at(strategy_col) << "," << cells.at(scenario_col) << ","
             << cells.at(time_col) << "\n";
  }
  out << "wrote " << (out_dir / "min_distance.csv").string() << "\n";
  out << "wrote " << (out_dir / "time_to_travel.csv").string() << "\n";
  return true;
}

int cmd_emit_plots(const std::string& dir_arg, const std::string& out_arg, std::ostream& out,
                   std::ostream& err) {
  const fs::path dir(dir_arg);
  if (!fs::is_directory(dir)) {
    err << "not a result directory: " << dir_arg << "\n";
    return kExitUsage;
  }
  const fs::path out_dir = out_arg.empty() ? dir : fs::path(out_arg);
  fs::create_directories(out_dir);

  const bool robot = emit_robot_plots(dir, out_dir, out);
  const bool vehicle = emit_vehicle_plots(dir, out_dir, out);
  if (!robot && !vehicle) {
    err << "no result files found in " << dir_arg
        << " (expected learning_curve_<variant>.csv or vehicle_summary.csv)\n";
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Subtask-decomposed MPC with latent-risk reasoning: case studies and utilities"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  GlobalOpts g;

  CLI::App* robot = app.add_subcommand("run-robot", "Run the robot-arm push case study");
  add_global_options(robot, g);
  std::vector<std::string> variant_names;
  robot
      ->add_option("--variant", variant_names,
                   "adaptation variant to run; repeatable (default: all three)")
      ->check(CLI::IsMember({"full", "sgd_only", "sgd-only", "llm_only", "llm-only"}));

  CLI::App* vehicle = app.add_subcommand("run-vehicle", "Run the latent-risk driving battery");
  add_global_options(vehicle, g);
  std::vector<std::string> strategy_names;
  vehicle
      ->add_option("--strategy", strategy_names,
                   "constraint strategy to evaluate; repeatable (default: all three)")
      ->check(CLI::IsMember({"typical", "conservative", "proposed"}));
  int seeds_flag = 20;
  CLI::Option* seeds_opt =
      vehicle->add_option("--seeds", seeds_flag, "seed battery size per scenario")
          ->capture_default_str();

  CLI::App* validate =
      app.add_subcommand("validate-plan", "Check a plan document against the schema");
  add_global_options(validate, g);
  std::string plan_path;
  validate->add_option("path", plan_path, "plan JSON file")->required();

  CLI::App* plots =
      app.add_subcommand("emit-plots", "Reshape result files into plot-ready CSVs");
  add_global_options(plots, g);
  std::string result_dir;
  plots->add_option("dir", result_dir, "directory written by run-robot or run-vehicle")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const Logger log{log_level_from_string(g.log_level), &err};
  try {
    if (robot->parsed()) return cmd_run_robot(g, variant_names, log, out);
    if (vehicle->parsed())
      return cmd_run_vehicle(g, strategy_names, seeds_opt->count() > 0 ? &seeds_flag : nullptr,
                             log, out);
    if (validate->parsed()) return cmd_validate_plan(plan_path, out, err);
    if (plots->parsed()) return cmd_emit_plots(result_dir, g.out, out, err);
  } catch (const llm::FixtureMiss& e) {
    err << "backend failure: " << e.what() << "\n";
    err << "missing fixture digest: " << e.digest << "\n";
    return kExitBackend;
  } catch (const llm::HttpError& e) {
    err << "backend failure: " << e.what() << " (status " << e.status << ")\n";
    return kExitBackend;
  } catch (const llm::TimeoutError& e) {
    err << "backend failure: " << e.what() << "\n";
    return kExitBackend;
  } catch (const PlanValidationError& e) {
    err << "plan is invalid:\n";
    for (const std::string& v : e.violations) err << "  - " << v << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  err << "no subcommand given\n";
  return kExitUsage;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("taskmpc");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace taskmpc::cli
