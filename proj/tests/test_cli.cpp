#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "taskmpc/cli/cli.hpp"
#include "taskmpc/plan_io.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace taskmpc;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = cli::run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

struct TempDir {
  fs::path root;

  TempDir() {
    root = fs::temp_directory_path() /
           ("taskmpc_cli_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(root);
  }
  ~TempDir() { fs::remove_all(root); }

  static int& counter() {
    static int n = 0;
    return n;
  }

  fs::path write(const std::string& name, const std::string& text) const {
    const fs::path path = root / name;
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
    return path;
  }
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

constexpr const char* kValidPlan = R"({
  "subtasks": [
    {
      "index": 1,
      "reward": {"template": "QuadraticTracking",
                 "args": {"target_ref": "goal", "state_index": 0}},
      "constraints": [],
      "params": {"goal": {"value": 1.0, "lower": 1.0, "upper": 1.0}},
      "window": 5,
      "terminal": {"kind": "WindowElapsed", "args": {}}
    }
  ],
  "whole_task_done": {"kind": "WindowElapsed", "args": {}}
})";

constexpr const char* kDanglingRefPlan = R"({
  "subtasks": [
    {
      "index": 1,
      "reward": {"template": "QuadraticTracking",
                 "args": {"target_ref": "nowhere", "state_index": 0}},
      "constraints": [],
      "params": {"goal": {"value": 1.0, "lower": 1.0, "upper": 1.0}},
      "window": 5,
      "terminal": {"kind": "WindowElapsed", "args": {}}
    }
  ],
  "whole_task_done": {"kind": "WindowElapsed", "args": {}}
})";

}  // namespace

TEST_CASE("version and usage") {
  CHECK(run({"--version"}).code == cli::kExitOk);
  CHECK(run({"--version"}).out == std::string(cli::kVersion) + "\n");

  // A subcommand is required.
  CHECK(run({}).code == cli::kExitUsage);
  CHECK(run({"frobnicate"}).code == cli::kExitUsage);

  const CliRun help = run({"run-vehicle", "--help"});
  CHECK(help.code == cli::kExitOk);
  // The seed battery default is part of the contract and shows in the help.
  CHECK(help.out.find("--seeds") != std::string::npos);
  CHECK(help.out.find("20") != std::string::npos);
}

TEST_CASE("validate-plan verdicts") {
  TempDir dir;

  SUBCASE("valid plan file") {
    const auto path = dir.write("plan.json", kValidPlan);
    const CliRun r = run({"validate-plan", path.string()});
    CHECK(r.code == cli::kExitOk);
    CHECK(r.out == "OK\n");
  }

  SUBCASE("unresolved reference lists the violation on stderr") {
    const auto path = dir.write("plan.json", kDanglingRefPlan);
    const CliRun r = run({"validate-plan", path.string()});
    CHECK(r.code == cli::kExitUsage);
    CHECK(r.out.empty());
    CHECK(r.err.find("nowhere") != std::string::npos);
  }

  SUBCASE("unreadable file") {
    const CliRun r = run({"validate-plan", (dir.root / "missing.json").string()});
    CHECK(r.code == cli::kExitUsage);
    CHECK_FALSE(r.err.empty());
  }

  SUBCASE("not json at all") {
    const auto path = dir.write("plan.json", "not json");
    CHECK(run({"validate-plan", path.string()}).code == cli::kExitUsage);
  }
}

TEST_CASE("emit-plots reshapes result directories") {
  TempDir dir;

  SUBCASE("empty directory") {
    const CliRun r = run({"emit-plots", dir.root.string()});
    CHECK(r.code == cli::kExitUsage);
    CHECK_FALSE(r.err.empty());
  }

  SUBCASE("missing directory") {
    CHECK(run({"emit-plots", (dir.root / "gone").string()}).code == cli::kExitUsage);
  }

  SUBCASE("robot results produce theta and loss curves") {
    dir.write("learning_curve_full.csv",
              "outer_step,inner_step,global_n,theta_s1.a,theta_s2.b,loss,grad_norm,eta\n"
              "0,-1,0,1,3,0.5,0.1,2.5\n"
              "0,0,0,1.5,3,0.4,0.05,2.5\n");
    const CliRun r = run({"emit-plots", dir.root.string()});
    CHECK(r.code == cli::kExitOk);
    CHECK(slurp(dir.root / "theta_curve.csv") ==
          "variant,step,theta_s1.a,theta_s2.b\n"
          "full,0,1,3\n"
          "full,1,1.5,3\n");
    CHECK(slurp(dir.root / "loss_curve.csv") ==
          "variant,step,loss\n"
          "full,0,0.5\n"
          "full,1,0.4\n");
  }

  SUBCASE("vehicle results produce per-metric tables") {
    dir.write("vehicle_summary.csv",
              "strategy,scenario,mean_min_distance,mean_time_to_travel\n"
              "typical,alpha,0.03,158\n"
              "typical,average,0.03,158\n");
    const CliRun r = run({"emit-plots", dir.root.string()});
    CHECK(r.code == cli::kExitOk);
    CHECK(slurp(dir.root / "min_distance.csv") ==
          "strategy,scenario,min_distance\n"
          "typical,alpha,0.03\n"
          "typical,average,0.03\n");
    CHECK(slurp(dir.root / "time_to_travel.csv") ==
          "strategy,scenario,time_to_travel\n"
          "typical,alpha,158\n"
          "typical,average,158\n");
  }

  SUBCASE("--out redirects the plot files") {
    dir.write("vehicle_summary.csv",
              "strategy,scenario,mean_min_distance,mean_time_to_travel\n"
              "typical,alpha,0.03,158\n");
    const fs::path out_dir = dir.root / "plots";
    const CliRun r = run({"emit-plots", dir.root.string(), "--out", out_dir.string()});
    CHECK(r.code == cli::kExitOk);
    CHECK(fs::exists(out_dir / "min_distance.csv"));
    CHECK_FALSE(fs::exists(dir.root / "min_distance.csv"));
  }
}

TEST_CASE("run-robot drives the case study end to end") {
  TempDir dir;
  const fs::path out_dir = dir.root / "robot";

  const CliRun r =
      run({"run-robot", "--variant", "full", "--out", out_dir.string(), "--log-level", "error"});
  CHECK(r.code == cli::kExitOk);  // the full variant converges
  CHECK(r.out.find("full:") != std::string::npos);
  CHECK(fs::exists(out_dir / "learning_curve_full.csv"));
  CHECK(fs::exists(out_dir / "oracle_sweep.csv"));
  CHECK(fs::exists(out_dir / "robot_summary.csv"));

  // The manifest records version and seeds, never timestamps.
  const std::string manifest = slurp(out_dir / "manifest.json");
  CHECK(manifest.find("\"version\"") != std::string::npos);
  CHECK(manifest.find(cli::kVersion) != std::string::npos);
  CHECK(manifest.find("\"seeds\"") != std::string::npos);
  CHECK(manifest.find("time") == std::string::npos);

  SUBCASE("identical reruns are byte-identical") {
    const fs::path again = dir.root / "robot2";
    CHECK(run({"run-robot", "--variant", "full", "--out", again.string(), "--log-level",
               "error"})
              .code == cli::kExitOk);
    for (const char* name :
         {"learning_curve_full.csv", "oracle_sweep.csv", "robot_summary.csv"})
      CHECK(slurp(out_dir / name) == slurp(again / name));
  }

  SUBCASE("the dashed variant spelling is accepted") {
    const CliRun dashed = run({"run-robot", "--variant", "sgd-only", "--out",
                               (dir.root / "sgd").string(), "--log-level", "error"});
    // Desk-scale sgd_only exhausts its outer budget: results written, exit 3.
    CHECK(dashed.code == cli::kExitNonConvergence);
    CHECK(fs::exists(dir.root / "sgd" / "learning_curve_sgd_only.csv"));
  }

  SUBCASE("unknown variant is a usage error") {
    CHECK(run({"run-robot", "--variant", "bogus"}).code == cli::kExitUsage);
  }
}

TEST_CASE("run-robot reports missing fixtures as backend failures") {
  TempDir dir;
  fs::create_directories(dir.root / "robot_full");  // root exists, no recordings

  const CliRun r = run({"run-robot", "--variant", "full", "--fixtures", dir.root.string(),
                        "--out", (dir.root / "out").string(), "--log-level", "error"});
  CHECK(r.code == cli::kExitBackend);
  CHECK(r.err.find("missing fixture digest:") != std::string::npos);
}

TEST_CASE("run-vehicle drives the battery and honors strategy selection") {
  TempDir dir;
  const fs::path out_dir = dir.root / "vehicle";

  const CliRun r = run({"run-vehicle", "--strategy", "typical", "--seeds", "1", "--out",
                        out_dir.string(), "--log-level", "error"});
  CHECK(r.code == cli::kExitOk);
  CHECK(fs::exists(out_dir / "vehicle_typical.csv"));
  CHECK_FALSE(fs::exists(out_dir / "vehicle_proposed.csv"));
  CHECK(fs::exists(out_dir / "vehicle_summary.csv"));
  CHECK(fs::exists(out_dir / "manifest.json"));

  const std::string summary = slurp(out_dir / "vehicle_summary.csv");
  CHECK(summary.find("typical,school_bus,") != std::string::npos);
  CHECK(summary.find("typical,average,") != std::string::npos);

  // The per-seed file carries exactly one row per scenario at --seeds 1.
  const std::string per_seed = slurp(out_dir / "vehicle_typical.csv");
  CHECK(std::count(per_seed.begin(), per_seed.end(), '\n') == 4);  // header + 3 rows

  SUBCASE("unknown strategy is rejected with usage text") {
    const CliRun bad = run({"run-vehicle", "--strategy", "bold"});
    CHECK(bad.code == cli::kExitUsage);
    CHECK(bad.err.find("typical") != std::string::npos);
  }

  SUBCASE("the seed override lands in the manifest") {
    const fs::path seeded = dir.root / "seeded";
    CHECK(run({"run-vehicle", "--strategy", "typical", "--seeds", "1", "--seed", "77",
               "--out", seeded.string(), "--log-level", "error"})
              .code == cli::kExitOk);
    const std::string manifest = slurp(seeded / "manifest.json");
    CHECK(manifest.find("77") != std::string::npos);
  }
}

TEST_CASE("remote backend selection without credentials is a config error") {
  ::unsetenv("LLM_ENDPOINT");
  ::unsetenv("LLM_MODEL");
  ::unsetenv("LLM_API_KEY");
  const CliRun r = run({"run-robot", "--backend", "remote", "--log-level", "error"});
  CHECK(r.code == cli::kExitUsage);
  CHECK_FALSE(r.err.empty());

  // Only the documented backends are accepted at all.
  CHECK(run({"run-robot", "--backend", "carrier-pigeon"}).code == cli::kExitUsage);
}
