// Command-line front end: structural analysis, sensor placement and
// classification, failure-recovery planning, and Monte Carlo simulation.
//
// Exit codes: 0 success, 2 validation error, 3 infeasibility findings,
// 4 simulation verdicts mismatch the scenario's declared expectations.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "obsrec/recovery.hpp"
#include "obsrec/simulate.hpp"
#include "obsrec/structural.hpp"

namespace fs = std::filesystem;
using namespace obsrec;

namespace {

constexpr std::uint64_t kDefaultSeed = 7;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write file: " + path.string());
  out << text;
}

// Accepts a bare system file, or a scenario file whose "system" object is
// then used, so `gen` output feeds the structural subcommands directly.
SystemPattern load_system(const std::string& path) {
  std::string text = slurp(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("file is not valid JSON: ") + e.what());
  }
  if (doc.is_object() && !doc.contains("n") && doc.contains("system"))
    return parse_system(doc["system"].dump());
  return parse_system(text);
}

Orientation parse_orientation(const std::string& s) {
  if (s == "transposed") return Orientation::transposed;
  if (s == "paper") return Orientation::paper;
  throw ValidationError("orientation must be 'paper' or 'transposed'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structural observability analysis and sensor-failure recovery "
               "for networked LTI estimation"};
  app.require_subcommand(1);

  std::string input, output, orientation = "transposed", failed_sensor;
  std::uint64_t seed = kDefaultSeed;
  double rho = 1.1, noise = 0.25, density = 0.2;
  int trials = 100, horizon = 100, gen_n = 10, threads = 0;
  bool paper_style = false;

  auto* analyze_cmd = app.add_subcommand(
      "analyze", "Structural analysis report (matching, unmatched states, "
                 "contractions, SCCs, classification, verdict) from a system JSON file");
  analyze_cmd->add_option("system", input, "system JSON file")->required();
  analyze_cmd->add_option("--out", output, "write report JSON here (default stdout)");
  analyze_cmd->add_option("--orientation", orientation,
                          "bipartite orientation: transposed (default) or paper");

  auto* place_cmd = app.add_subcommand(
      "place", "Minimal sensor placement (alpha on unmatched states, beta on "
               "uncovered parent SCCs)");
  place_cmd->add_option("system", input, "system JSON file")->required();
  place_cmd->add_option("--out", output, "output path (default stdout)");
  place_cmd->add_option("--orientation", orientation, "bipartite orientation");

  auto* classify_cmd =
      app.add_subcommand("classify", "Classify the file's sensors as alpha/beta/redundant");
  classify_cmd->add_option("system", input, "system JSON file")->required();
  classify_cmd->add_option("--out", output, "output path (default stdout)");
  classify_cmd->add_option("--orientation", orientation, "bipartite orientation");

  auto* plan_cmd = app.add_subcommand(
      "plan-recovery", "Equivalent-state replacement plan for a failed sensor");
  plan_cmd->add_option("system", input, "system JSON file")->required();
  plan_cmd->add_option("--sensor", failed_sensor, "id of the failed sensor")->required();
  plan_cmd->add_option("--out", output, "output path (default stdout)");
  plan_cmd->add_option("--orientation", orientation, "bipartite orientation");

  auto* sim_cmd = app.add_subcommand(
      "simulate", "Monte Carlo estimation run of a scenario JSON file "
                  "(system + events + expectations); writes mse.csv and summary.json");
  sim_cmd->add_option("scenario", input, "scenario JSON file")->required();
  sim_cmd->add_option("--out", output, "output directory")->required();
  sim_cmd->add_option("--trials", trials, "override trial count");
  sim_cmd->add_option("--horizon", horizon, "override horizon");
  sim_cmd->add_option("--seed", seed, "override master seed");
  sim_cmd->add_option("--rho", rho, "override target spectral radius");
  sim_cmd->add_option("--noise", noise, "override both noise sigmas");
  sim_cmd->add_option("--threads", threads, "worker threads (0 = all, 1 = serial)");

  auto* gen_cmd = app.add_subcommand(
      "gen", "Generate a scenario JSON: random density pattern with auto-placed "
             "sensors, or the 10-state benchmark shape with --paper-style");
  gen_cmd->add_option("--n", gen_n, "state count");
  gen_cmd->add_option("--density", density, "edge density for random patterns");
  gen_cmd->add_option("--seed", seed, "generation seed");
  gen_cmd->add_flag("--paper-style", paper_style,
                    "benchmark shape: three sink SCCs with a contraction, m = 3 sensors");
  gen_cmd->add_option("--out", output, "output path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  auto emit = [&](const std::string& text) {
    if (output.empty())
      std::cout << text << "\n";
    else
      spit(output, text + "\n");
  };

  try {
    if (*analyze_cmd) {
      AnalysisReport rep = analyze(load_system(input), parse_orientation(orientation));
      emit(serialize_report(rep));
      return rep.verdict.observable ? 0 : 3;
    }

    if (*place_cmd) {
      SystemPattern p = load_system(input);
      nlohmann::json doc;
      doc["requirements"] = nlohmann::json::array();
      for (const auto& r : minimal_sensor_placement(p, parse_orientation(orientation))) {
        nlohmann::json req;
        req["state"] = r.state + 1;
        req["type"] = r.type == SensorType::alpha ? "alpha" : "beta";
        doc["requirements"].push_back(req);
      }
      doc["m"] = doc["requirements"].size();
      emit(doc.dump(2));
      return 0;
    }

    if (*classify_cmd) {
      SystemPattern p = load_system(input);
      AnalysisReport rep = analyze(p, parse_orientation(orientation));
      emit(serialize_report(rep));
      return rep.classification.violations.empty() ? 0 : 3;
    }

    if (*plan_cmd) {
      SystemPattern p = load_system(input);
      RecoveryPlan plan =
          plan_recovery(p, {failed_sensor, 0}, parse_orientation(orientation));
      emit(serialize_plan(plan));
      return plan.feasible ? 0 : 3;
    }

    if (*sim_cmd) {
      Scenario sc = parse_scenario(slurp(input));
      if (sim_cmd->count("--trials")) sc.trials = trials;
      if (sim_cmd->count("--horizon")) sc.horizon = horizon;
      if (sim_cmd->count("--seed")) sc.seed = seed;
      if (sim_cmd->count("--rho")) sc.target_rho = rho;
      if (sim_cmd->count("--noise")) sc.sigma_v = sc.sigma_r = noise;
      fs::path dir(output);
      fs::create_directories(dir);
      fs::path csv_path = dir / "mse.csv";
      fs::path summary_path = dir / "summary.json";
      try {
        auto t0 = std::chrono::steady_clock::now();
        SimulationReport rep = run(sc, threads);
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                          .count();
        spit(csv_path, emit_csv(rep));
        spit(summary_path, summarize(rep, secs) + "\n");
        if (!sc.expected_verdicts.empty()) {
          bool match = sc.expected_verdicts.size() == rep.phases.size();
          for (size_t i = 0; match && i < rep.phases.size(); ++i)
            match = rep.phases[i].verdict == sc.expected_verdicts[i];
          if (!match) {
            std::cerr << "expectation mismatch: declared verdicts differ from run\n";
            return 4;
          }
        }
        return 0;
      } catch (...) {
        // Partial outputs are removed when the run fails.
        std::error_code ec;
        fs::remove(csv_path, ec);
        fs::remove(summary_path, ec);
        throw;
      }
    }

    if (*gen_cmd) {
      Scenario sc;
      if (paper_style) {
        sc.pattern = make_benchmark_pattern(seed, gen_n);
        sc.seed = seed;
      } else {
        sc = generate_random_scenario(gen_n, density, seed);
      }
      emit(serialize_scenario(sc));
      return 0;
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
