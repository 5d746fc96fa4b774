// One PASS/FAIL line per acceptance criterion. Exit status 1 if any fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "grad_check.hpp"
#include "meso/drl/learn.hpp"
#include "meso/engine/episode.hpp"
#include "meso/harness/experiment.hpp"
#include "oracle_drivers.hpp"

using namespace meso;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Shared state between criteria: the desk-scale mode-both runs feed three of them.
struct Context {
  fs::path work;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  harness::ExperimentSpec both(const std::string& controller) const {
    harness::ExperimentSpec s;
    s.control = harness::ControlMode::both;
    s.controller = controller;
    s.seeds = seeds;
    s.epochs = 30;
    s.out_dir = (work / "both").string();
    return s;
  }
  std::map<std::string, harness::ExperimentResult> cache;
  double proposed_seconds = 0;
  const harness::ExperimentResult& run_both(const std::string& controller) {
    auto it = cache.find(controller);
    if (it != cache.end()) return it->second;
    auto t0 = std::chrono::steady_clock::now();
    auto res = harness::run_experiment(both(controller));
    if (controller == "proposed") proposed_seconds = seconds_since(t0);
    return cache[controller] = std::move(res);
  }
};

std::vector<double> rewards(const harness::ExperimentResult& r) {
  std::vector<double> out;
  for (const auto& row : r.rows) out.push_back(row.reward);
  return out;
}

engine::SimConfig desk_config(const harness::Scenario& sc) {
  harness::ExperimentSpec s;
  return harness::sim_config_for(s, sc);
}

Outcome mass_conservation(Context&) {
  auto sc = harness::load_scenario("builtin-small");
  auto cfg = desk_config(sc);
  cfg.audit = true;  // exact recounts of every region
  auto t0 = std::chrono::steady_clock::now();
  engine::Simulator sim(sc.network, sc.demand, cfg);
  auto m = engine::run_episode(sim);
  double secs = seconds_since(t0);
  bool ok = m.max_mass_error < 1e-6 && secs < 60 && m.intervals > sim.horizon_intervals();
  return {ok, fmt("max |injected - running - completed| = %.3g veh over %ld intervals, %.1f s", m.max_mass_error,
                  m.intervals, secs)};
}

Outcome flow_audit(Context&) {
  auto sc = harness::load_scenario("builtin-small");
  auto cfg = desk_config(sc);
  cfg.demand_scale *= 1.25;
  cfg.audit = true;
  long violations = 0;
  double worst_delay = 0;
  for (std::uint64_t seed : {1, 2}) {
    cfg.seed = seed;
    engine::Simulator sim(sc.network, sc.demand, cfg);
    // Exercise metered and gated branches too.
    std::vector<bool> active(sim.num_agents(), true);
    sim.set_active(active);
    sim.reset(seed);
    auto m = engine::run_episode(sim, [](engine::Simulator& s) {
      for (int a = 0; a < s.num_agents(); ++a) s.apply_action(a, (s.time() / 300 + a) % 3);
    });
    violations += m.audit_violations;
    worst_delay = std::max(worst_delay, m.delay);
  }
  return {violations == 0 && worst_delay > 0.5,
          fmt("%ld violations over 2 congested episodes (delay index up to %.2f)", violations, worst_delay)};
}

Outcome oracle_equivalence(Context&) {
  std::string dir = MESO_ORACLE_DIR;
  double road = testing::max_abs_diff(testing::freeway_trajectory(),
                                      testing::read_table(dir + "/freeway_trajectory.csv"));
  double region = testing::max_abs_diff(testing::region_trajectory(),
                                        testing::read_table(dir + "/region_trajectory.csv"));
  return {road < 1e-9 && region < 1e-9,
          fmt("3-cell road max diff %.3g, single region max diff %.3g over 100 intervals", road, region)};
}

Outcome gradient_check(Context&) {
  auto t0 = std::chrono::steady_clock::now();
  auto standard = testing::check_combined_loss_gradient(20, 2024, false);
  auto conventional = testing::check_combined_loss_gradient(20, 2025, true);
  double secs = seconds_since(t0);
  double worst = std::max(standard.worst_rel_error, conventional.worst_rel_error);
  return {worst < 1e-4 && secs < 30 && standard.draws >= 20,
          fmt("worst relative error %.3g over %d draws per loss direction, %.1f s", worst, standard.draws, secs)};
}

Outcome schedules(Context&) {
  drl::Hyperparams hp;
  bool ok = drl::anneal_factor(hp, 0) == 200.0 && drl::epsilon_schedule(hp, 0) == 0.1 &&
            drl::epsilon_schedule(hp, 100) == 0.01 && drl::epsilon_schedule(hp, 1000) == 0.01;
  for (int m = 51; m <= 200; ++m) ok &= drl::anneal_factor(hp, m) == 0.0;
  return {ok, fmt("alpha(0)=%.17g alpha(51)=%g eps(0)=%.17g eps(100)=%.17g", drl::anneal_factor(hp, 0),
                  drl::anneal_factor(hp, 51), drl::epsilon_schedule(hp, 0), drl::epsilon_schedule(hp, 100))};
}

Outcome noop_equivalence(Context&) {
  auto sc = harness::load_scenario("builtin-small");
  auto cfg = desk_config(sc);
  engine::Simulator free(sc.network, sc.demand, cfg);
  engine::Simulator pinned(sc.network, sc.demand, cfg);
  pinned.set_active(std::vector<bool>(sc.network.agents.size(), true));
  auto a = engine::run_episode(free);
  auto b = engine::run_episode(pinned, [](engine::Simulator& s) {
    for (int i = 0; i < s.num_agents(); ++i) s.set_rate(i, 1.0);
  });
  bool same = free.log().running == pinned.log().running && free.log().completions == pinned.log().completions &&
              a.ttt_s == b.ttt_s && a.intervals == b.intervals;
  return {same, fmt("%zu intervals compared, TTT %.17g vs %.17g", free.log().running.size(), a.ttt_s, b.ttt_s)};
}

Outcome demonstrator_efficacy(Context& ctx) {
  harness::ExperimentSpec s;
  s.control = harness::ControlMode::ramp;
  s.controller = "demonstrator";
  s.seeds = ctx.seeds;
  s.out_dir = (ctx.work / "ramp").string();
  auto t0 = std::chrono::steady_clock::now();
  auto res = harness::run_experiment(s);
  double secs = seconds_since(t0);
  bool ok = secs < 600;
  std::string gains;
  for (const auto& r : res.rows) {
    double gain = r.reward / (r.reward + r.ttt);
    ok &= gain >= 0.05;
    gains += fmt(" %.1f%%", 100 * gain);
  }
  return {ok, "TTT reduction per seed:" + gains + fmt(", %.0f s", secs)};
}

Outcome student_vs_teacher(Context& ctx) {
  double teacher = mean(rewards(ctx.run_both("demonstrator")));
  double student = mean(rewards(ctx.run_both("proposed")));
  return {student >= teacher && ctx.proposed_seconds < 1800,
          fmt("mean reward proposed %.2f vs demonstrator %.2f (30 epochs, %.0f s)", student, teacher,
              ctx.proposed_seconds)};
}

Outcome ablation(Context& ctx) {
  double proposed = mean(rewards(ctx.run_both("proposed")));
  double plain = mean(rewards(ctx.run_both("no-demonstrator")));
  return {proposed >= plain, fmt("mean reward proposed %.2f vs no-demonstrator %.2f", proposed, plain)};
}

Outcome sensitivity(Context& ctx) {
  ctx.run_both("proposed");
  auto rows = harness::sensitivity_sweep(ctx.both("proposed"), {0.6, 1.1});
  std::vector<double> low, high;
  for (const auto& r : rows) (r.scale < 1.0 ? low : high).push_back(r.gap());
  double g_low = mean(low), g_high = mean(high);
  return {g_high > 0 && std::abs(g_low) <= 0.2 * g_high,
          fmt("mean TTT gap %.2f s at 0.6 vs %.2f s at 1.1", g_low, g_high)};
}

Outcome determinism(Context& ctx) {
  harness::ExperimentSpec s;
  s.control = harness::ControlMode::ramp;
  s.controller = "proposed";
  s.seeds = {1, 2};
  s.epochs = 2;
  std::vector<std::string> files;
  for (const char* tag : {"det_a", "det_b"}) {
    s.out_dir = (ctx.work / tag).string();
    fs::remove_all(s.out_dir);
    harness::export_results(harness::run_experiment(s).rows, s.out_dir, "results");
  }
  std::vector<std::string> names{"results.csv", "results_aggregate.csv", "train_ramp_proposed_seed1.csv",
                                 "train_ramp_proposed_seed2.csv"};
  bool same = true;
  for (const auto& n : names) {
    auto a = slurp(ctx.work / "det_a" / n), b = slurp(ctx.work / "det_b" / n);
    same &= !a.empty() && a == b;
  }
  return {same, fmt("%zu CSVs compared byte for byte across two runs", names.size())};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string work = "acceptance_work";
  std::vector<std::string> only;
  app.add_option("--work", work, "scratch directory for experiment outputs");
  app.add_option("--only", only, "run a subset by name")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome(Context&)>>> checks{
      {"mass_conservation", mass_conservation},
      {"flow_constraint_audit", flow_audit},
      {"oracle_equivalence", oracle_equivalence},
      {"gradient_correctness", gradient_check},
      {"schedule_exactness", schedules},
      {"noop_equivalence", noop_equivalence},
      {"demonstrator_efficacy", demonstrator_efficacy},
      {"student_vs_teacher", student_vs_teacher},
      {"ablation_ordering", ablation},
      {"sensitivity_shape", sensitivity},
      {"determinism", determinism},
  };

  Context ctx;
  ctx.work = work;
  fs::create_directories(ctx.work);
  int failed = 0;
  for (const auto& [name, fn] : checks) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    Outcome o;
    try {
      o = fn(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
