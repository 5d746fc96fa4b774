#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "meso/drl/trainer.hpp"
#include "meso/engine/episode.hpp"
#include "meso/harness/experiment.hpp"

using namespace meso;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("meso_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int mesoctl(const std::string& args, const fs::path& log) {
  std::string cmd = std::string(MESOCTL_PATH) + " " + args + " > " + log.string() + " 2>&1";
  int rc = std::system(cmd.c_str());
  return rc == -1 ? -1 : WEXITSTATUS(rc);
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("results CSV round trip") {
    auto dir = scratch("csv");
    std::vector<harness::ResultRow> rows{{"ramp", "proposed", 12.5, 980.125, 0.4, 40.0, 1},
                                         {"ramp", "proposed", 10.0, 1e3 / 3, 0.5, 41.0, 2}};
    harness::export_results(rows, dir.string(), "r");
    auto back = harness::read_results((dir / "r.csv").string());
    REQUIRE(back.size() == 2);
    CHECK(back[1].ttt == rows[1].ttt);
    CHECK(back[1].seed == 2);
    CHECK(back[0].model == "proposed");
    CHECK(slurp(dir / "r_aggregate.csv").find("ramp,proposed,11.25,") != std::string::npos);
  }

  TEST_CASE("empty result set writes header-only files") {
    auto dir = scratch("empty");
    harness::export_results({}, dir.string(), "r");
    CHECK(slurp(dir / "r.csv") == "control,model,reward,TTT,delay,speed,seed\n");
    CHECK(harness::read_results((dir / "r.csv").string()).empty());
    CHECK(slurp(dir / "r_aggregate.csv").find('\n') == slurp(dir / "r_aggregate.csv").size() - 1);
  }

  TEST_CASE("aggregate uses sample standard deviation in first-appearance order") {
    std::vector<harness::ResultRow> rows{{"b", "m", 1, 0, 0, 0, 1}, {"a", "m", 5, 0, 0, 0, 1},
                                         {"b", "m", 3, 0, 0, 0, 2}};
    auto agg = harness::aggregate(rows);
    REQUIRE(agg.size() == 2);
    CHECK(agg[0].control == "b");
    CHECK(agg[0].reward_mean == 2);
    CHECK(agg[0].reward_std == doctest::Approx(std::sqrt(2.0)));
    CHECK(agg[1].reward_std == 0);
    CHECK(agg[0].seeds == 2);
  }

  TEST_CASE("spec validation names the problem") {
    harness::ExperimentSpec s;
    s.demand_scale = 5;
    CHECK_THROWS_WITH(harness::validate(s), doctest::Contains("demand scale"));
    s = {};
    s.seeds.clear();
    CHECK_THROWS_WITH(harness::validate(s), doctest::Contains("seed"));
    s = {};
    s.controller = "ppo";
    CHECK_THROWS(harness::validate(s));
    s = {};
    s.scenario = "/nonexistent/net.json";
    CHECK_THROWS_WITH(harness::validate(s), doctest::Contains("not found"));
    CHECK_THROWS(harness::parse_control("all"));
  }

  TEST_CASE("desk overrides apply only below full scale") {
    harness::ExperimentSpec s;
    s.epochs = 30;
    auto desk = harness::hyperparams_for(s);
    CHECK(desk.lr == 1e-3);
    CHECK(desk.updates_per_epoch == 50);
    CHECK(desk.alpha_term == 30);
    s.desk_scale = 1.0;
    s.epochs = 100;
    auto full = harness::hyperparams_for(s);
    drl::Hyperparams table;
    CHECK(full.lr == table.lr);
    CHECK(full.alpha_term == table.alpha_term);
    CHECK(full.updates_per_epoch == table.updates_per_epoch);
    auto sc = harness::load_scenario("builtin-small");
    CHECK(harness::sim_config_for(s, sc).horizon_s == sc.demand.horizon_s);
    s.desk_scale = 0.25;
    auto cfg = harness::sim_config_for(s, sc);
    CHECK(cfg.horizon_s == 3600);
    CHECK(cfg.demand_scale == doctest::Approx(0.25));
  }

  TEST_CASE("shipped scenario file matches the builtin network") {
    auto file = harness::load_scenario(std::string(MESO_SCENARIO_DIR) + "/small.json");
    auto builtin = harness::load_scenario("builtin-small");
    REQUIRE(file.network.roads.size() == builtin.network.roads.size());
    CHECK(file.demand.total_volume == builtin.demand.total_volume);
    engine::SimConfig cfg;
    cfg.horizon_s = 600;
    cfg.demand_scale = 0.25 * 600 / 3600;
    engine::Simulator a(file.network, file.demand, cfg), b(builtin.network, builtin.demand, cfg);
    CHECK(engine::run_episode(a).ttt_s == engine::run_episode(b).ttt_s);
  }

  TEST_CASE("demonstrator parameters round trip") {
    auto dir = scratch("demo");
    auto p = demo::DemonstratorParams::defaults(3);
    p.alinea[1] = {0.02, 7.5};
    p.gating[2] = {0.05, 0.01, 1000};
    harness::save_demonstrator((dir / "d.json").string(), p);
    auto q = harness::load_demonstrator((dir / "d.json").string());
    CHECK(q.alinea[1].threshold == 7.5);
    CHECK(q.gating[2].KP == 0.05);
  }

  TEST_CASE("short training run is reproducible and logs every epoch") {
    auto sc = harness::load_scenario("builtin-small");
    engine::SimConfig cfg;
    cfg.horizon_s = 300;
    cfg.demand_scale = 0.25 * 300 / 3600;
    cfg.drain_cap_factor = 8;
    drl::TrainSpec spec;
    spec.hp.epochs = 3;
    spec.hp.updates_per_epoch = 2;
    spec.hp.batch = 8;
    spec.hp.width = 8;
    spec.hp.hidden = 4;
    spec.hp.clone_every = 2;
    spec.hp.lr = 1e-3;
    spec.active = harness::active_agents(sc.network, harness::ControlMode::ramp);
    spec.teacher = demo::DemonstratorParams::defaults(static_cast<int>(sc.network.agents.size()));
    auto run = [&] {
      engine::Simulator sim(sc.network, sc.demand, cfg);
      return drl::train(sim, spec);
    };
    auto a = run();
    auto b = run();
    CHECK(a.log.size() == 3);
    CHECK(a.clone_epochs == std::vector<int>{1});
    REQUIRE(a.agents.size() == 4);
    for (std::size_t i = 0; i < a.agents.size(); ++i) CHECK(a.agents[i].net.params() == b.agents[i].net.params());
    CHECK(a.log[0].alpha == 200.0);
    engine::Simulator sim(sc.network, sc.demand, cfg);
    auto m = drl::evaluate(sim, a.agents, drl::Mode::proposed, 1);
    CHECK(m.defined);
  }

  TEST_CASE("command line exit codes") {
    auto dir = scratch("cli");
    auto log = dir / "log.txt";
    CHECK(mesoctl("", log) != 0);
    CHECK(mesoctl("run --mode sideways", log) != 0);
    CHECK(mesoctl("run --demand-scale 9", log) != 0);
    CHECK(mesoctl("run --scenario /nonexistent.json --out " + dir.string(), log) == 1);
    CHECK(slurp(log).find("error:") != std::string::npos);
    CHECK(mesoctl("sweep --mode ramp --controller demonstrator --seeds 1 --out " + (dir / "none").string(), log) == 1);
    CHECK(slurp(log).find("error:") != std::string::npos);
    CHECK(mesoctl("run --mode none --seeds 1,2 --out " + dir.string(), log) == 0);
    auto rows = harness::read_results((dir / "results.csv").string());
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].reward == 0.0);
    CHECK(rows[0].model == "none");
  }
}
