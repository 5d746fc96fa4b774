#include "meso/harness/experiment.hpp"

#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "meso/engine/episode.hpp"

namespace meso::harness {

namespace fs = std::filesystem;

ControlMode parse_control(const std::string& s) {
  if (s == "none") return ControlMode::none;
  if (s == "ramp") return ControlMode::ramp;
  if (s == "perimeter") return ControlMode::perimeter;
  if (s == "both") return ControlMode::both;
  throw std::invalid_argument("unknown control mode '" + s + "' (none|ramp|perimeter|both)");
}

std::string to_string(ControlMode m) {
  switch (m) {
    case ControlMode::none: return "none";
    case ControlMode::ramp: return "ramp";
    case ControlMode::perimeter: return "perimeter";
    case ControlMode::both: return "both";
  }
  return "?";
}

std::vector<bool> active_agents(const net::Network& net, ControlMode mode) {
  std::vector<bool> on(net.agents.size(), false);
  for (std::size_t a = 0; a < on.size(); ++a) {
    bool ramp = net.agents[a].kind == net::AgentKind::ramp;
    on[a] = mode == ControlMode::both || (mode == ControlMode::ramp && ramp) ||
            (mode == ControlMode::perimeter && !ramp);
  }
  return on;
}

namespace {

bool is_demonstrator(const std::string& c) { return c == "demonstrator"; }

drl::Mode drl_mode(const std::string& c) {
  if (c == "drqn") return drl::Mode::no_demonstrator_no_nsteps;
  return drl::parse_mode(c);
}

std::string seed_tag(std::uint64_t seed) { return "seed" + std::to_string(seed); }

std::string run_tag(ControlMode control, const std::string& model, std::uint64_t seed) {
  return to_string(control) + "_" + model + "_" + seed_tag(seed);
}

// Runs body(i) for every index in parallel, rethrowing the first failure in index order.
template <class F>
void parallel_each(int n, F body) {
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

engine::EpisodeMetrics no_control(engine::Simulator& sim, std::uint64_t seed) {
  sim.set_active(std::vector<bool>(sim.num_agents(), false));
  sim.reset(seed);
  return engine::run_episode(sim);
}

engine::EpisodeMetrics run_demonstrator(engine::Simulator& sim, const std::vector<bool>& active,
                                        const demo::DemonstratorParams& params, std::uint64_t seed) {
  sim.set_active(active);
  sim.reset(seed);
  demo::Demonstrator teacher(params);
  teacher.begin(sim);
  return engine::run_episode(sim, [&](engine::Simulator& s) { teacher.act(s); });
}

std::vector<int> indices_of(const std::vector<bool>& active) {
  std::vector<int> out;
  for (std::size_t a = 0; a < active.size(); ++a)
    if (active[a]) out.push_back(static_cast<int>(a));
  return out;
}

demo::TuneResult tune(const Scenario& sc, const engine::SimConfig& cfg, const std::vector<bool>& active,
                      const demo::GridSpec& grid, std::uint64_t seed) {
  engine::SimConfig c = cfg;
  c.seed = seed;
  return demo::grid_search_tune([&] { return engine::Simulator(sc.network, sc.demand, c); }, indices_of(active),
                                grid);
}

ResultRow make_row(ControlMode control, const std::string& model, const engine::EpisodeMetrics& nc,
                   const engine::EpisodeMetrics& m, std::uint64_t seed) {
  ResultRow r;
  r.control = to_string(control);
  r.model = model;
  r.reward = nc.ttt_s - m.ttt_s;
  r.ttt = m.ttt_s;
  r.delay = m.delay;
  r.speed = m.speed_kmh;
  r.seed = seed;
  return r;
}

// Dynamics CSV sinks for one evaluation episode.
struct DumpFiles {
  std::ofstream cells, regions;
  DumpFiles(const std::string& dir, const std::string& tag) {
    std::string c = (fs::path(dir) / ("dynamics_" + tag + "_cells.csv")).string();
    std::string r = (fs::path(dir) / ("dynamics_" + tag + "_regions.csv")).string();
    cells.open(c);
    regions.open(r);
    if (!cells) throw std::runtime_error("cannot write '" + c + "'");
    if (!regions) throw std::runtime_error("cannot write '" + r + "'");
    cells << "t,road,cell,n\n";
    regions << "t,region,accumulation,speed,inflow,outflow\n";
  }
  engine::DynamicsDump dump() { return {&cells, &regions, 10}; }
};

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory '" + dir + "': " + ec.message());
}

std::string checkpoint_dir(const ExperimentSpec& spec) { return (fs::path(spec.out_dir) / "checkpoints").string(); }

std::string checkpoint_path(const ExperimentSpec& spec, const std::string& model, std::uint64_t seed,
                            const std::string& agent) {
  return (fs::path(checkpoint_dir(spec)) / (run_tag(spec.control, model, seed) + "_" + agent + ".json")).string();
}

std::string demonstrator_path(const ExperimentSpec& spec, std::uint64_t seed) {
  return (fs::path(checkpoint_dir(spec)) / (run_tag(spec.control, "demonstrator", seed) + ".json")).string();
}

// Evaluates one controller for one seed, training or tuning first. `teacher`
// is filled lazily so the ablation suite can share one tuning per seed.
ResultRow run_one(const ExperimentSpec& spec, const Scenario& sc, const std::string& controller, std::uint64_t seed,
                  const engine::EpisodeMetrics& nc, std::unique_ptr<demo::DemonstratorParams>& teacher) {
  const engine::SimConfig cfg = sim_config_for(spec, sc);
  const auto active = active_agents(sc.network, spec.control);
  std::unique_ptr<DumpFiles> dump;
  auto eval_sim = [&](const engine::SimConfig& c) {
    auto sim = std::make_unique<engine::Simulator>(sc.network, sc.demand, c);
    if (spec.dump_dynamics) {
      dump = std::make_unique<DumpFiles>(spec.out_dir, run_tag(spec.control, controller, seed));
      sim->set_dump(dump->dump());
    }
    return sim;
  };
  auto need_teacher = [&] {
    if (!teacher) teacher = std::make_unique<demo::DemonstratorParams>(tune(sc, cfg, active, spec.grid, seed).best);
    return *teacher;
  };

  if (is_demonstrator(controller)) {
    auto params = need_teacher();
    save_demonstrator(demonstrator_path(spec, seed), params);
    auto sim = eval_sim(cfg);
    return make_row(spec.control, controller, nc, run_demonstrator(*sim, active, params, seed), seed);
  }

  const drl::Mode mode = drl_mode(controller);
  engine::SimConfig train_cfg = cfg;
  train_cfg.reward_baseline = nc.intervals > 0 ? nc.completions / static_cast<double>(nc.intervals) : 0.0;
  drl::TrainSpec ts;
  ts.hp = hyperparams_for(spec);
  ts.mode = mode;
  ts.seed = seed;
  ts.active = active;
  if (drl::uses_demonstrator(mode)) ts.teacher = need_teacher();
  engine::Simulator train_sim(sc.network, sc.demand, train_cfg);
  auto trained = drl::train(train_sim, ts);

  drl::write_train_log((fs::path(spec.out_dir) / ("train_" + run_tag(spec.control, controller, seed) + ".csv")).string(),
                       trained.log);
  for (const auto& agent : trained.agents)
    drl::save_checkpoint(checkpoint_path(spec, controller, seed, agent.id), agent, ts.hp, mode);

  auto sim = eval_sim(train_cfg);
  return make_row(spec.control, controller, nc, drl::evaluate(*sim, trained.agents, mode, seed), seed);
}

ExperimentResult run_controllers(const ExperimentSpec& spec, const std::vector<std::string>& controllers) {
  validate(spec);
  Scenario sc = load_scenario(spec.scenario, spec.demand_path);
  ensure_dir(spec.out_dir);
  ensure_dir(checkpoint_dir(spec));
  const engine::SimConfig cfg = sim_config_for(spec, sc);
  const int S = static_cast<int>(spec.seeds.size());
  const int C = static_cast<int>(controllers.size());
  std::vector<engine::EpisodeMetrics> nc(S);
  parallel_each(S, [&](int i) {
    engine::Simulator sim(sc.network, sc.demand, cfg);
    nc[i] = no_control(sim, spec.seeds[i]);
  });

  ExperimentResult out;
  if (spec.control == ControlMode::none) {
    for (int i = 0; i < S; ++i) out.rows.push_back(make_row(spec.control, "none", nc[i], nc[i], spec.seeds[i]));
    out.summary = aggregate(out.rows);
    return out;
  }

  // Tuning first (shared across controllers of the same seed), then every (controller, seed) job.
  std::vector<std::unique_ptr<demo::DemonstratorParams>> teachers(S);
  bool any_teacher = false;
  for (const auto& c : controllers) any_teacher |= is_demonstrator(c) || drl::uses_demonstrator(drl_mode(c));
  if (any_teacher) {
    const auto active = active_agents(sc.network, spec.control);
    for (int i = 0; i < S; ++i)
      teachers[i] = std::make_unique<demo::DemonstratorParams>(tune(sc, cfg, active, spec.grid, spec.seeds[i]).best);
  }
  std::vector<ResultRow> rows(static_cast<std::size_t>(S) * C);
  parallel_each(S * C, [&](int job) {
    const int c = job / S, i = job % S;
    auto teacher = teachers[i] ? std::make_unique<demo::DemonstratorParams>(*teachers[i]) : nullptr;
    rows[job] = run_one(spec, sc, controllers[c], spec.seeds[i], nc[i], teacher);
  });
  out.rows = std::move(rows);
  out.summary = aggregate(out.rows);
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean_of(v), s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

}  // namespace

void validate(const ExperimentSpec& spec) {
  if (spec.seeds.empty()) throw std::invalid_argument("at least one seed is required");
  if (!(spec.demand_scale >= 0.1 && spec.demand_scale <= 3.0))
    throw std::invalid_argument("demand scale must lie in [0.1, 3]");
  if (!(spec.desk_scale > 0.0 && spec.desk_scale <= 1.0)) throw std::invalid_argument("desk scale must lie in (0, 1]");
  if (spec.epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (!is_demonstrator(spec.controller)) drl_mode(spec.controller);
  if (spec.scenario != "builtin-small" && !fs::exists(spec.scenario))
    throw std::invalid_argument("scenario config '" + spec.scenario + "' not found");
  load_scenario(spec.scenario, spec.demand_path);
}

drl::Hyperparams hyperparams_for(const ExperimentSpec& spec) {
  drl::Hyperparams hp;
  hp.epochs = spec.epochs;
  hp.paper_literal_nstep = spec.paper_literal_nstep;
  hp.conventional_ce = spec.conventional_ce;
  if (spec.desk_scale < 1.0) {
    hp.lr = 1e-3;
    hp.updates_per_epoch = 50;
    if (spec.epochs > 0) {
      // Same sigmoid shape, time axis stretched so alpha reaches 0 at the last epoch.
      hp.alpha_step = hp.alpha_step * hp.alpha_term / spec.epochs;
      hp.alpha_term = spec.epochs;
    }
  }
  return hp;
}

engine::SimConfig sim_config_for(const ExperimentSpec& spec, const Scenario& sc) {
  engine::SimConfig cfg;
  const bool desk = spec.desk_scale < 1.0;
  cfg.horizon_s = desk ? 3600.0 : sc.demand.horizon_s;
  cfg.demand_scale = spec.demand_scale * spec.desk_scale;
  return cfg;
}

double reward_baseline(const net::Network& net, const engine::DemandProfile& demand, engine::SimConfig cfg,
                       std::uint64_t seed) {
  engine::Simulator sim(net, demand, cfg);
  auto m = no_control(sim, seed);
  return m.intervals > 0 ? m.completions / static_cast<double>(m.intervals) : 0.0;
}

std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows) {
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<const ResultRow*>> groups;
  for (const auto& r : rows) {
    auto key = std::make_pair(r.control, r.model);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&r);
  }
  std::vector<AggregateRow> out;
  for (const auto& key : order) {
    std::vector<double> reward, ttt, delay, speed;
    for (const auto* r : groups[key]) {
      reward.push_back(r->reward);
      ttt.push_back(r->ttt);
      delay.push_back(r->delay);
      speed.push_back(r->speed);
    }
    out.push_back({key.first, key.second, mean_of(reward), std_of(reward), mean_of(ttt), std_of(ttt),
                   mean_of(delay), std_of(delay), mean_of(speed), std_of(speed),
                   static_cast<int>(groups[key].size())});
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) { return run_controllers(spec, {spec.controller}); }

ExperimentResult ablation_suite(const ExperimentSpec& spec) {
  if (spec.control == ControlMode::none) throw std::invalid_argument("ablation suite needs a controlled mode");
  return run_controllers(spec, {"proposed", "no-nsteps", "no-demonstrator", "no-demonstrator-no-nsteps"});
}

std::vector<SweepRow> sensitivity_sweep(const ExperimentSpec& spec, const std::vector<double>& scales) {
  validate(spec);
  if (spec.control == ControlMode::none) throw std::invalid_argument("sensitivity sweep needs a controlled mode");
  Scenario sc = load_scenario(spec.scenario, spec.demand_path);
  const auto active = active_agents(sc.network, spec.control);
  const bool demo_ctl = is_demonstrator(spec.controller);

  // Load every controller before simulating anything.
  std::vector<demo::DemonstratorParams> teachers;
  std::vector<std::vector<drl::AgentModel>> models;
  drl::Mode mode = drl::Mode::proposed;
  for (auto seed : spec.seeds) {
    if (demo_ctl) {
      teachers.push_back(load_demonstrator(demonstrator_path(spec, seed)));
      continue;
    }
    engine::Simulator probe(sc.network, sc.demand, sim_config_for(spec, sc));
    std::vector<drl::AgentModel> agents;
    for (int a = 0; a < probe.num_agents(); ++a) {
      if (!active[a]) continue;
      std::string path = checkpoint_path(spec, spec.controller, seed, sc.network.agents[a].id);
      if (!fs::exists(path)) throw std::runtime_error("missing checkpoint '" + path + "'");
      auto m = drl::load_checkpoint(path, probe.observation_dim(a), nullptr, &mode);
      m.agent = a;
      agents.push_back(std::move(m));
    }
    models.push_back(std::move(agents));
  }

  const int S = static_cast<int>(spec.seeds.size());
  const int K = static_cast<int>(scales.size());
  for (double s : scales)
    if (!(s >= 0.1 && s <= 3.0)) throw std::invalid_argument("sweep scale must lie in [0.1, 3]");
  std::vector<SweepRow> rows(static_cast<std::size_t>(S) * K);
  parallel_each(S * K, [&](int job) {
    const int k = job / S, i = job % S;
    ExperimentSpec at = spec;
    at.demand_scale = scales[k];
    engine::SimConfig cfg = sim_config_for(at, sc);
    engine::Simulator sim(sc.network, sc.demand, cfg);
    auto nc = no_control(sim, spec.seeds[i]);
    auto m = demo_ctl ? run_demonstrator(sim, active, teachers[i], spec.seeds[i])
                      : drl::evaluate(sim, models[i], mode, spec.seeds[i]);
    SweepRow& r = rows[job];
    r.scale = scales[k];
    r.control = to_string(spec.control);
    r.model = spec.controller;
    r.seed = spec.seeds[i];
    r.ttt_nocontrol = nc.ttt_s;
    r.ttt = m.ttt_s;
    r.delay_nocontrol = nc.delay;
    r.delay = m.delay;
    r.speed_nocontrol = nc.speed_kmh;
    r.speed = m.speed_kmh;
  });
  return rows;
}

TuneOutput run_tuning(const ExperimentSpec& spec) {
  validate(spec);
  if (spec.control == ControlMode::none) throw std::invalid_argument("tuning needs a controlled mode");
  Scenario sc = load_scenario(spec.scenario, spec.demand_path);
  ensure_dir(spec.out_dir);
  ensure_dir(checkpoint_dir(spec));
  const auto cfg = sim_config_for(spec, sc);
  const auto active = active_agents(sc.network, spec.control);
  TuneOutput out;
  for (auto seed : spec.seeds) {
    auto res = tune(sc, cfg, active, spec.grid, seed);
    save_demonstrator(demonstrator_path(spec, seed), res.best);
    for (auto& row : res.table) {
      out.seed.push_back(seed);
      out.rows.push_back(row);
    }
  }
  return out;
}

void export_results(const std::vector<ResultRow>& rows, const std::string& dir, const std::string& stem) {
  ensure_dir(dir);
  std::string path = (fs::path(dir) / (stem + ".csv")).string();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "control,model,reward,TTT,delay,speed,seed\n";
  for (const auto& r : rows)
    out << r.control << ',' << r.model << ',' << fmt(r.reward) << ',' << fmt(r.ttt) << ',' << fmt(r.delay) << ','
        << fmt(r.speed) << ',' << r.seed << '\n';
  if (!out) throw std::runtime_error("failed writing '" + path + "'");

  std::string apath = (fs::path(dir) / (stem + "_aggregate.csv")).string();
  std::ofstream agg(apath);
  if (!agg) throw std::runtime_error("cannot write '" + apath + "'");
  agg << "control,model,reward_mean,reward_std,TTT_mean,TTT_std,delay_mean,delay_std,speed_mean,speed_std,seeds\n";
  for (const auto& a : aggregate(rows))
    agg << a.control << ',' << a.model << ',' << fmt(a.reward_mean) << ',' << fmt(a.reward_std) << ','
        << fmt(a.ttt_mean) << ',' << fmt(a.ttt_std) << ',' << fmt(a.delay_mean) << ',' << fmt(a.delay_std) << ','
        << fmt(a.speed_mean) << ',' << fmt(a.speed_std) << ',' << a.seeds << '\n';
  if (!agg) throw std::runtime_error("failed writing '" + apath + "'");
}

std::vector<ResultRow> read_results(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::string line;
  std::getline(in, line);
  if (line != "control,model,reward,TTT,delay,speed,seed") throw std::runtime_error(path + ": unexpected header");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 7) throw std::runtime_error(path + ": malformed row '" + line + "'");
    rows.push_back({f[0], f[1], std::stod(f[2]), std::stod(f[3]), std::stod(f[4]), std::stod(f[5]),
                    std::stoull(f[6])});
  }
  return rows;
}

void write_sweep(const std::vector<SweepRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "scale,control,model,seed,TTT_nocontrol,TTT,delay_nocontrol,delay,speed_nocontrol,speed,gap\n";
  for (const auto& r : rows)
    out << fmt(r.scale) << ',' << r.control << ',' << r.model << ',' << r.seed << ',' << fmt(r.ttt_nocontrol) << ','
        << fmt(r.ttt) << ',' << fmt(r.delay_nocontrol) << ',' << fmt(r.delay) << ',' << fmt(r.speed_nocontrol) << ','
        << fmt(r.speed) << ',' << fmt(r.gap()) << '\n';
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

void write_tune(const TuneOutput& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "agent,KI,KP,threshold,TTT,seed\n";
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    out << r.agent << ',' << fmt(r.KI) << ',' << fmt(r.KP) << ',' << fmt(r.threshold) << ',' << fmt(r.ttt) << ','
        << t.seed[i] << '\n';
  }
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

void save_demonstrator(const std::string& path, const demo::DemonstratorParams& p) {
  nlohmann::json doc;
  doc["alinea"] = nlohmann::json::array();
  doc["gating"] = nlohmann::json::array();
  for (const auto& a : p.alinea) doc["alinea"].push_back({{"KI", a.KI}, {"threshold", a.threshold}});
  for (const auto& g : p.gating) doc["gating"].push_back({{"KP", g.KP}, {"KI", g.KI}, {"threshold", g.threshold}});
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << doc.dump(1) << '\n';
}

demo::DemonstratorParams load_demonstrator(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing demonstrator parameters '" + path + "'");
  auto doc = nlohmann::json::parse(in);
  demo::DemonstratorParams p;
  for (const auto& a : doc.at("alinea")) p.alinea.push_back({a.at("KI").get<double>(), a.at("threshold").get<double>()});
  for (const auto& g : doc.at("gating"))
    p.gating.push_back({g.at("KP").get<double>(), g.at("KI").get<double>(), g.at("threshold").get<double>()});
  return p;
}

}  // namespace meso::harness
