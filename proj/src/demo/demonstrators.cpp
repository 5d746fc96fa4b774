#include "meso/demo/demonstrators.hpp"

#include <limits>
#include <stdexcept>

#include "meso/engine/episode.hpp"

namespace meso::demo {

double alinea_step(const AlineaParams& p, double n) { return p.KI * (p.threshold - n); }

double gating_step(const GatingParams& p, double n_t, double n_next) {
  return -p.KP * (n_next - n_t) + p.KI * (p.threshold - n_t);
}

int quantize_control(double update) {
  if (update > 0.0) return engine::kRaise;
  if (update < 0.0) return engine::kLower;
  return engine::kHold;
}

std::array<double, 3> teacher_policy(int action, double kappa) {
  if (!(kappa > 0.0 && kappa < 1.0 / 3.0)) throw std::domain_error("teacher_policy: kappa must lie in (0, 1/3)");
  if (action < 0 || action > 2) throw std::domain_error("teacher_policy: action index out of range");
  std::array<double, 3> pi{kappa, kappa, kappa};
  pi[action] = 1.0 - 2.0 * kappa;
  return pi;
}

DemonstratorParams DemonstratorParams::defaults(int agents) {
  DemonstratorParams p;
  p.alinea.assign(agents, AlineaParams{});
  p.gating.assign(agents, GatingParams{});
  return p;
}

void Demonstrator::begin(const engine::Simulator& sim) {
  prev_acc_.assign(sim.num_agents(), 0.0);
  for (int a = 0; a < sim.num_agents(); ++a)
    if (sim.network().agents[a].kind == net::AgentKind::perimeter) prev_acc_[a] = sim.region_accumulation(a);
}

int Demonstrator::action(const engine::Simulator& sim, int agent) const {
  if (sim.network().agents.at(agent).kind == net::AgentKind::ramp) {
    AlineaParams p = params_.alinea.at(agent);
    if (p.threshold <= 0.0) p.threshold = sim.critical_cell_count(agent);
    return quantize_control(alinea_step(p, sim.merge_cell_count(agent)));
  }
  GatingParams p = params_.gating.at(agent);
  if (p.threshold <= 0.0) p.threshold = sim.critical_accumulation(agent);
  double prev = agent < static_cast<int>(prev_acc_.size()) ? prev_acc_[agent] : sim.region_accumulation(agent);
  return quantize_control(gating_step(p, prev, sim.region_accumulation(agent)));
}

std::vector<int> Demonstrator::decide(const engine::Simulator& sim) {
  if (prev_acc_.size() != static_cast<std::size_t>(sim.num_agents())) begin(sim);
  std::vector<int> out(sim.num_agents());
  for (int a = 0; a < sim.num_agents(); ++a) out[a] = action(sim, a);
  for (int a = 0; a < sim.num_agents(); ++a)
    if (sim.network().agents[a].kind == net::AgentKind::perimeter) prev_acc_[a] = sim.region_accumulation(a);
  return out;
}

void Demonstrator::act(engine::Simulator& sim) {
  auto actions = decide(sim);
  for (int a = 0; a < sim.num_agents(); ++a)
    if (sim.active(a)) sim.apply_action(a, actions[a]);
}

TuneResult grid_search_tune(const std::function<engine::Simulator()>& make_sim, const std::vector<int>& agents,
                            const GridSpec& grid) {
  TuneResult result;
  engine::Simulator probe = make_sim();
  const auto& net = probe.network();
  result.best = DemonstratorParams::defaults(probe.num_agents());

  for (int agent : agents) {
    const auto& decl = net.agents.at(agent);
    bool ramp = decl.kind == net::AgentKind::ramp;
    double critical = ramp ? probe.critical_cell_count(agent) : probe.critical_accumulation(agent);
    std::vector<TuneRow> points;
    if (ramp) {
      for (double ki : grid.alinea_KI)
        for (double s : grid.alinea_threshold_scale) points.push_back({decl.id, ki, 0.0, s * critical, 0.0});
    } else {
      for (double kp : grid.gating_KP)
        for (double ki : grid.gating_KI)
          for (double s : grid.gating_threshold_scale) points.push_back({decl.id, ki, kp, s * critical, 0.0});
    }
    if (points.empty()) throw std::invalid_argument("grid_search_tune: empty grid for agent " + decl.id);

    const int n = static_cast<int>(points.size());
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
      engine::Simulator sim = make_sim();
      std::vector<bool> active(sim.num_agents(), false);
      active[agent] = true;
      sim.set_active(active);
      auto params = DemonstratorParams::defaults(sim.num_agents());
      if (ramp) params.alinea[agent] = {points[i].KI, points[i].threshold};
      else params.gating[agent] = {points[i].KP, points[i].KI, points[i].threshold};
      Demonstrator teacher(params);
      teacher.begin(sim);
      auto m = engine::run_episode(sim, [&](engine::Simulator& s) { teacher.act(s); });
      points[i].ttt = m.defined ? m.ttt_s : std::numeric_limits<double>::infinity();
    }
    int best = 0;
    for (int i = 1; i < n; ++i)
      if (points[i].ttt < points[best].ttt) best = i;
    if (ramp) result.best.alinea[agent] = {points[best].KI, points[best].threshold};
    else result.best.gating[agent] = {points[best].KP, points[best].KI, points[best].threshold};
    result.table.insert(result.table.end(), points.begin(), points.end());
  }
  return result;
}

}  // namespace meso::demo
