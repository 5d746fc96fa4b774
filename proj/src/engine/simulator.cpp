#include "meso/engine/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "meso/net/mfd.hpp"

namespace meso::engine {

namespace {

std::vector<Path> plan_all(const net::Network& net, const net::RegionGraph& graph, const DemandProfile& demand) {
  std::vector<Path> paths;
  for (const auto& od : demand.od) {
    int o = net.region_index(od.origin), d = net.region_index(od.destination);
    if (o < 0) throw net::ConfigError("demand: unknown origin region '" + od.origin + "'");
    if (d < 0) throw net::ConfigError("demand: unknown destination region '" + od.destination + "'");
    paths.push_back(plan_trip(net, graph, o, d));
  }
  return paths;
}

std::vector<std::vector<int>> exit_table(const net::Network& net, const std::vector<Path>& paths) {
  std::vector<std::vector<int>> exits(net.roads.size(), std::vector<int>(paths.size(), -1));
  for (std::size_t p = 0; p < paths.size(); ++p)
    for (const auto& leg : paths[p].legs)
      if (leg.unit.is_road()) exits[leg.unit.index][p] = leg.exit_cell;
  return exits;
}

double free_speed(const net::RegionSpec& spec) { return net::region_mfd_speed(0.0, spec); }

}  // namespace

Simulator::Simulator(const net::Network& net, const DemandProfile& demand, SimConfig cfg)
    : net_(&net),
      demand_(demand),
      cfg_(cfg),
      graph_(net::partition_network(net)),
      paths_(plan_all(net, graph_, demand)),
      freeway_(net, static_cast<int>(paths_.size()), exit_table(net, paths_), cfg.actm) {
  if (!(cfg_.du > 0) || !(cfg_.u_min > 0) || cfg_.u_min > cfg_.u_max)
    throw net::ConfigError("simulator: invalid control bounds");
  if (cfg_.decision_interval < 1) throw net::ConfigError("simulator: decision interval must be >= 1");
  const int P = static_cast<int>(paths_.size());
  const int R = static_cast<int>(net.regions.size());
  const int E = static_cast<int>(net.roads.size());
  horizon_ = std::lround(cfg_.horizon_s / net.dt_s);

  region_next_.assign(R, std::vector<int>(P, -1));
  road_next_.assign(E, std::vector<int>(P, -1));
  road_km_.assign(E, std::vector<double>(P, 0.0));
  road_cells_.assign(E, std::vector<int>(P, 0));
  region_paths_end_.assign(R, {});
  origin_of_path_.resize(P);
  for (int p = 0; p < P; ++p) {
    const auto& legs = paths_[p].legs;
    origin_of_path_[p] = paths_[p].origin;
    std::set<int> seen;
    for (std::size_t i = 0; i < legs.size(); ++i) {
      if (!seen.insert(legs[i].vertex).second)
        throw PlanningError("path " + net.regions[paths_[p].origin].id + " -> " +
                            net.regions[paths_[p].destination].id + " revisits a unit");
      int next = i + 1 < legs.size() ? legs[i + 1].link_in : -1;
      const auto& u = legs[i].unit;
      if (u.is_region()) {
        region_next_[u.index][p] = next >= 0 ? next : kEnds;
        if (next < 0) region_paths_end_[u.index].push_back(p);
      } else {
        auto kind = graph_.links[next].kind;
        if (kind == net::LinkKind::road_to_region || kind == net::LinkKind::road_to_road) road_next_[u.index][p] = next;
        road_km_[u.index][p] = legs[i].length_km;
        road_cells_[u.index][p] = legs[i].exit_cell - legs[i].entry_cell + 1;
      }
    }
  }

  flows_.resize(E);
  regions_.assign(R, bathtub::RegionState(P));
  waiting_.assign(P, 0.0);
  active_.assign(net.agents.size(), false);
  rates_.assign(net.agents.size(), cfg_.u_max);
  agent_neighbors_.resize(net.agents.size());
  for (std::size_t a = 0; a < net.agents.size(); ++a)
    if (net.agents[a].kind == net::AgentKind::perimeter) agent_neighbors_[a] = neighbors_of(net.agents[a].target_index);
  reset(cfg_.seed);
}

std::vector<int> Simulator::neighbors_of(int region) const {
  int v = graph_.region_vertex[region];
  std::set<int> out;
  for (const auto& l : graph_.links) {
    if (l.from == v) out.insert(l.to);
    if (l.to == v) out.insert(l.from);
  }
  return {out.begin(), out.end()};
}

void Simulator::reset(std::uint64_t seed) {
  cfg_.seed = seed;
  freeway_.clear();
  for (auto& r : regions_) r.clear();
  std::fill(waiting_.begin(), waiting_.end(), 0.0);
  demand_table_ = sample_demand(demand_, horizon_, cfg_.demand_scale, seed);
  t_ = 0;
  injected_ = completed_ = run_integral_ = veh_km_ = ff_s_ = cumulative_reward_ = max_mass_error_ = 0.0;
  audit_violations_ = 0;
  log_ = {};
  set_active(active_);
  reset_window();
}

void Simulator::set_active(const std::vector<bool>& active) {
  if (active.size() != net_->agents.size()) throw net::ConfigError("set_active: one flag per agent required");
  active_ = active;
  for (std::size_t a = 0; a < active_.size(); ++a) {
    const auto& ag = net_->agents[a];
    rates_[a] = cfg_.u_max;
    if (ag.kind == net::AgentKind::ramp) {
      auto& st = freeway_.states()[ag.target_index];
      st.metered = active_[a];
      st.meter_rate = cfg_.u_max;
    } else {
      auto& rg = regions_[ag.target_index];
      rg.controlled = active_[a];
      rg.perimeter_rate = cfg_.u_max;
    }
  }
}

void Simulator::set_rate(int agent, double rate) {
  if (agent < 0 || agent >= num_agents() || !active_[agent])
    throw net::ConfigError("control applied to an entity that is not an active agent");
  rates_[agent] = std::clamp(rate, cfg_.u_min, cfg_.u_max);
  const auto& ag = net_->agents[agent];
  if (ag.kind == net::AgentKind::ramp)
    freeway_.states()[ag.target_index].meter_rate = rates_[agent];
  else
    regions_[ag.target_index].perimeter_rate = rates_[agent];
}

void Simulator::apply_action(int agent, int action) {
  if (action < 0 || action >= kNumActions) throw net::ConfigError("action index out of range");
  if (agent < 0 || agent >= num_agents()) throw net::ConfigError("action applied to an unknown agent");
  double delta = action == kRaise ? cfg_.du : action == kLower ? -cfg_.du : 0.0;
  set_rate(agent, rates_[agent] + delta);
}

double Simulator::rate(int agent) const { return rates_.at(agent); }

double Simulator::running() const {
  double s = freeway_.total_vehicles();
  for (int d : net_->bathtub_regions()) s += cfg_.audit ? regions_[d].recount() : regions_[d].accumulation();
  for (double w : waiting_) s += w;
  return s;
}

bool Simulator::done() const {
  if (t_ < horizon_) return false;
  return running() < 1.0 || t_ >= static_cast<long>(std::ceil(cfg_.drain_cap_factor * horizon_));
}

void Simulator::enter_region(int region, int path, double size, double extra_km) {
  const auto& spec = net_->regions[region];
  double xi = bathtub::leg_distance(spec, cfg_.seed, region, path, t_) + extra_km;
  regions_[region].enter(path, size, xi);
  veh_km_ += size * xi;
  ff_s_ += size * xi / free_speed(spec) * 3600.0;
}

void Simulator::enter_road(int road, int path, double size) {
  veh_km_ += size * road_km_[road][path];
  ff_s_ += size * road_cells_[road][path] * net_->dt_s;
}

StepStats Simulator::step() {
  const auto& net = *net_;
  const int P = static_cast<int>(paths_.size());
  const int V = static_cast<int>(graph_.vertices.size());
  const auto bathtubs = net.bathtub_regions();
  const double dt = net.dt_s;

  // Trip generation into the origin queues.
  if (t_ < horizon_) {
    for (int p = 0; p < P; ++p) {
      waiting_[p] += demand_table_[t_][p];
      injected_ += demand_table_[t_][p];
    }
  }

  // Regional travel at the start-of-interval MFD speed.
  std::vector<double> speed(net.regions.size(), 0.0);
  for (int d : bathtubs) {
    speed[d] = bathtub::region_speed(regions_[d], net.regions[d]);
    regions_[d].travel(speed[d] * dt / 3600.0);
  }

  // Admissions from the origin queues, limited by free space.
  std::vector<double> starts(net.regions.size(), 0.0), ends(net.regions.size(), 0.0);
  std::vector<double> admitted(P, 0.0);
  {
    std::vector<double> want(net.regions.size(), 0.0);
    for (int p = 0; p < P; ++p) want[origin_of_path_[p]] += waiting_[p];
    for (int p = 0; p < P; ++p) {
      int d = origin_of_path_[p];
      double room = std::max(0.0, net.regions[d].jam_accumulation - regions_[d].accumulation());
      if (want[d] <= room) {
        admitted[p] = waiting_[p];
        waiting_[p] = 0.0;
      } else {
        admitted[p] = waiting_[p] * (room / want[d]);
        waiting_[p] -= admitted[p];
      }
      starts[d] += admitted[p];
    }
  }
  for (int d : bathtubs)
    for (int p : region_paths_end_[d]) ends[d] += regions_[d].arrived()[p];

  // Boundary demands (per path, per link) and supplies (per receiving vertex).
  struct Offer {
    int link;
    int path;
    double amount;
  };
  std::vector<Offer> offers;
  std::vector<double> supply(V, 0.0);
  std::vector<bathtub::RegionDemandSupply> rds(net.regions.size());
  for (int d : bathtubs) {
    const auto& st = regions_[d];
    rds[d] = bathtub::region_demand_supply(st, net.regions[d], ends[d], starts[d]);
    supply[graph_.region_vertex[d]] = rds[d].supply;
    double transferable = 0.0;
    for (int p = 0; p < P; ++p)
      if (region_next_[d][p] >= 0) transferable += st.arrived()[p];
    if (transferable <= 0.0) continue;
    double scale = rds[d].demand / transferable;
    for (int p = 0; p < P; ++p)
      if (region_next_[d][p] >= 0 && st.arrived()[p] > 0.0)
        offers.push_back({region_next_[d][p], p, st.arrived()[p] * scale});
  }
  for (int e : freeway_.roads()) {
    int v = graph_.road_vertex[e];
    supply[v] = freeway_.road_demand_supply(e, 0.0, 0.0).supply;
    const auto& st = freeway_.states()[e];
    const double* sink = st.row(net.roads[e].cells - 1);
    double held = 0.0;
    for (int p = 0; p < P; ++p)
      if (road_next_[e][p] >= 0) held += sink[p];
    if (held <= 0.0) continue;
    double demand = freeway_.road_demand_supply(e, 0.0, 0.0).demand;
    for (int p = 0; p < P; ++p)
      if (road_next_[e][p] >= 0 && sink[p] > 0.0) offers.push_back({road_next_[e][p], p, demand * sink[p] / held});
  }
  std::vector<double> offered(V, 0.0);
  for (const auto& o : offers) offered[graph_.links[o.link].to] += o.amount;
  std::vector<double> accept(V, 0.0);
  for (int v = 0; v < V; ++v)
    if (offered[v] > 0.0) accept[v] = std::min(1.0, supply[v] / offered[v]);

  // Completions leave their final region.
  double completions = 0.0;
  for (int d : bathtubs)
    for (int p : region_paths_end_[d]) completions += regions_[d].leave(p, regions_[d].arrived()[p]);
  completed_ += completions;

  for (int e : freeway_.roads()) flows_[e].reset(net.roads[e].cells, P);
  std::vector<double> region_in(net.regions.size(), 0.0), region_out(net.regions.size(), 0.0);
  for (const auto& o : offers) {
    const auto& link = graph_.links[o.link];
    double flow = o.amount * accept[link.to];
    if (flow <= 0.0) continue;
    const auto& from = graph_.vertices[link.from];
    const auto& to = graph_.vertices[link.to];
    if (from.is_region()) {
      flow = regions_[from.index].leave(o.path, flow);
      region_out[from.index] += flow;
      out_window_[from.index][link.to] += flow;
    } else {
      auto& fl = flows_[from.index];
      fl.outflow += flow;
      fl.outflow_comp[o.path] += flow;
    }
    if (to.is_region()) {
      enter_region(to.index, o.path, flow, link.crossing_km);
      region_in[to.index] += flow;
      in_window_[to.index][link.from] += flow;
    } else {
      auto& fl = flows_[to.index];
      fl.inflow += flow;
      fl.inflow_comp[o.path] += flow;
      enter_road(to.index, o.path, flow);
    }
  }
  for (int p = 0; p < P; ++p)
    if (admitted[p] > 0.0) enter_region(origin_of_path_[p], p, admitted[p], 0.0);

  // Freeway cells.
  freeway_.compute_flows(flows_);
  for (int e : freeway_.roads()) {
    const auto& r = net.roads[e];
    if (r.kind == net::RoadKind::mainline || r.kind == net::RoadKind::urban) continue;
    int target = r.kind == net::RoadKind::on_ramp ? r.attach_road : e;
    for (int p = 0; p < P; ++p)
      if (flows_[e].ramp_comp[p] > 0.0) enter_road(target, p, flows_[e].ramp_comp[p]);
  }
  if (cfg_.audit) {
    audit_violations_ += freeway_.audit(flows_);
    for (int d : bathtubs) {
      if (region_in[d] > rds[d].supply + 1e-9) ++audit_violations_;
      if (region_out[d] > rds[d].demand + 1e-9) ++audit_violations_;
    }
  }
  freeway_.advance(flows_);

  // Observation windows.
  ++window_len_;
  for (int d : bathtubs) {
    start_window_[d] += starts[d];
    end_window_[d] += ends[d];
  }
  for (int a = 0; a < num_agents(); ++a) {
    const auto& ag = net.agents[a];
    if (ag.kind != net::AgentKind::ramp) continue;
    const auto& r = net.roads[ag.target_index];
    const auto& mf = flows_[r.attach_road];
    ramp_window_[a][0] += mf.f[r.attach_cell - 1];
    ramp_window_[a][1] += mf.f[r.attach_cell];
    ramp_window_[a][2] += flows_[ag.target_index].ramp;
  }

  double run = running();
  run_integral_ += run * dt;
  max_mass_error_ = std::max(max_mass_error_, std::abs(injected_ - run - completed_));
  double reward = step_reward(completions, cfg_.reward_baseline);
  cumulative_reward_ += reward;
  if (logging_) {
    log_.injected.push_back(injected_);
    log_.running.push_back(run);
    log_.completions.push_back(completions);
    log_.reward.push_back(reward);
    log_.rates.emplace_back(rates_.begin(), rates_.end());
  }

  if (dump_.stride > 0 && t_ % dump_.stride == 0) {
    if (dump_.cells) {
      for (int e : freeway_.roads()) {
        const auto& st = freeway_.states()[e];
        for (int k = 0; k < net.roads[e].cells; ++k)
          *dump_.cells << t_ << ',' << net.roads[e].id << ',' << k << ',' << st.n[k] << '\n';
      }
    }
    if (dump_.regions) {
      for (int d : bathtubs)
        *dump_.regions << t_ << ',' << net.regions[d].id << ',' << regions_[d].accumulation() << ',' << speed[d]
                       << ',' << region_in[d] << ',' << region_out[d] << '\n';
    }
  }

  StepStats s;
  s.t = t_;
  s.injected = injected_;
  s.running = run;
  s.completed = completed_;
  s.completions = completions;
  s.reward = reward;
  ++t_;
  return s;
}

void Simulator::reset_window() {
  const std::size_t R = net_->regions.size(), V = graph_.vertices.size();
  window_len_ = 0;
  ramp_window_.assign(net_->agents.size(), std::vector<double>(3, 0.0));
  start_window_.assign(R, 0.0);
  end_window_.assign(R, 0.0);
  in_window_.assign(R, std::vector<double>(V, 0.0));
  out_window_.assign(R, std::vector<double>(V, 0.0));
}

int Simulator::observation_dim(int agent) const {
  const auto& ag = net_->agents.at(agent);
  if (ag.kind == net::AgentKind::ramp) return 15;
  return 4 * static_cast<int>(agent_neighbors_[agent].size()) + 3;
}

std::vector<double> Simulator::observe(int agent) const {
  if (agent < 0 || agent >= num_agents()) throw net::ConfigError("observe: unknown agent");
  const auto& net = *net_;
  const auto& ag = net.agents[agent];
  const double w = std::max(1, window_len_);
  std::vector<double> obs;
  obs.reserve(observation_dim(agent));
  auto cell_info = [&](int road, int cell) {
    // Trips neither start nor end inside freeway cells.
    obs.push_back(0.0);
    obs.push_back(0.0);
    obs.push_back(freeway_.states()[road].n[cell] / net.roads[road].jam_per_cell);
  };
  if (ag.kind == net::AgentKind::ramp) {
    const auto& r = net.roads[ag.target_index];
    int m = r.attach_road, k = r.attach_cell;
    cell_info(m, k - 1);
    cell_info(m, k);
    cell_info(m, k + 1);
    cell_info(ag.target_index, r.cells - 1);
    const double qm = net.roads[m].qmax;
    obs.push_back(ramp_window_[agent][0] / w / qm);
    obs.push_back(ramp_window_[agent][1] / w / qm);
    obs.push_back(ramp_window_[agent][2] / w / r.qmax);
    return obs;
  }
  int d = ag.target_index;
  const auto& spec = net.regions[d];
  const double cap = spec.inbound_capacity > 0 ? spec.inbound_capacity : 1.0;
  int self = graph_.region_vertex[d];
  for (int v : agent_neighbors_[agent]) {
    const auto& u = graph_.vertices[v];
    if (u.is_region()) {
      obs.push_back(start_window_[u.index] / w / cap);
      obs.push_back(end_window_[u.index] / w / cap);
      obs.push_back(regions_[u.index].accumulation() / net.regions[u.index].jam_accumulation);
    } else {
      bool feeds = graph_.connected(v, self);
      cell_info(u.index, feeds ? net.roads[u.index].cells - 1 : 0);
    }
    obs.push_back((in_window_[d][v] - out_window_[d][v]) / w / cap);
  }
  obs.push_back(start_window_[d] / w / cap);
  obs.push_back(end_window_[d] / w / cap);
  obs.push_back(regions_[d].accumulation() / spec.jam_accumulation);
  return obs;
}

double Simulator::merge_cell_count(int agent) const {
  const auto& r = net_->roads[net_->agents.at(agent).target_index];
  return freeway_.states()[r.attach_road].n[r.attach_cell];
}

double Simulator::critical_cell_count(int agent) const {
  const auto& r = net_->roads[net_->agents.at(agent).target_index];
  const auto& m = net_->roads[r.attach_road];
  return m.jam_per_cell * m.w_kmh / (m.vmax_kmh + m.w_kmh);
}

double Simulator::region_accumulation(int agent) const {
  return regions_[net_->agents.at(agent).target_index].accumulation();
}

double Simulator::critical_accumulation(int agent) const {
  return net_->regions[net_->agents.at(agent).target_index].mfd.critical_accumulation;
}

EpisodeMetrics Simulator::finalize_metrics() const {
  EpisodeMetrics m;
  m.intervals = t_;
  m.completions = completed_;
  m.injected = injected_;
  m.cumulative_reward = cumulative_reward_;
  m.veh_km = veh_km_;
  m.veh_h = run_integral_ / 3600.0;
  m.max_mass_error = max_mass_error_;
  m.audit_violations = audit_violations_;
  m.defined = completed_ > 0.0;
  if (m.defined) {
    m.ttt_s = run_integral_ / completed_;
    m.ttt_freeflow_s = ff_s_ / completed_;
    m.delay = m.ttt_freeflow_s > 0 ? (m.ttt_s - m.ttt_freeflow_s) / m.ttt_freeflow_s : 0.0;
    m.speed_kmh = m.veh_h > 0 ? m.veh_km / m.veh_h : 0.0;
  }
  return m;
}

}  // namespace meso::engine
