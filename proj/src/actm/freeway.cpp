#include "meso/actm/freeway.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace meso::actm {

double RoadState::total() const {
  double s = 0.0;
  for (double v : n) s += v;
  return s;
}

void RoadFlows::reset(int cells, int paths) {
  auto zero = [](std::vector<double>& v, std::size_t size) { v.assign(size, 0.0); };
  zero(f, cells > 0 ? cells - 1 : 0);
  zero(beta, cells);
  zero(theta, cells);
  zero(ramp_in, cells);
  zero(ramp_out, cells);
  zero(ramp_comp, paths);
  zero(inflow_comp, paths);
  zero(outflow_comp, paths);
  zero(injection_comp, paths);
  zero(completion_comp, paths);
  ramp = ramp_available = ramp_cap = 0.0;
  inflow = outflow = injections = completions = 0.0;
}

FreewayModel::FreewayModel(const net::Network& net, int paths, std::vector<std::vector<int>> exit_cell,
                           ActmParams params)
    : net_(&net), paths_(paths), params_(params), exit_cell_(std::move(exit_cell)) {
  if (exit_cell_.size() != net.roads.size()) throw std::invalid_argument("FreewayModel: exit table size mismatch");
  states_.resize(net.roads.size());
  for (int e = 0; e < static_cast<int>(net.roads.size()); ++e) {
    const auto& road = net.roads[e];
    if (!net::is_cell_road(road.kind)) continue;
    roads_.push_back(e);
    (road.kind == net::RoadKind::mainline ? mainlines_ : ramps_).push_back(e);
    auto& st = states_[e];
    st.paths = paths;
    st.n.assign(road.cells, 0.0);
    st.comp.assign(static_cast<std::size_t>(road.cells) * paths, 0.0);
    if (static_cast<int>(exit_cell_[e].size()) != paths)
      throw std::invalid_argument("FreewayModel: exit table for road " + road.id + " has wrong width");
  }
}

DemandSupply FreewayModel::road_demand_supply(int road, double completions, double injections) const {
  const auto& r = net_->roads[road];
  const auto& st = states_[road];
  return cell_demand_supply(st.n.back(), completions, st.n.front(), injections, r.jam_per_cell,
                            r.w_kmh / r.vmax_kmh, r.qmax);
}

void FreewayModel::ramp_internal(int road, RoadFlows& fl) const {
  const auto& r = net_->roads[road];
  const auto& st = states_[road];
  double wv = r.w_kmh / r.vmax_kmh;
  for (int k = 0; k + 1 < r.cells; ++k) {
    fl.f[k] = mainline_flow(st.n[k], 0.0, 0.0, st.n[k + 1], 0.0, r.jam_per_cell, wv, r.qmax, params_.gamma);
    fl.theta[k] = st.n[k] > 0.0 ? fl.f[k] / st.n[k] : 0.0;
  }
}

void FreewayModel::mainline(int road, std::vector<RoadFlows>& flows) const {
  const auto& r = net_->roads[road];
  const auto& st = states_[road];
  auto& fl = flows[road];
  const auto& exits = exit_cell_[road];
  double wv = r.w_kmh / r.vmax_kmh;
  double g = params_.gamma;
  std::vector<double> pool(paths_);

  for (int k = 0; k + 1 < r.cells; ++k) {
    int ramp = net_->ramp_at(road, k);
    bool off = ramp >= 0 && net_->roads[ramp].kind == net::RoadKind::off_ramp;
    const double* on_comp = (ramp >= 0 && !off) ? flows[ramp].ramp_comp.data() : nullptr;
    const double* row = st.row(k);
    double exiting = 0.0, staying = 0.0;
    for (int p = 0; p < paths_; ++p) {
      pool[p] = row[p] + (on_comp ? g * on_comp[p] : 0.0);
      (exits[p] == k ? exiting : staying) += pool[p];
    }
    double pool_total = st.n[k] + g * fl.ramp_in[k];
    double beta = (off && exiting > 0.0) ? exiting / (exiting + staying) : 0.0;
    double ramp_next = fl.ramp_in[k + 1];
    double f = 0.0, s = 0.0;
    if (off) {
      const auto& o = net_->roads[ramp];
      double s_off = std::max(0.0, std::min(o.w_kmh / o.vmax_kmh * (o.jam_per_cell - states_[ramp].n[0]), o.qmax));
      if (staying <= 1e-12 * (exiting + staying)) {
        beta = 1.0;
        s = std::min(std::max(0.0, pool_total), s_off);
      } else {
        f = mainline_flow(st.n[k], fl.ramp_in[k], beta, st.n[k + 1], ramp_next, r.jam_per_cell, wv, r.qmax, g);
        if (beta > 0.0) f = std::min(f, (1.0 - beta) / beta * s_off);
        s = offramp_flow(beta, f);
      }
    } else {
      f = mainline_flow(st.n[k], fl.ramp_in[k], 0.0, st.n[k + 1], ramp_next, r.jam_per_cell, wv, r.qmax, g);
    }
    fl.f[k] = f;
    fl.beta[k] = beta;
    fl.ramp_out[k] = s;
    double theta = pool_total > 0.0 ? (f + s) / pool_total : 0.0;
    fl.theta[k] = theta;
    if (off) {
      auto& of = flows[ramp];
      of.ramp = s;
      for (int p = 0; p < paths_; ++p) of.ramp_comp[p] = exits[p] == k ? theta * pool[p] : 0.0;
    }
  }
}

void FreewayModel::compute_flows(std::vector<RoadFlows>& flows) const {
  if (flows.size() != net_->roads.size()) throw std::invalid_argument("compute_flows: flow table size mismatch");
  const int nr = static_cast<int>(ramps_.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < nr; ++i) ramp_internal(ramps_[i], flows[ramps_[i]]);

  for (int e : mainlines_) std::fill(flows[e].ramp_in.begin(), flows[e].ramp_in.end(), 0.0);

  for (int e : ramps_) {
    const auto& r = net_->roads[e];
    if (r.kind != net::RoadKind::on_ramp) continue;
    const auto& st = states_[e];
    auto& fl = flows[e];
    const auto& m = net_->roads[r.attach_road];
    int K = r.cells;
    const double* sink = st.row(K - 1);
    const double* prev = st.row(K - 2);
    double theta_prev = fl.theta[K - 2];
    fl.ramp_available = st.n[K - 1] + fl.f[K - 2];
    fl.ramp_cap = ramp_capacity(r.qmax, m.qmax, st.metered ? std::optional<double>(st.meter_rate) : std::nullopt);
    fl.ramp = onramp_flow(fl.ramp_available, states_[r.attach_road].n[r.attach_cell], m.jam_per_cell,
                          params_.zeta, fl.ramp_cap);
    double share = fl.ramp_available > 0.0 ? fl.ramp / fl.ramp_available : 0.0;
    fl.theta[K - 1] = share;
    for (int p = 0; p < paths_; ++p) fl.ramp_comp[p] = share * (sink[p] + theta_prev * prev[p]);
    flows[r.attach_road].ramp_in[r.attach_cell] = fl.ramp;
  }

  const int nm = static_cast<int>(mainlines_.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < nm; ++i) mainline(mainlines_[i], flows);
}

void FreewayModel::advance(const std::vector<RoadFlows>& flows) {
  const int nroads = static_cast<int>(roads_.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < nroads; ++i) {
    int e = roads_[i];
    const auto& r = net_->roads[e];
    const auto& fl = flows[e];
    auto& st = states_[e];
    const auto& exits = exit_cell_[e];
    const int K = r.cells;
    const bool main = r.kind == net::RoadKind::mainline;
    const bool on = r.kind == net::RoadKind::on_ramp;
    const double g = params_.gamma;
    std::vector<double> old = st.comp;
    std::vector<double> old_n = st.n;
    std::vector<double> carried(paths_, 0.0);  // vehicles leaving cell k-1 downstream

    for (int k = 0; k < K; ++k) {
      double* row = st.row(k);
      const double* o = old.data() + static_cast<std::size_t>(k) * paths_;
      const double* on_comp = nullptr;
      if (main) {
        int ramp = net_->ramp_at(e, k);
        if (ramp >= 0 && net_->roads[ramp].kind == net::RoadKind::on_ramp) on_comp = flows[ramp].ramp_comp.data();
      }
      double dn = 0.0;
      for (int p = 0; p < paths_; ++p) row[p] = o[p] + carried[p];
      if (k > 0) dn += fl.f[k - 1];
      if (k == 0) {
        dn += fl.inflow + fl.injections;
        for (int p = 0; p < paths_; ++p) row[p] += fl.inflow_comp[p] + fl.injection_comp[p];
        if (r.kind == net::RoadKind::off_ramp) {
          dn += fl.ramp;
          for (int p = 0; p < paths_; ++p) row[p] += fl.ramp_comp[p];
        }
      }
      if (on_comp) {
        dn += fl.ramp_in[k];
        for (int p = 0; p < paths_; ++p) row[p] += on_comp[p];
      }
      if (k + 1 < K) {
        dn -= fl.f[k] + fl.ramp_out[k];
        double th = fl.theta[k];
        for (int p = 0; p < paths_; ++p) {
          double pool = o[p] + (on_comp ? g * on_comp[p] : 0.0);
          double out = th * pool;
          row[p] -= out;
          carried[p] = (main && exits[p] == k) ? 0.0 : out;
        }
      } else {
        dn -= fl.outflow + fl.completions;
        for (int p = 0; p < paths_; ++p) row[p] -= fl.outflow_comp[p] + fl.completion_comp[p];
        if (on) {
          dn -= fl.ramp;
          for (int p = 0; p < paths_; ++p) row[p] -= fl.ramp_comp[p];
        }
      }
      for (int p = 0; p < paths_; ++p)
        if (row[p] < 0.0) row[p] = 0.0;
      st.n[k] = std::max(0.0, old_n[k] + dn);
    }
  }
}

int FreewayModel::audit(const std::vector<RoadFlows>& flows, double tol) const {
  int bad = 0;
  auto check = [&](bool ok) { bad += ok ? 0 : 1; };
  const double g = params_.gamma;
  for (int e : roads_) {
    const auto& r = net_->roads[e];
    const auto& st = states_[e];
    const auto& fl = flows[e];
    double wv = r.w_kmh / r.vmax_kmh;
    for (int k = 0; k + 1 < r.cells; ++k) {
      double f = fl.f[k], s = fl.ramp_out[k];
      double recv = std::max(0.0, wv * (r.jam_per_cell - st.n[k + 1] - g * fl.ramp_in[k + 1]));
      check(f >= -tol && s >= -tol);
      check(f + s <= st.n[k] + g * fl.ramp_in[k] + tol);
      check(f <= recv + tol);
      check(f <= r.qmax + tol);
      double beta = fl.beta[k];
      if (beta > 0.0 && beta < 1.0) check(std::abs(s * (1.0 - beta) - beta * f) <= tol);
      int ramp = net_->ramp_at(e, k);
      if (ramp >= 0 && net_->roads[ramp].kind == net::RoadKind::off_ramp) {
        const auto& o = net_->roads[ramp];
        double s_off = std::max(0.0, std::min(o.w_kmh / o.vmax_kmh * (o.jam_per_cell - states_[ramp].n[0]), o.qmax));
        check(s <= s_off + tol);
      }
    }
    if (r.kind == net::RoadKind::on_ramp) {
      const auto& m = net_->roads[r.attach_road];
      double n_k = states_[r.attach_road].n[r.attach_cell];
      check(fl.ramp >= -tol);
      check(fl.ramp <= fl.ramp_available + tol);
      check(fl.ramp <= std::max(0.0, params_.zeta * (m.jam_per_cell - n_k)) + tol);
      check(fl.ramp <= fl.ramp_cap + tol);
      check(fl.ramp_cap <= std::min(r.qmax, m.qmax) + tol);
    }
    check(fl.outflow + fl.completions <= st.n.back() + tol);
    check(fl.inflow + fl.injections <= std::max(0.0, wv * (r.jam_per_cell - st.n.front())) + tol);
  }
  return bad;
}

double FreewayModel::total_vehicles() const {
  double s = 0.0;
  for (int e : roads_) s += states_[e].total();
  return s;
}

void FreewayModel::clear() {
  for (int e : roads_) {
    std::fill(states_[e].n.begin(), states_[e].n.end(), 0.0);
    std::fill(states_[e].comp.begin(), states_[e].comp.end(), 0.0);
    states_[e].meter_rate = 1.0;
    states_[e].metered = false;
  }
}

}  // namespace meso::actm
