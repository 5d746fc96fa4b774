#include "meso/drl/trainer.hpp"

#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "meso/net/json_fields.hpp"

namespace meso::drl {

using nlohmann::json;

Mode parse_mode(const std::string& s) {
  if (s == "proposed") return Mode::proposed;
  if (s == "no-nsteps") return Mode::no_nsteps;
  if (s == "no-demonstrator") return Mode::no_demonstrator;
  if (s == "no-demonstrator-no-nsteps") return Mode::no_demonstrator_no_nsteps;
  if (s == "dqn") return Mode::dqn;
  throw std::invalid_argument("unknown training mode '" + s + "'");
}

std::string to_string(Mode m) {
  switch (m) {
    case Mode::proposed: return "proposed";
    case Mode::no_nsteps: return "no-nsteps";
    case Mode::no_demonstrator: return "no-demonstrator";
    case Mode::no_demonstrator_no_nsteps: return "no-demonstrator-no-nsteps";
    case Mode::dqn: return "dqn";
  }
  return "?";
}

bool uses_demonstrator(Mode m) { return m == Mode::proposed || m == Mode::no_nsteps; }
bool uses_nsteps(Mode m) { return m == Mode::proposed || m == Mode::no_demonstrator; }
bool uses_memory(Mode m) { return m != Mode::dqn; }

std::uint64_t epoch_seed(std::uint64_t seed, int epoch) {
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(epoch) + 1;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

std::vector<float> to_float(const Vec& v) { return {v.data(), v.data() + v.size()}; }

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

// Per-agent rollout record for one decision.
struct Step {
  Memory before;
  std::vector<float> obs;
  int action = 0;
  int teacher = -1;
};

struct Learner {
  AgentModel model;
  QNetwork target;
  ReplayBuffer buffer{1};
  Adam opt;
  std::mt19937_64 rng;
  std::vector<Step> steps;
};

}  // namespace

TrainResult train(engine::Simulator& sim, const TrainSpec& spec) {
  const Hyperparams& hp = spec.hp;
  const int A = sim.num_agents();
  if (static_cast<int>(spec.active.size()) != A) throw std::invalid_argument("train: one active flag per agent required");
  const bool demo_on = uses_demonstrator(spec.mode);
  const bool memory_on = uses_memory(spec.mode);
  const int eta = uses_nsteps(spec.mode) ? hp.eta : 1;
  if (demo_on && (static_cast<int>(spec.teacher.alinea.size()) != A || static_cast<int>(spec.teacher.gating.size()) != A))
    throw std::invalid_argument("train: demonstrator parameters required for mode " + to_string(spec.mode));

  sim.set_active(spec.active);
  std::vector<Learner> learners;
  for (int a = 0; a < A; ++a) {
    if (!spec.active[a]) continue;
    Learner L;
    QShape shape{sim.observation_dim(a), hp.width, hp.hidden};
    L.model = {a, sim.network().agents[a].id, QNetwork::random(shape, epoch_seed(spec.seed ^ 0xA5A5ULL, a))};
    L.target = L.model.net;
    L.buffer = ReplayBuffer(hp.buffer);
    L.opt = Adam(shape.size(), hp.lr, hp.grad_clip);
    L.rng.seed(epoch_seed(spec.seed ^ 0x5A5AULL, a));
    learners.push_back(std::move(L));
  }

  TrainResult result;
  demo::Demonstrator teacher(demo_on ? spec.teacher : demo::DemonstratorParams::defaults(A));
  for (int m = 0; m < hp.epochs; ++m) {
    const double eps = epsilon_schedule(hp, m);
    const double alpha = demo_on ? anneal_factor(hp, m) : 0.0;

    // Rollout.
    sim.reset(epoch_seed(spec.seed, m));
    if (demo_on) teacher.begin(sim);
    std::vector<Memory> mem;
    for (auto& L : learners) {
      L.steps.clear();
      mem.push_back(Memory::zeros(hp.hidden));
    }
    std::vector<double> rewards;
    double window = 0.0;
    int window_n = 0;
    while (!sim.done()) {
      if (sim.decision_due()) {
        if (window_n > 0) rewards.push_back(window / window_n);
        window = 0.0;
        window_n = 0;
        std::vector<int> taught = demo_on ? teacher.decide(sim) : std::vector<int>{};
        for (std::size_t i = 0; i < learners.size(); ++i) {
          auto& L = learners[i];
          const int a = L.model.agent;
          Vec obs = to_vec(sim.observe(a));
          Step st{mem[i], to_float(obs), 0, demo_on ? taught[a] : -1};
          Memory next;
          auto q = L.model.net.forward(obs, mem[i], &next);
          st.action = select_action(q, eps, L.rng);
          mem[i] = memory_on ? next : Memory::zeros(hp.hidden);
          sim.apply_action(a, st.action);
          L.steps.push_back(std::move(st));
        }
        sim.reset_window();
      }
      window += sim.step().reward;
      ++window_n;
    }
    if (window_n > 0) rewards.push_back(window / window_n);

    // Store transitions.
    for (auto& L : learners) {
      const int K = static_cast<int>(L.steps.size());
      for (int k = 0; k < K; ++k) {
        NStep ns = nstep_return(rewards, k, eta, hp.lambda, hp.paper_literal_nstep);
        Transition tr;
        tr.h = to_float(L.steps[k].before.h);
        tr.c = to_float(L.steps[k].before.c);
        tr.obs = L.steps[k].obs;
        tr.action = L.steps[k].action;
        tr.ret = ns.ret;
        tr.teacher = L.steps[k].teacher;
        if (ns.next_index >= 0 && ns.next_index < K) {
          const Step& nx = L.steps[ns.next_index];
          tr.next_h = to_float(nx.before.h);
          tr.next_c = to_float(nx.before.c);
          tr.next_obs = nx.obs;
          tr.discount = ns.discount;
        }
        L.buffer.push(std::move(tr));
      }
    }

    // Optimization.
    std::vector<double> loss_sum(learners.size(), 0.0);
    std::vector<int> loss_n(learners.size(), 0);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < static_cast<int>(learners.size()); ++i) {
      auto& L = learners[i];
      for (int u = 0; u < hp.updates_per_epoch; ++u) {
        if (L.buffer.size() < hp.batch) break;
        auto idx = L.buffer.sample_indices(hp.batch, L.rng);
        std::vector<const Transition*> items;
        std::vector<int> actions, taught;
        for (int j : idx) {
          items.push_back(&L.buffer.at(j));
          actions.push_back(items.back()->action);
          taught.push_back(items.back()->teacher);
        }
        CombinedLoss loss(actions, td_targets(L.target, items), taught, alpha, hp.kappa, hp.conventional_ce);
        Vec grad;
        loss_sum[i] += loss_and_grad(L.model.net, current_batch(items), loss, grad);
        ++loss_n[i];
        L.opt.step(L.model.net.params(), std::move(grad));
      }
    }

    if ((m + 1) % hp.clone_every == 0) {
      for (auto& L : learners) L.target = L.model.net;
      result.clone_epochs.push_back(m);
    }

    TrainLogRow row;
    row.epoch = m;
    row.cumulative_reward = sim.finalize_metrics().cumulative_reward;
    row.epsilon = eps;
    row.alpha = alpha;
    double ls = 0.0;
    int ln = 0;
    for (std::size_t i = 0; i < learners.size(); ++i) {
      ls += loss_sum[i];
      ln += loss_n[i];
    }
    row.mean_loss = ln > 0 ? ls / ln : 0.0;
    result.log.push_back(row);
    if (spec.on_epoch) spec.on_epoch(row);
  }

  for (auto& L : learners) result.agents.push_back(std::move(L.model));
  return result;
}

engine::EpisodeMetrics evaluate(engine::Simulator& sim, const std::vector<AgentModel>& agents, Mode mode,
                                std::uint64_t seed) {
  std::vector<bool> active(sim.num_agents(), false);
  for (const auto& m : agents) active.at(m.agent) = true;
  sim.set_active(active);
  sim.reset(seed);
  std::vector<Memory> mem;
  for (const auto& m : agents) mem.push_back(Memory::zeros(m.net.shape().hidden));
  while (!sim.done()) {
    if (sim.decision_due()) {
      for (std::size_t i = 0; i < agents.size(); ++i) {
        Memory next;
        auto q = agents[i].net.forward(to_vec(sim.observe(agents[i].agent)), mem[i], &next);
        if (uses_memory(mode)) mem[i] = next;
        sim.apply_action(agents[i].agent, argmax(q));
      }
      sim.reset_window();
    }
    sim.step();
  }
  return sim.finalize_metrics();
}

void save_checkpoint(const std::string& path, const AgentModel& model, const Hyperparams& hp, Mode mode) {
  const auto& s = model.net.shape();
  const Vec& p = model.net.params();
  json doc = {{"agent", model.id},
              {"agent_index", model.agent},
              {"obs_dim", s.obs},
              {"width", s.width},
              {"hidden", s.hidden},
              {"mode", to_string(mode)},
              {"hyperparams", to_json(hp)},
              {"hyperparams_hash", hyperparams_hash(hp)},
              {"params", std::vector<double>(p.data(), p.data() + p.size())}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  out << doc.dump() << '\n';
  if (!out) throw std::runtime_error("failed writing checkpoint '" + path + "'");
}

AgentModel load_checkpoint(const std::string& path, int obs_dim, Hyperparams* hp, Mode* mode) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error("checkpoint '" + path + "' is not valid JSON: " + e.what());
  }
  const std::string where = "checkpoint " + path;
  namespace cfg = net::cfg;
  cfg::check_fields(doc, {"agent", "agent_index", "obs_dim", "width", "hidden", "mode", "hyperparams",
                          "hyperparams_hash", "params"}, where);
  Hyperparams h = hyperparams_from_json(cfg::require<json>(doc, "hyperparams", where));
  if (cfg::require<std::uint64_t>(doc, "hyperparams_hash", where) != hyperparams_hash(h))
    throw std::runtime_error(where + ": hyperparams hash mismatch");
  QShape shape{cfg::require<int>(doc, "obs_dim", where), cfg::require<int>(doc, "width", where),
               cfg::require<int>(doc, "hidden", where)};
  if (obs_dim >= 0 && shape.obs != obs_dim)
    throw DimensionError(where + ": observation dimension " + std::to_string(shape.obs) + ", scenario has " +
                         std::to_string(obs_dim));
  auto params = cfg::require<std::vector<double>>(doc, "params", where);
  if (static_cast<int>(params.size()) != shape.size()) throw DimensionError(where + ": parameter count mismatch");
  AgentModel m;
  m.id = cfg::require<std::string>(doc, "agent", where);
  m.agent = cfg::require<int>(doc, "agent_index", where);
  m.net = QNetwork(shape);
  m.net.params() = to_vec(params);
  if (hp) *hp = h;
  if (mode) *mode = parse_mode(cfg::require<std::string>(doc, "mode", where));
  return m;
}

void write_train_log(const std::string& path, const std::vector<TrainLogRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write training log '" + path + "'");
  out << "epoch,cumulative_reward,epsilon,alpha,mean_loss\n";
  out << std::setprecision(17);
  for (const auto& r : rows)
    out << r.epoch << ',' << r.cumulative_reward << ',' << r.epsilon << ',' << r.alpha << ',' << r.mean_loss << '\n';
  if (!out) throw std::runtime_error("failed writing training log '" + path + "'");
}

}  // namespace meso::drl
