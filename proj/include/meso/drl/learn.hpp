#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "meso/drl/qnet.hpp"

namespace meso::drl {

struct Hyperparams {
  int buffer = 30000;          // N_B
  int epochs = 100;            // N_m
  int updates_per_epoch = 1;   // N_o
  double eps_start = 0.1, eps_end = 0.01, eps_last = 100;
  double alpha_min = -3.0, alpha_step = 0.12, alpha_term = 50, alpha_amp = 200;
  int eta = 30;
  double lambda = 0.99;
  int batch = 128;
  double lr = 3e-6;
  int clone_every = 5;         // N_c, epochs
  double kappa = 0.05;         // teacher smoothing
  double grad_clip = 10.0;
  int width = 100, hidden = 100;
  bool paper_literal_nstep = false;
  bool conventional_ce = false;  // -sum teacher * log softmax(Q) instead of -sum softmax(Q) * log teacher
};

nlohmann::json to_json(const Hyperparams& hp);
Hyperparams hyperparams_from_json(const nlohmann::json& j);
/// FNV-1a over the canonical JSON dump; stored in checkpoints.
std::uint64_t hyperparams_hash(const Hyperparams& hp);

double epsilon_schedule(const Hyperparams& hp, double epoch);
double anneal_factor(const Hyperparams& hp, double epoch);

/// Uniform random action with probability eps, else argmax (lowest index on ties).
int select_action(const std::array<double, kActions>& q, double eps, std::mt19937_64& rng);
int argmax(const std::array<double, kActions>& q);
std::array<double, kActions> dummy_policy(const std::array<double, kActions>& q);

/// -sum softmax(Q) log teacher. Teacher must be strictly positive.
double demonstration_loss(const std::array<double, kActions>& q, const std::array<double, kActions>& teacher,
                          std::array<double, kActions>* dq = nullptr);
/// -sum teacher log softmax(Q).
double conventional_ce_loss(const std::array<double, kActions>& q, const std::array<double, kActions>& teacher,
                            std::array<double, kActions>* dq = nullptr);

/// n-step return from rewards[t..]: discounted sum and the bootstrap factor.
/// `next_index` is where the bootstrap observation sits; discount is 0 when
/// the window runs into the episode end.
struct NStep {
  double ret = 0.0;
  double discount = 0.0;
  int next_index = -1;
};
NStep nstep_return(const std::vector<double>& rewards, int t, int eta, double lambda, bool paper_literal = false);

/// Stored experience: memory before the step, observation, action, n-step
/// return, bootstrap observation and memory, discount, teacher action.
struct Transition {
  std::vector<float> h, c, obs;
  int action = 0;
  double ret = 0.0;
  std::vector<float> next_h, next_c, next_obs;
  double discount = 0.0;
  int teacher = -1;  // -1 when no demonstrator was queried
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity) : capacity_(capacity) {}
  void push(Transition t);
  int size() const { return static_cast<int>(items_.size()); }
  int capacity() const { return capacity_; }
  const Transition& at(int i) const { return items_.at(i); }
  /// Uniform indices with replacement. Throws when fewer than n items are stored.
  std::vector<int> sample_indices(int n, std::mt19937_64& rng) const;

 private:
  int capacity_;
  std::deque<Transition> items_;
};

/// TD plus demonstration loss over a sampled batch, averaged over the batch.
class CombinedLoss : public QLoss {
 public:
  CombinedLoss(std::vector<int> actions, Vec targets, std::vector<int> teacher, double alpha, double kappa,
               bool conventional);
  double eval(const Mat& q, int first_col, Mat& dq) const override;

 private:
  std::vector<int> actions_;
  Vec targets_;
  std::vector<int> teacher_;
  double alpha_, kappa_;
  bool conventional_;
};

/// Targets r + discount * max_a Q_target(next).
Vec td_targets(const QNetwork& target, const std::vector<const Transition*>& items);
Batch current_batch(const std::vector<const Transition*>& items);

class Adam {
 public:
  Adam() = default;
  Adam(int n, double lr, double clip) : m_(Vec::Zero(n)), v_(Vec::Zero(n)), lr_(lr), clip_(clip) {}
  void step(Vec& theta, Vec grad);
  long steps() const { return t_; }

 private:
  Vec m_, v_;
  double lr_ = 1e-3, clip_ = 0.0;
  double b1_ = 0.9, b2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
};

}  // namespace meso::drl
