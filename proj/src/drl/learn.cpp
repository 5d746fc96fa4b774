#include "meso/drl/learn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "meso/net/json_fields.hpp"

namespace meso::drl {

using nlohmann::json;

json to_json(const Hyperparams& hp) {
  return {{"buffer", hp.buffer},
          {"epochs", hp.epochs},
          {"updates_per_epoch", hp.updates_per_epoch},
          {"eps_start", hp.eps_start},
          {"eps_end", hp.eps_end},
          {"eps_last", hp.eps_last},
          {"alpha_min", hp.alpha_min},
          {"alpha_step", hp.alpha_step},
          {"alpha_term", hp.alpha_term},
          {"alpha_amp", hp.alpha_amp},
          {"eta", hp.eta},
          {"lambda", hp.lambda},
          {"batch", hp.batch},
          {"lr", hp.lr},
          {"clone_every", hp.clone_every},
          {"kappa", hp.kappa},
          {"grad_clip", hp.grad_clip},
          {"width", hp.width},
          {"hidden", hp.hidden},
          {"paper_literal_nstep", hp.paper_literal_nstep},
          {"conventional_ce", hp.conventional_ce}};
}

Hyperparams hyperparams_from_json(const json& j) {
  Hyperparams hp;
  json ref = to_json(hp);
  std::set<std::string> keys;
  for (auto it = ref.begin(); it != ref.end(); ++it) keys.insert(it.key());
  net::cfg::check_fields(j, keys, "hyperparams");
  auto get = [&j](const char* k, auto& field) { field = net::cfg::optional(j, k, field, "hyperparams"); };
  get("buffer", hp.buffer);
  get("epochs", hp.epochs);
  get("updates_per_epoch", hp.updates_per_epoch);
  get("eps_start", hp.eps_start);
  get("eps_end", hp.eps_end);
  get("eps_last", hp.eps_last);
  get("alpha_min", hp.alpha_min);
  get("alpha_step", hp.alpha_step);
  get("alpha_term", hp.alpha_term);
  get("alpha_amp", hp.alpha_amp);
  get("eta", hp.eta);
  get("lambda", hp.lambda);
  get("batch", hp.batch);
  get("lr", hp.lr);
  get("clone_every", hp.clone_every);
  get("kappa", hp.kappa);
  get("grad_clip", hp.grad_clip);
  get("width", hp.width);
  get("hidden", hp.hidden);
  get("paper_literal_nstep", hp.paper_literal_nstep);
  get("conventional_ce", hp.conventional_ce);
  return hp;
}

std::uint64_t hyperparams_hash(const Hyperparams& hp) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : to_json(hp).dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

double epsilon_schedule(const Hyperparams& hp, double epoch) {
  if (epoch >= hp.eps_last) return hp.eps_end;
  return std::max(hp.eps_end, hp.eps_start * std::pow(hp.eps_end / hp.eps_start, epoch / hp.eps_last));
}

double anneal_factor(const Hyperparams& hp, double epoch) {
  if (epoch > hp.alpha_term) return 0.0;
  auto A = [&hp](double t) { return 1.0 - 1.0 / (1.0 + std::exp(-hp.alpha_min - hp.alpha_step * t)); };
  // Ratio first so epoch 0 gives exactly alpha_amp.
  return hp.alpha_amp * ((A(epoch) - A(hp.alpha_term)) / (A(0.0) - A(hp.alpha_term)));
}

int argmax(const std::array<double, kActions>& q) {
  int best = 0;
  for (int a = 1; a < kActions; ++a)
    if (q[a] > q[best]) best = a;
  return best;
}

int select_action(const std::array<double, kActions>& q, double eps, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (eps > 0.0 && u(rng) < eps) return std::uniform_int_distribution<int>(0, kActions - 1)(rng);
  return argmax(q);
}

std::array<double, kActions> dummy_policy(const std::array<double, kActions>& q) {
  double m = *std::max_element(q.begin(), q.end());
  std::array<double, kActions> p{};
  double z = 0.0;
  for (int a = 0; a < kActions; ++a) z += p[a] = std::exp(q[a] - m);
  for (auto& x : p) x /= z;
  return p;
}

double demonstration_loss(const std::array<double, kActions>& q, const std::array<double, kActions>& teacher,
                          std::array<double, kActions>* dq) {
  std::array<double, kActions> lt{};
  for (int a = 0; a < kActions; ++a) {
    if (!(teacher[a] > 0.0)) throw std::domain_error("demonstration_loss: teacher policy must be strictly positive");
    lt[a] = std::log(teacher[a]);
  }
  auto p = dummy_policy(q);
  double loss = 0.0;
  for (int a = 0; a < kActions; ++a) loss -= p[a] * lt[a];
  if (dq) {
    // d/dQ_k of -sum p log t = -p_k (log t_k - sum p log t)
    for (int k = 0; k < kActions; ++k) (*dq)[k] = -p[k] * (lt[k] + loss);
  }
  return loss;
}

double conventional_ce_loss(const std::array<double, kActions>& q, const std::array<double, kActions>& teacher,
                            std::array<double, kActions>* dq) {
  double m = *std::max_element(q.begin(), q.end());
  double z = 0.0;
  for (double x : q) z += std::exp(x - m);
  double lse = m + std::log(z);
  auto p = dummy_policy(q);
  double loss = 0.0;
  for (int a = 0; a < kActions; ++a) loss -= teacher[a] * (q[a] - lse);
  if (dq)
    for (int k = 0; k < kActions; ++k) (*dq)[k] = p[k] - teacher[k];
  return loss;
}

NStep nstep_return(const std::vector<double>& rewards, int t, int eta, double lambda, bool paper_literal) {
  const int T = static_cast<int>(rewards.size());
  if (t < 0 || t >= T) throw std::out_of_range("nstep_return: t outside the reward window");
  if (eta < 1) throw std::invalid_argument("nstep_return: eta must be >= 1");
  NStep out;
  if (paper_literal) {
    // lambda^eta inside the sum over r_{t+1..t+eta}, bootstrap at t+1.
    const double le = std::pow(lambda, eta);
    for (int i = 1; i <= eta && t + i < T; ++i) out.ret += le * rewards[t + i];
    if (t + 1 < T) {
      out.discount = le;
      out.next_index = t + 1;
    }
    return out;
  }
  double w = 1.0;
  int i = 0;
  for (; i < eta && t + i < T; ++i) {
    out.ret += w * rewards[t + i];
    w *= lambda;
  }
  if (t + eta < T) {
    out.discount = w;
    out.next_index = t + eta;
  }
  return out;
}

void ReplayBuffer::push(Transition t) {
  if (t.action < 0 || t.action >= kActions) throw std::invalid_argument("replay: action index out of range");
  items_.push_back(std::move(t));
  while (static_cast<int>(items_.size()) > capacity_) items_.pop_front();
}

std::vector<int> ReplayBuffer::sample_indices(int n, std::mt19937_64& rng) const {
  if (size() < n) throw std::logic_error("replay: cannot sample " + std::to_string(n) + " from a buffer of " +
                                         std::to_string(size()));
  std::uniform_int_distribution<int> u(0, size() - 1);
  std::vector<int> idx(n);
  for (auto& i : idx) i = u(rng);
  return idx;
}

CombinedLoss::CombinedLoss(std::vector<int> actions, Vec targets, std::vector<int> teacher, double alpha,
                           double kappa, bool conventional)
    : actions_(std::move(actions)),
      targets_(std::move(targets)),
      teacher_(std::move(teacher)),
      alpha_(alpha),
      kappa_(kappa),
      conventional_(conventional) {}

double CombinedLoss::eval(const Mat& q, int first_col, Mat& dq) const {
  const double inv_b = 1.0 / static_cast<double>(actions_.size());
  double total = 0.0;
  dq.setZero(kActions, q.cols());
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    const int s = first_col + static_cast<int>(j);
    const int a = actions_[s];
    double td = q(a, j) - targets_[s];
    total += td * td * inv_b;
    dq(a, j) += 2.0 * td * inv_b;
    if (alpha_ != 0.0 && teacher_[s] >= 0) {
      std::array<double, kActions> qs{q(0, j), q(1, j), q(2, j)}, g{};
      std::array<double, kActions> pi{kappa_, kappa_, kappa_};
      pi[teacher_[s]] = 1.0 - 2.0 * kappa_;
      double ld = conventional_ ? conventional_ce_loss(qs, pi, &g) : demonstration_loss(qs, pi, &g);
      total += alpha_ * ld * inv_b;
      for (int k = 0; k < kActions; ++k) dq(k, j) += alpha_ * g[k] * inv_b;
    }
  }
  return total;
}

namespace {

void fill_column(Mat& m, Eigen::Index j, const std::vector<float>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), j) = v[i];
}

}  // namespace

Batch current_batch(const std::vector<const Transition*>& items) {
  const auto n = static_cast<Eigen::Index>(items.size());
  Batch b;
  b.obs.resize(static_cast<Eigen::Index>(items.front()->obs.size()), n);
  b.h.resize(static_cast<Eigen::Index>(items.front()->h.size()), n);
  b.c.resize(b.h.rows(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    fill_column(b.obs, j, items[j]->obs);
    fill_column(b.h, j, items[j]->h);
    fill_column(b.c, j, items[j]->c);
  }
  return b;
}

Vec td_targets(const QNetwork& target, const std::vector<const Transition*>& items) {
  const auto n = static_cast<Eigen::Index>(items.size());
  Vec y(n);
  std::vector<const Transition*> boot;
  std::vector<Eigen::Index> where;
  for (Eigen::Index j = 0; j < n; ++j) {
    y[j] = items[j]->ret;
    if (items[j]->discount != 0.0) {
      boot.push_back(items[j]);
      where.push_back(j);
    }
  }
  if (boot.empty()) return y;
  Batch b;
  const auto m = static_cast<Eigen::Index>(boot.size());
  b.obs.resize(static_cast<Eigen::Index>(boot.front()->next_obs.size()), m);
  b.h.resize(static_cast<Eigen::Index>(boot.front()->next_h.size()), m);
  b.c.resize(b.h.rows(), m);
  for (Eigen::Index j = 0; j < m; ++j) {
    fill_column(b.obs, j, boot[j]->next_obs);
    fill_column(b.h, j, boot[j]->next_h);
    fill_column(b.c, j, boot[j]->next_c);
  }
  Mat q = forward_batch(target, b);
  for (Eigen::Index j = 0; j < m; ++j) y[where[j]] += boot[j]->discount * q.col(j).maxCoeff();
  return y;
}

void Adam::step(Vec& theta, Vec grad) {
  if (clip_ > 0.0) {
    double norm = grad.norm();
    if (norm > clip_) grad *= clip_ / norm;
  }
  ++t_;
  m_ = b1_ * m_ + (1.0 - b1_) * grad;
  v_ = b2_ * v_ + (1.0 - b2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  theta.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

}  // namespace meso::drl
