#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "grad_check.hpp"
#include "meso/drl/learn.hpp"
#include "meso/drl/qnet.hpp"
#include "meso/drl/trainer.hpp"

using namespace meso::drl;

// Reference values come from tests/oracles/drl_values.py.
TEST_SUITE("drl") {
  TEST_CASE("epsilon schedule endpoints are exact") {
    Hyperparams hp;
    CHECK(epsilon_schedule(hp, 0) == 0.1);
    CHECK(epsilon_schedule(hp, 100) == 0.01);
    CHECK(epsilon_schedule(hp, 250) == 0.01);
    CHECK(epsilon_schedule(hp, 50) == doctest::Approx(0.0316227766016838).epsilon(1e-12));
    for (int m = 1; m < 100; ++m) CHECK(epsilon_schedule(hp, m) < epsilon_schedule(hp, m - 1));
  }

  TEST_CASE("anneal factor endpoints and interior") {
    Hyperparams hp;
    CHECK(anneal_factor(hp, 0) == 200.0);
    CHECK(anneal_factor(hp, 50) == 0.0);
    CHECK(anneal_factor(hp, 51) == 0.0);
    CHECK(anneal_factor(hp, 10) == doctest::Approx(179.13597218075864).epsilon(1e-12));
    CHECK(anneal_factor(hp, 25) == doctest::Approx(100.0).epsilon(1e-12));
    hp.alpha_step = 0.12 * 50 / 30;
    hp.alpha_term = 30;
    CHECK(anneal_factor(hp, 0) == 200.0);
    CHECK(anneal_factor(hp, 15) == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(anneal_factor(hp, 30) == 0.0);
  }

  TEST_CASE("demonstration loss values and gradients") {
    std::array<double, 3> uniform{1.0 / 3, 1.0 / 3, 1.0 / 3}, teacher{0.9, 0.05, 0.05};
    CHECK(demonstration_loss({0, 0, 0}, uniform) == doctest::Approx(std::log(3.0)));
    CHECK(demonstration_loss({10, 0, 0}, teacher) == doctest::Approx(0.10562293717958086));
    CHECK(demonstration_loss({0, 10, 0}, teacher) == doctest::Approx(2.9956010627931136));
    CHECK(conventional_ce_loss({1, 2, 3}, teacher) == doctest::Approx(2.25760596444438));
    CHECK(dummy_policy({10, 0, 0})[0] == doctest::Approx(0.9999092083843409));
    CHECK_THROWS_AS(demonstration_loss({0, 0, 0}, {1, 0, 0}), std::domain_error);

    std::array<double, 3> q{0.3, -1.2, 0.8};
    for (bool conventional : {false, true}) {
      std::array<double, 3> g{};
      auto f = [&](std::array<double, 3> x) {
        return conventional ? conventional_ce_loss(x, teacher) : demonstration_loss(x, teacher);
      };
      conventional ? conventional_ce_loss(q, teacher, &g) : demonstration_loss(q, teacher, &g);
      for (int k = 0; k < 3; ++k) {
        auto up = q, down = q;
        up[k] += 1e-6;
        down[k] -= 1e-6;
        CHECK(g[k] == doctest::Approx((f(up) - f(down)) / 2e-6).epsilon(1e-6));
      }
    }
  }

  TEST_CASE("n-step returns") {
    std::vector<double> r{1, 1, 1, 1};
    auto a = nstep_return(r, 0, 2, 0.5);
    CHECK(a.ret == 1.5);
    CHECK(a.discount == 0.25);
    CHECK(a.next_index == 2);
    auto tail = nstep_return(r, 3, 2, 0.5);
    CHECK(tail.ret == 1.0);
    CHECK(tail.discount == 0.0);
    auto lit = nstep_return(r, 0, 2, 0.5, true);
    CHECK(lit.ret == 0.5);
    CHECK(lit.discount == 0.25);
    CHECK(lit.next_index == 1);
    auto one = nstep_return(r, 1, 1, 0.9);
    CHECK(one.ret == 1.0);
    CHECK(one.discount == 0.9);
    CHECK_THROWS(nstep_return(r, 4, 2, 0.5));
    CHECK_THROWS(nstep_return(r, 0, 0, 0.5));
  }

  TEST_CASE("greedy selection breaks ties toward the lowest index") {
    std::mt19937_64 rng(1);
    CHECK(argmax({1, 1, 0}) == 0);
    CHECK(argmax({0, 2, 2}) == 1);
    CHECK(select_action({0, 0, 5}, 0.0, rng) == 2);
    int counts[3] = {};
    for (int i = 0; i < 3000; ++i) ++counts[select_action({0, 0, 5}, 1.0, rng)];
    for (int c : counts) CHECK(c > 800);
  }

  TEST_CASE("replay buffer is FIFO and refuses to underfill") {
    ReplayBuffer buf(3);
    std::mt19937_64 rng(2);
    Transition t;
    CHECK_THROWS_AS(buf.sample_indices(1, rng), std::logic_error);
    for (int i = 0; i < 5; ++i) {
      t.ret = i;
      buf.push(t);
    }
    CHECK(buf.size() == 3);
    CHECK(buf.at(0).ret == 2);
    CHECK(buf.at(2).ret == 4);
    CHECK_THROWS_AS(buf.sample_indices(4, rng), std::logic_error);
    for (int k = 0; k < 20; ++k)
      for (int i : buf.sample_indices(3, rng)) CHECK((i >= 0 && i < 3));
    t.action = 3;
    CHECK_THROWS_AS(buf.push(t), std::invalid_argument);
  }

  TEST_CASE("combined loss gradient matches finite differences") {
    auto standard = meso::testing::check_combined_loss_gradient(20, 11, false);
    auto conventional = meso::testing::check_combined_loss_gradient(5, 12, true);
    CHECK(standard.draws == 20);
    CHECK(standard.worst_rel_error < 1e-4);
    CHECK(conventional.worst_rel_error < 1e-4);
  }

  TEST_CASE("chunked parallel gradient equals the serial reference") {
    QShape shape{15, 100, 100};
    QNetwork net = QNetwork::random(shape, 3);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> normal;
    const int B = 37;
    Batch b{Mat(15, B), Mat(100, B), Mat(100, B)};
    for (auto* m : {&b.obs, &b.h, &b.c})
      for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = 0.5 * normal(rng);
    std::vector<int> acts(B), teacher(B);
    Vec y(B);
    for (int j = 0; j < B; ++j) {
      acts[j] = j % 3;
      teacher[j] = (j + 1) % 3;
      y[j] = normal(rng);
    }
    CombinedLoss loss(acts, y, teacher, 2.0, 0.05, false);
    Vec g1, g2, g3;
    double l1 = loss_and_grad(net, b, loss, g1);
    double l2 = loss_and_grad_serial(net, b, loss, g2);
    double l3 = loss_and_grad(net, b, loss, g3, 1);
    CHECK(l1 == doctest::Approx(l2).epsilon(1e-12));
    CHECK(l3 == doctest::Approx(l2).epsilon(1e-12));
    CHECK((g1 - g2).lpNorm<Eigen::Infinity>() < 1e-12 * (1 + g2.lpNorm<Eigen::Infinity>()));
    CHECK((g3 - g2).lpNorm<Eigen::Infinity>() < 1e-12 * (1 + g2.lpNorm<Eigen::Infinity>()));
    Vec again;
    loss_and_grad(net, b, loss, again);
    CHECK(again == g1);
  }

  TEST_CASE("forward matches the batched path and carries memory") {
    QShape shape{6, 8, 5};
    QNetwork net = QNetwork::random(shape, 9);
    Vec obs = Vec::LinSpaced(6, -1, 1);
    Memory m0 = Memory::zeros(5), m1;
    auto q = net.forward(obs, m0, &m1);
    Batch b{obs, m0.h, m0.c};
    Mat qb = forward_batch(net, b);
    for (int a = 0; a < 3; ++a) CHECK(q[a] == doctest::Approx(qb(a, 0)).epsilon(1e-14));
    CHECK(m1.h.norm() > 0);
    auto q2 = net.forward(obs, m1, nullptr);
    CHECK(q2 != q);
    CHECK_THROWS_AS(net.forward(Vec::Zero(5), m0, nullptr), DimensionError);
    CHECK_THROWS_AS(net.forward(obs, Memory::zeros(4), nullptr), DimensionError);
    CHECK(net.params().size() == shape.size());
  }

  TEST_CASE("adam first step moves each coordinate by the learning rate") {
    Vec theta = Vec::Zero(2);
    Adam opt(2, 0.1, 1.0);
    opt.step(theta, Vec::Constant(2, 100.0));
    CHECK(theta[0] == doctest::Approx(-0.1).epsilon(1e-6));
    CHECK(opt.steps() == 1);
  }

  TEST_CASE("hyperparameter JSON round trip and strictness") {
    Hyperparams hp;
    hp.lr = 1e-3;
    hp.conventional_ce = true;
    auto back = hyperparams_from_json(to_json(hp));
    CHECK(back.lr == 1e-3);
    CHECK(back.conventional_ce);
    CHECK(hyperparams_hash(back) == hyperparams_hash(hp));
    hp.eta = 7;
    CHECK(hyperparams_hash(back) != hyperparams_hash(hp));
    auto j = to_json(hp);
    j["learning_rate"] = 1;
    CHECK_THROWS(hyperparams_from_json(j));
  }

  TEST_CASE("checkpoint round trip and validation") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "meso_ckpt_test";
    fs::create_directories(dir);
    Hyperparams hp;
    hp.width = 8;
    hp.hidden = 4;
    AgentModel m{2, "ramp_x", QNetwork::random({15, 8, 4}, 5)};
    auto path = (dir / "a.json").string();
    save_checkpoint(path, m, hp, Mode::proposed);
    Hyperparams hp2;
    Mode mode2;
    auto back = load_checkpoint(path, 15, &hp2, &mode2);
    CHECK(back.agent == 2);
    CHECK(back.id == "ramp_x");
    CHECK(back.net.params() == m.net.params());
    CHECK(mode2 == Mode::proposed);
    CHECK(hp2.width == 8);
    CHECK_THROWS(load_checkpoint(path, 11));
    CHECK_THROWS(load_checkpoint((dir / "missing.json").string()));
    fs::remove_all(dir);
  }

  TEST_CASE("mode names and flags") {
    for (auto m : {Mode::proposed, Mode::no_nsteps, Mode::no_demonstrator, Mode::no_demonstrator_no_nsteps, Mode::dqn})
      CHECK(parse_mode(to_string(m)) == m);
    CHECK(uses_demonstrator(Mode::proposed));
    CHECK_FALSE(uses_demonstrator(Mode::no_demonstrator));
    CHECK_FALSE(uses_nsteps(Mode::no_nsteps));
    CHECK_FALSE(uses_memory(Mode::dqn));
    CHECK_THROWS(parse_mode("ddpg"));
    CHECK(epoch_seed(1, 0) != epoch_seed(1, 1));
    CHECK(epoch_seed(1, 0) != epoch_seed(2, 0));
  }
}
