#include "meso/drl/qnet.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace meso::drl {

int QShape::size() const {
  const int W = width, H = hidden;
  return W * obs + W + W * W + W + 4 * H * W + 4 * H * H + 4 * H + kActions * H + kActions;
}

namespace {

template <class M, class V, class P>
auto make_views(const QShape& s, P* base) {
  const int W = s.width, H = s.hidden, D = s.obs;
  P* p = base;
  auto take = [&p](int n) {
    P* out = p;
    p += n;
    return out;
  };
  M W1(take(W * D), W, D);
  V b1(take(W), W);
  M W2(take(W * W), W, W);
  V b2(take(W), W);
  M Wx(take(4 * H * W), 4 * H, W);
  M Wh(take(4 * H * H), 4 * H, H);
  V bl(take(4 * H), 4 * H);
  M W3(take(kActions * H), kActions, H);
  V b3(take(kActions), kActions);
  return std::make_tuple(W1, W2, Wx, Wh, W3, b1, b2, bl, b3);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_batch(const QShape& s, const Batch& b) {
  if (b.obs.rows() != s.obs) throw DimensionError("observation dimension does not match the network");
  if (b.h.rows() != s.hidden || b.c.rows() != s.hidden || b.h.cols() != b.obs.cols() || b.c.cols() != b.obs.cols())
    throw DimensionError("memory shape does not match the network");
}

// Activations of one block of columns, kept for the backward pass.
struct Cache {
  Mat z1, a1, z2, a2, gi, gf, gg, go, c, tc, h, q;
};

void forward_block(const QConstViews& v, const Eigen::Ref<const Mat>& X, const Eigen::Ref<const Mat>& Hp,
                   const Eigen::Ref<const Mat>& Cp, Cache& k) {
  const int H = static_cast<int>(v.Wh.cols());
  k.z1 = (v.W1 * X).colwise() + v.b1;
  k.a1 = k.z1.cwiseMax(0.0);
  k.z2 = (v.W2 * k.a1).colwise() + v.b2;
  k.a2 = k.z2.cwiseMax(0.0);
  Mat g = (v.Wx * k.a2 + v.Wh * Hp).colwise() + v.bl;
  k.gi = g.middleRows(0, H).unaryExpr(&sigmoid);
  k.gf = g.middleRows(H, H).unaryExpr(&sigmoid);
  k.gg = g.middleRows(2 * H, H).array().tanh().matrix();
  k.go = g.middleRows(3 * H, H).unaryExpr(&sigmoid);
  k.c = k.gf.cwiseProduct(Cp) + k.gi.cwiseProduct(k.gg);
  k.tc = k.c.array().tanh().matrix();
  k.h = k.go.cwiseProduct(k.tc);
  k.q = (v.W3 * k.h).colwise() + v.b3;
}

// Accumulates parameter gradients of one block into `d`.
void backward_block(const QConstViews& v, const Eigen::Ref<const Mat>& X, const Eigen::Ref<const Mat>& Hp,
                    const Eigen::Ref<const Mat>& Cp, const Cache& k, const Mat& dq, QViews& d) {
  const int H = static_cast<int>(v.Wh.cols());
  d.W3.noalias() += dq * k.h.transpose();
  d.b3 += dq.rowwise().sum();
  Mat dh = v.W3.transpose() * dq;
  Mat dc = dh.cwiseProduct(k.go).cwiseProduct((1.0 - k.tc.array().square()).matrix());
  Mat dg(4 * H, X.cols());
  dg.middleRows(0, H) = dc.cwiseProduct(k.gg).cwiseProduct(k.gi.cwiseProduct((1.0 - k.gi.array()).matrix()));
  dg.middleRows(H, H) = dc.cwiseProduct(Cp).cwiseProduct(k.gf.cwiseProduct((1.0 - k.gf.array()).matrix()));
  dg.middleRows(2 * H, H) = dc.cwiseProduct(k.gi).cwiseProduct((1.0 - k.gg.array().square()).matrix());
  dg.middleRows(3 * H, H) =
      dh.cwiseProduct(k.tc).cwiseProduct(k.go.cwiseProduct((1.0 - k.go.array()).matrix()));
  d.Wx.noalias() += dg * k.a2.transpose();
  d.Wh.noalias() += dg * Hp.transpose();
  d.bl += dg.rowwise().sum();
  Mat dz2 = (v.Wx.transpose() * dg).cwiseProduct((k.z2.array() > 0.0).cast<double>().matrix());
  d.W2.noalias() += dz2 * k.a1.transpose();
  d.b2 += dz2.rowwise().sum();
  Mat dz1 = (v.W2.transpose() * dz2).cwiseProduct((k.z1.array() > 0.0).cast<double>().matrix());
  d.W1.noalias() += dz1 * X.transpose();
  d.b1 += dz1.rowwise().sum();
}

}  // namespace

QViews views(const QShape& s, Vec& flat) {
  if (flat.size() != s.size()) throw DimensionError("parameter vector does not match the network shape");
  auto [W1, W2, Wx, Wh, W3, b1, b2, bl, b3] = make_views<Eigen::Map<Mat>, Eigen::Map<Vec>>(s, flat.data());
  return {W1, W2, Wx, Wh, W3, b1, b2, bl, b3};
}

QConstViews views(const QShape& s, const Vec& flat) {
  if (flat.size() != s.size()) throw DimensionError("parameter vector does not match the network shape");
  auto [W1, W2, Wx, Wh, W3, b1, b2, bl, b3] =
      make_views<Eigen::Map<const Mat>, Eigen::Map<const Vec>>(s, flat.data());
  return {W1, W2, Wx, Wh, W3, b1, b2, bl, b3};
}

QNetwork QNetwork::random(QShape shape, std::uint64_t seed) {
  QNetwork net(shape);
  std::mt19937_64 rng(seed);
  auto v = views(shape, net.theta_);
  auto glorot = [&rng](Eigen::Map<Mat>& m) {
    double a = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    std::uniform_real_distribution<double> u(-a, a);
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng);
  };
  glorot(v.W1);
  glorot(v.W2);
  glorot(v.Wx);
  glorot(v.Wh);
  glorot(v.W3);
  v.bl.segment(shape.hidden, shape.hidden).setOnes();
  return net;
}

std::array<double, kActions> QNetwork::forward(const Vec& obs, const Memory& prev, Memory* next) const {
  if (obs.size() != shape_.obs) throw DimensionError("observation dimension does not match the network");
  if (prev.h.size() != shape_.hidden || prev.c.size() != shape_.hidden)
    throw DimensionError("memory shape does not match the network");
  Cache k;
  forward_block(views(shape_, theta_), obs, prev.h, prev.c, k);
  if (next) *next = {k.h.col(0), k.c.col(0)};
  return {k.q(0, 0), k.q(1, 0), k.q(2, 0)};
}

Mat forward_batch(const QNetwork& net, const Batch& batch) {
  check_batch(net.shape(), batch);
  Cache k;
  forward_block(views(net.shape(), net.params()), batch.obs, batch.h, batch.c, k);
  return k.q;
}

double loss_only(const QNetwork& net, const Batch& batch, const QLoss& loss) {
  Mat q = forward_batch(net, batch);
  Mat dq(q.rows(), q.cols());
  return loss.eval(q, 0, dq);
}

double loss_and_grad(const QNetwork& net, const Batch& batch, const QLoss& loss, Vec& grad, int chunks) {
  check_batch(net.shape(), batch);
  const int B = batch.size();
  chunks = std::clamp(chunks, 1, std::max(1, B));
  const auto v = views(net.shape(), net.params());
  // Reused across calls; one slot per chunk.
  static thread_local std::vector<Vec> partial;
  partial.resize(chunks);
  for (auto& p : partial) p.setZero(net.shape().size());
  std::vector<double> partial_loss(chunks, 0.0);

#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < chunks; ++ch) {
    const int lo = static_cast<int>(static_cast<long>(B) * ch / chunks);
    const int hi = static_cast<int>(static_cast<long>(B) * (ch + 1) / chunks);
    if (hi <= lo) continue;
    const int n = hi - lo;
    Cache k;
    auto X = batch.obs.middleCols(lo, n);
    auto Hp = batch.h.middleCols(lo, n);
    auto Cp = batch.c.middleCols(lo, n);
    forward_block(v, X, Hp, Cp, k);
    Mat dq(kActions, n);
    partial_loss[ch] = loss.eval(k.q, lo, dq);
    auto d = views(net.shape(), partial[ch]);
    backward_block(v, X, Hp, Cp, k, dq, d);
  }

  grad.setZero(net.shape().size());
  double total = 0.0;
  for (int ch = 0; ch < chunks; ++ch) {
    grad += partial[ch];
    total += partial_loss[ch];
  }
  return total;
}

double loss_and_grad_serial(const QNetwork& net, const Batch& batch, const QLoss& loss, Vec& grad) {
  check_batch(net.shape(), batch);
  const QShape& s = net.shape();
  const auto v = views(s, net.params());
  const int H = s.hidden;
  grad = Vec::Zero(s.size());
  auto d = views(s, grad);
  double total = 0.0;
  for (int j = 0; j < batch.size(); ++j) {
    const Vec x = batch.obs.col(j), hp = batch.h.col(j), cp = batch.c.col(j);
    Vec z1 = v.W1 * x + v.b1, a1 = z1.cwiseMax(0.0);
    Vec z2 = v.W2 * a1 + v.b2, a2 = z2.cwiseMax(0.0);
    Vec g = v.Wx * a2 + v.Wh * hp + v.bl;
    Vec gi(H), gf(H), gg(H), go(H), c(H), tc(H), h(H);
    for (int r = 0; r < H; ++r) {
      gi[r] = sigmoid(g[r]);
      gf[r] = sigmoid(g[H + r]);
      gg[r] = std::tanh(g[2 * H + r]);
      go[r] = sigmoid(g[3 * H + r]);
      c[r] = gf[r] * cp[r] + gi[r] * gg[r];
      tc[r] = std::tanh(c[r]);
      h[r] = go[r] * tc[r];
    }
    Mat q = v.W3 * h + v.b3;
    Mat dq(kActions, 1);
    total += loss.eval(q, j, dq);
    const Vec dqv = dq.col(0);

    d.W3 += dqv * h.transpose();
    d.b3 += dqv;
    Vec dh = v.W3.transpose() * dqv;
    Vec dg(4 * H);
    for (int r = 0; r < H; ++r) {
      double dc = dh[r] * go[r] * (1.0 - tc[r] * tc[r]);
      dg[r] = dc * gg[r] * gi[r] * (1.0 - gi[r]);
      dg[H + r] = dc * cp[r] * gf[r] * (1.0 - gf[r]);
      dg[2 * H + r] = dc * gi[r] * (1.0 - gg[r] * gg[r]);
      dg[3 * H + r] = dh[r] * tc[r] * go[r] * (1.0 - go[r]);
    }
    d.Wx += dg * a2.transpose();
    d.Wh += dg * hp.transpose();
    d.bl += dg;
    Vec dz2 = v.Wx.transpose() * dg;
    for (int r = 0; r < dz2.size(); ++r)
      if (!(z2[r] > 0.0)) dz2[r] = 0.0;
    d.W2 += dz2 * a1.transpose();
    d.b2 += dz2;
    Vec dz1 = v.W2.transpose() * dz2;
    for (int r = 0; r < dz1.size(); ++r)
      if (!(z1[r] > 0.0)) dz1[r] = 0.0;
    d.W1 += dz1 * x.transpose();
    d.b1 += dz1;
  }
  return total;
}

}  // namespace meso::drl
