#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

#include <Eigen/Dense>

namespace meso::drl {

constexpr int kActions = 3;

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Recurrent state carried between decisions: LSTM hidden and cell vectors.
struct Memory {
  Vec h, c;
  static Memory zeros(int hidden) { return {Vec::Zero(hidden), Vec::Zero(hidden)}; }
};

/// Shapes of the Q-network: obs -> dense(width) relu -> dense(width) relu
/// -> LSTM(hidden) -> linear(3).
struct QShape {
  int obs = 0;
  int width = 100;
  int hidden = 100;
  int size() const;
};

/// Non-owning views into a flat parameter (or gradient) vector.
struct QViews {
  Eigen::Map<Mat> W1, W2, Wx, Wh, W3;
  Eigen::Map<Vec> b1, b2, bl, b3;
};
struct QConstViews {
  Eigen::Map<const Mat> W1, W2, Wx, Wh, W3;
  Eigen::Map<const Vec> b1, b2, bl, b3;
};

QViews views(const QShape& s, Vec& flat);
QConstViews views(const QShape& s, const Vec& flat);

/// Q-network parameters with the shape they were built for.
class QNetwork {
 public:
  QNetwork() = default;
  explicit QNetwork(QShape shape) : shape_(shape), theta_(Vec::Zero(shape.size())) {}

  /// Glorot-uniform weights, zero biases, forget-gate bias 1.
  static QNetwork random(QShape shape, std::uint64_t seed);

  const QShape& shape() const { return shape_; }
  const Vec& params() const { return theta_; }
  Vec& params() { return theta_; }

  /// One recurrent step; writes the next memory into `next` when given.
  std::array<double, kActions> forward(const Vec& obs, const Memory& prev, Memory* next = nullptr) const;

 private:
  QShape shape_;
  Vec theta_;
};

/// A minibatch laid out column-wise: one sample per column.
struct Batch {
  Mat obs;      // obs x B
  Mat h, c;     // hidden x B, memory before the step (treated as input)
  int size() const { return static_cast<int>(obs.cols()); }
};

/// Q values for every column of the batch (3 x B).
Mat forward_batch(const QNetwork& net, const Batch& batch);

/// Loss seen by the gradient kernels: maps Q (3 x B) to a scalar and writes
/// dL/dQ into `dq`. Must be column-separable for the chunked kernel to agree
/// with the serial one.
struct QLoss {
  virtual ~QLoss() = default;
  virtual double eval(const Mat& q, int first_col, Mat& dq) const = 0;
};

/// Loss and full parameter gradient. Fixed chunks reduced in order, so the
/// result does not depend on the thread count. Chunks run under OpenMP.
double loss_and_grad(const QNetwork& net, const Batch& batch, const QLoss& loss, Vec& grad, int chunks = 8);

/// Same quantity, one sample at a time with no parallelism. Reference path.
double loss_and_grad_serial(const QNetwork& net, const Batch& batch, const QLoss& loss, Vec& grad);

/// Loss only (for finite differences).
double loss_only(const QNetwork& net, const Batch& batch, const QLoss& loss);

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace meso::drl
