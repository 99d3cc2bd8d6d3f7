#pragma once

// Dense tanh network with exact reverse-mode gradients.
//
// Batches are column-major: one sample per column, one feature per row.
// All parameters live in one flat vector; each layer stores its weight
// matrix row-major (out x in) followed by its bias, which is also the
// checkpoint layout.

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "svo/common.hpp"

namespace svo::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Mlp;

/// Activations recorded by a forward pass; required by `Mlp::backward`.
struct Tape {
  const Mlp* owner = nullptr;
  std::vector<Matrix> activations;  ///< input, hidden outputs, linear output
};

class Mlp {
public:
  Mlp() = default;

  /// Zero-initialized network with the given layer sizes (input first).
  explicit Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw Error("Mlp needs at least an input and an output layer");
    std::size_t count = 0;
    for (std::size_t l = 1; l < sizes_.size(); ++l) {
      if (sizes_[l - 1] <= 0 || sizes_[l] <= 0) throw Error("Mlp layer sizes must be positive");
      offsets_.push_back(count);
      count += static_cast<std::size_t>(sizes_[l]) * sizes_[l - 1] + sizes_[l];
    }
    params_ = Vector::Zero(static_cast<Eigen::Index>(count));
  }

  const std::vector<int>& sizes() const { return sizes_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int layers() const { return static_cast<int>(sizes_.size()) - 1; }
  Eigen::Index param_count() const { return params_.size(); }

  Vector& params() { return params_; }
  const Vector& params() const { return params_; }

  Eigen::Map<RowMajorMatrix> weight(int l) {
    return {params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]};
  }
  Eigen::Map<const RowMajorMatrix> weight(int l) const {
    return {params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]};
  }
  Eigen::Map<Vector> bias(int l) {
    return {params_.data() + offsets_[l] + weight_size(l), sizes_[l + 1]};
  }
  Eigen::Map<const Vector> bias(int l) const {
    return {params_.data() + offsets_[l] + weight_size(l), sizes_[l + 1]};
  }

  Matrix forward(const Matrix& x) const {
    check_input(x);
    Matrix a = x;
    for (int l = 0; l < layers(); ++l) {
      Matrix z = weight(l) * a;
      z.colwise() += bias(l);
      if (l + 1 < layers()) z = z.array().tanh();
      a = std::move(z);
    }
    return a;
  }

  Matrix forward(const Matrix& x, Tape& tape) const {
    check_input(x);
    tape.owner = this;
    tape.activations.resize(static_cast<std::size_t>(layers()) + 1);
    tape.activations[0] = x;
    for (int l = 0; l < layers(); ++l) {
      Matrix& z = tape.activations[l + 1];
      z.noalias() = weight(l) * tape.activations[l];
      z.colwise() += bias(l);
      if (l + 1 < layers()) z = z.array().tanh();
    }
    return tape.activations.back();
  }

  /// Accumulate dLoss/dparams into `grad` given dLoss/doutput. Optionally
  /// returns dLoss/dinput.
  void backward(const Tape& tape, const Matrix& grad_out, Vector& grad,
                Matrix* grad_in = nullptr) const {
    if (tape.owner != this || tape.activations.size() != static_cast<std::size_t>(layers()) + 1)
      throw ContractViolation("Mlp::backward: tape missing or recorded by another network");
    if (grad_out.rows() != output_dim() || grad_out.cols() != tape.activations[0].cols())
      throw Error("Mlp::backward: output gradient shape mismatch");
    if (grad.size() != param_count()) grad = Vector::Zero(param_count());

    Matrix delta = grad_out;
    for (int l = layers() - 1; l >= 0; --l) {
      const Matrix& input = tape.activations[l];
      Eigen::Map<RowMajorMatrix> gw(grad.data() + offsets_[l], sizes_[l + 1], sizes_[l]);
      Eigen::Map<Vector> gb(grad.data() + offsets_[l] + weight_size(l), sizes_[l + 1]);
      gw.noalias() += delta * input.transpose();
      gb += delta.rowwise().sum();
      if (l > 0) {
        Matrix upstream = weight(l).transpose() * delta;
        delta = upstream.array() * (1.0 - input.array().square());
      } else if (grad_in) {
        *grad_in = weight(0).transpose() * delta;
      }
    }
  }

  Vector backward(const Tape& tape, const Matrix& grad_out, Matrix* grad_in = nullptr) const {
    Vector grad = Vector::Zero(param_count());
    backward(tape, grad_out, grad, grad_in);
    return grad;
  }

  bool operator==(const Mlp& other) const {
    return sizes_ == other.sizes_ && params_ == other.params_;
  }

private:
  std::size_t weight_size(int l) const {
    return static_cast<std::size_t>(sizes_[l + 1]) * sizes_[l];
  }
  void check_input(const Matrix& x) const {
    if (sizes_.empty()) throw Error("Mlp: network has no layers");
    if (x.rows() != input_dim())
      throw Error("Mlp::forward: expected input width " + std::to_string(input_dim()) + ", got " +
                  std::to_string(x.rows()));
  }

  std::vector<int> sizes_;
  std::vector<std::size_t> offsets_;
  Vector params_;
};

/// Orthogonal initialization with per-layer gains; biases are zeroed.
template <class Rng>
void init_orthogonal(Mlp& net, Rng& rng, std::span<const double> gains) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int l = 0; l < net.layers(); ++l) {
    auto w = net.weight(l);
    const Eigen::Index rows = w.rows();
    const Eigen::Index cols = w.cols();
    const Eigen::Index tall = std::max(rows, cols);
    const Eigen::Index thin = std::min(rows, cols);
    Matrix g(tall, thin);
    for (Eigen::Index j = 0; j < thin; ++j)
      for (Eigen::Index i = 0; i < tall; ++i) g(i, j) = normal(rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(tall, thin);
    const Matrix r = qr.matrixQR().topLeftCorner(thin, thin);
    for (Eigen::Index j = 0; j < thin; ++j)
      if (r(j, j) < 0.0) q.col(j) *= -1.0;
    const double gain = gains[static_cast<std::size_t>(std::min<int>(l, gains.size() - 1))];
    if (rows >= cols) {
      w = gain * q;
    } else {
      w = gain * q.transpose();
    }
    net.bias(l).setZero();
  }
}

/// Hidden layers get gain sqrt(2); the output layer gets `output_gain`.
template <class Rng>
Mlp make_mlp(std::vector<int> sizes, Rng& rng, double output_gain = 1.0) {
  Mlp net(std::move(sizes));
  std::vector<double> gains(static_cast<std::size_t>(net.layers()), std::sqrt(2.0));
  gains.back() = output_gain;
  init_orthogonal(net, rng, gains);
  return net;
}

/// Column matrix from a span of feature values.
inline Matrix column(std::span<const double> values) {
  Matrix m(static_cast<Eigen::Index>(values.size()), 1);
  for (std::size_t i = 0; i < values.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = values[i];
  return m;
}

}  // namespace svo::nn
