#ifndef HAPCACHE_NN_HPP
#define HAPCACHE_NN_HPP

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "hapcache/core.hpp"

namespace hapcache::nn {

/// Fully connected network, tanh hidden layers, linear output. Parameters
/// live in one flat vector: per layer, row-major weights then biases.
class Mlp {
 public:
  Mlp() = default;
  Mlp(Index inputs, std::vector<Index> hidden, Index outputs) : widths_{inputs} {
    require(inputs >= 1 && outputs >= 1, "mlp: widths must be positive");
    for (Index h : hidden) {
      require(h >= 1, "mlp: widths must be positive");
      widths_.push_back(h);
    }
    widths_.push_back(outputs);
    Index n = 0;
    for (std::size_t i = 0; i + 1 < widths_.size(); ++i) n += widths_[i + 1] * widths_[i] + widths_[i + 1];
    params_ = Eigen::VectorXd::Zero(n);
  }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases; the output
  /// layer is shrunk by `output_gain`.
  void initialize(Rng& rng, double output_gain = 0.01) {
    Index off = 0;
    for (std::size_t i = 0; i + 1 < widths_.size(); ++i) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(widths_[i]));
      const double gain = i + 2 == widths_.size() ? output_gain : 1.0;
      std::uniform_real_distribution<double> u(-bound, bound);
      const Index nw = widths_[i + 1] * widths_[i];
      for (Index k = 0; k < nw; ++k) params_[off + k] = gain * u(rng);
      off += nw;
      params_.segment(off, widths_[i + 1]).setZero();
      off += widths_[i + 1];
    }
  }

  Index inputs() const { return widths_.front(); }
  Index outputs() const { return widths_.back(); }
  const std::vector<Index>& widths() const { return widths_; }
  Index size() const { return params_.size(); }
  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  /// Activations of every layer, input first.
  struct Tape {
    std::vector<Eigen::VectorXd> a;
  };

  Eigen::VectorXd forward(const Eigen::VectorXd& x, Tape* tape = nullptr) const {
    require(x.size() == inputs(), "mlp: input width mismatch");
    Eigen::VectorXd a = x;
    if (tape) tape->a.assign(1, a);
    Index off = 0;
    for (std::size_t i = 0; i + 1 < widths_.size(); ++i) {
      const Index r = widths_[i + 1], c = widths_[i];
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> w(params_.data() + off, r, c);
      Eigen::VectorXd z = w * a + params_.segment(off + r * c, r);
      off += r * c + r;
      a = i + 2 == widths_.size() ? z : Eigen::VectorXd(z.array().tanh());
      if (tape) tape->a.push_back(a);
    }
    return a;
  }

  /// Adds d(loss)/d(params) to `grad` given d(loss)/d(output).
  void backward(const Tape& tape, const Eigen::VectorXd& grad_out, Eigen::VectorXd& grad) const {
    require(grad.size() == size(), "mlp: gradient size mismatch");
    std::vector<Index> offsets;
    Index off = 0;
    for (std::size_t i = 0; i + 1 < widths_.size(); ++i) {
      offsets.push_back(off);
      off += widths_[i + 1] * widths_[i] + widths_[i + 1];
    }
    Eigen::VectorXd delta = grad_out;  // d loss / d pre-activation
    for (std::size_t i = widths_.size() - 1; i-- > 0;) {
      const Index r = widths_[i + 1], c = widths_[i];
      const Index o = offsets[i];
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gw(grad.data() + o, r, c);
      gw.noalias() += delta * tape.a[i].transpose();
      grad.segment(o + r * c, r) += delta;
      if (i == 0) break;
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> w(params_.data() + o, r, c);
      Eigen::VectorXd back = w.transpose() * delta;
      delta = back.array() * (1.0 - tape.a[i].array().square());
    }
  }

 private:
  std::vector<Index> widths_;
  Eigen::VectorXd params_;
};

struct Adam {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t steps = 0;
  Eigen::VectorXd m, v;

  /// Descends along `grad`.
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
    if (m.size() != params.size()) {
      m = Eigen::VectorXd::Zero(params.size());
      v = Eigen::VectorXd::Zero(params.size());
    }
    ++steps;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(steps));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(steps));
    params.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
};

}  // namespace hapcache::nn

#endif  // HAPCACHE_NN_HPP
