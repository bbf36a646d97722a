// SPDX-License-Identifier: Apache-2.0
#include "amhedge/mlp.hpp"

#include <cmath>

#include "amhedge/error.hpp"

namespace amh {

namespace {

void check_sizes(const std::vector<int>& sizes) {
  require(sizes.size() >= 2, "mlp: need at least input and output sizes");
  for (int s : sizes) require(s >= 1, "mlp: layer sizes must be positive");
}

}  // namespace

Mlp::Mlp(const std::vector<int>& sizes, OutputActivation out, Xoshiro256& rng) : sizes_(sizes), out_(out) {
  check_sizes(sizes);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int fan_in = sizes[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Layer layer{Eigen::MatrixXd(sizes[l + 1], fan_in), Eigen::VectorXd(sizes[l + 1])};
    // Fill in storage order so the draw sequence is layout-stable.
    for (Eigen::Index i = 0; i < layer.w.size(); ++i) layer.w.data()[i] = bound * (2.0 * rng.uniform() - 1.0);
    for (Eigen::Index i = 0; i < layer.b.size(); ++i) layer.b[i] = bound * (2.0 * rng.uniform() - 1.0);
    layers_.push_back(std::move(layer));
  }
}

Mlp Mlp::zeros(const std::vector<int>& sizes, OutputActivation out) {
  check_sizes(sizes);
  Mlp m;
  m.sizes_ = sizes;
  m.out_ = out;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
    m.layers_.push_back({Eigen::MatrixXd::Zero(sizes[l + 1], sizes[l]), Eigen::VectorXd::Zero(sizes[l + 1])});
  return m;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Tape* tape) const {
  if (x.rows() != input_size()) throw ParameterError("mlp forward: input size mismatch");
  Eigen::MatrixXd a = x;
  if (tape) tape->inputs.clear();
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (tape) tape->inputs.push_back(a);
    Eigen::MatrixXd z = layers_[l].w * a;
    z.colwise() += layers_[l].b;
    if (l + 1 < layers_.size()) {
      a = z.cwiseMax(0.0);
    } else if (out_ == OutputActivation::kSigmoid) {
      a = (1.0 + (-z.array()).exp()).inverse().matrix();
    } else {
      a = std::move(z);
    }
  }
  if (tape) tape->output = a;
  return a;
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != input_size()) throw ParameterError("mlp forward: input size mismatch");
  Eigen::MatrixXd in = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::MatrixXd out = forward(in);
  return {out.data(), out.data() + out.size()};
}

Mlp::Gradients Mlp::backward(const Tape& tape, const Eigen::MatrixXd& upstream, bool params) const {
  require(tape.inputs.size() == layers_.size(), "mlp backward: tape does not match network");
  require(upstream.rows() == output_size() && upstream.cols() == tape.output.cols(),
          "mlp backward: upstream gradient shape mismatch");
  Gradients g;
  if (params) {
    g.w.resize(layers_.size());
    g.b.resize(layers_.size());
  }
  // delta = d(loss)/d(pre-activation) of the current layer.
  Eigen::MatrixXd delta;
  if (out_ == OutputActivation::kSigmoid) {
    delta = upstream.array() * tape.output.array() * (1.0 - tape.output.array());
  } else {
    delta = upstream;
  }
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const Eigen::MatrixXd& in = tape.inputs[li];
    if (params) {
      g.w[li].noalias() = delta * in.transpose();
      g.b[li] = delta.rowwise().sum();
    }
    Eigen::MatrixXd back = layers_[li].w.transpose() * delta;
    if (li > 0) {
      // in = relu(z_prev), and relu'(z) = [z > 0] = [in > 0].
      delta = back.array() * (in.array() > 0.0).cast<double>();
    } else {
      g.input = std::move(back);
    }
  }
  return g;
}

void Mlp::apply(const Gradients& grads, double step) {
  require(grads.w.size() == layers_.size(), "mlp apply: gradient shape mismatch");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    layers_[l].w.noalias() += step * grads.w[l];
    layers_[l].b.noalias() += step * grads.b[l];
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.w.size() + l.b.size());
  return n;
}

double& Mlp::parameter(std::size_t i) {
  for (auto& l : layers_) {
    const auto nw = static_cast<std::size_t>(l.w.size());
    if (i < nw) return l.w.data()[i];
    i -= nw;
    const auto nb = static_cast<std::size_t>(l.b.size());
    if (i < nb) return l.b.data()[i];
    i -= nb;
  }
  throw ParameterError("mlp: parameter index out of range");
}

double Mlp::parameter(std::size_t i) const { return const_cast<Mlp*>(this)->parameter(i); }

std::vector<double> Mlp::flat_parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& l : layers_) {
    out.insert(out.end(), l.w.data(), l.w.data() + l.w.size());
    out.insert(out.end(), l.b.data(), l.b.data() + l.b.size());
  }
  return out;
}

void Mlp::set_flat_parameters(std::span<const double> values) {
  require(values.size() == parameter_count(), "mlp: flat parameter count mismatch");
  std::size_t k = 0;
  for (auto& l : layers_) {
    for (Eigen::Index i = 0; i < l.w.size(); ++i) l.w.data()[i] = values[k++];
    for (Eigen::Index i = 0; i < l.b.size(); ++i) l.b.data()[i] = values[k++];
  }
}

std::vector<double> Mlp::flat_gradients(const Gradients& g) const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    out.insert(out.end(), g.w[l].data(), g.w[l].data() + g.w[l].size());
    out.insert(out.end(), g.b[l].data(), g.b[l].data() + g.b[l].size());
  }
  return out;
}

bool Mlp::all_finite() const {
  for (const auto& l : layers_)
    if (!l.w.allFinite() || !l.b.allFinite()) return false;
  return true;
}

bool Mlp::operator==(const Mlp& o) const {
  if (sizes_ != o.sizes_ || out_ != o.out_) return false;
  for (std::size_t l = 0; l < layers_.size(); ++l)
    if (layers_[l].w != o.layers_[l].w || layers_[l].b != o.layers_[l].b) return false;
  return true;
}

void soft_update(Mlp& target, const Mlp& online, double tau) {
  if (target.sizes() != online.sizes()) throw ParameterError("soft_update: network shapes differ");
  require(tau >= 0.0 && tau <= 1.0, "soft_update: tau must lie in [0, 1]");
  for (std::size_t l = 0; l < target.layers().size(); ++l) {
    auto& t = target.layers()[l];
    const auto& o = online.layers()[l];
    t.w = (1.0 - tau) * t.w + tau * o.w;
    t.b = (1.0 - tau) * t.b + tau * o.b;
  }
}

}  // namespace amh
