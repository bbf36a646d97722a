// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "amhedge/rng.hpp"

namespace amh {

enum class OutputActivation { kSigmoid, kLinear };

/// Fully connected network: ReLU on hidden layers, sigmoid or identity on
/// the output. Batches are matrices with one sample per column.
class Mlp {
 public:
  struct Layer {
    Eigen::MatrixXd w;  // out x in
    Eigen::VectorXd b;
  };

  /// Activations recorded by a forward pass, consumed by backward().
  struct Tape {
    std::vector<Eigen::MatrixXd> inputs;  // input to each layer
    Eigen::MatrixXd output;
  };

  struct Gradients {
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
    Eigen::MatrixXd input;  // d(out) / d(x), in x batch
  };

  Mlp() = default;
  /// Weights and biases uniform in +-1/sqrt(fan_in).
  Mlp(const std::vector<int>& sizes, OutputActivation out, Xoshiro256& rng);
  /// All parameters zero.
  static Mlp zeros(const std::vector<int>& sizes, OutputActivation out);

  const std::vector<int>& sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  OutputActivation output_activation() const { return out_; }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Tape* tape = nullptr) const;
  std::vector<double> forward(std::span<const double> x) const;

  /// Reverse-mode gradients of sum_over_batch(upstream . output). Set
  /// `params` false to get only the input gradient.
  Gradients backward(const Tape& tape, const Eigen::MatrixXd& upstream, bool params = true) const;

  /// params += step * grads (use a negative step for descent).
  void apply(const Gradients& grads, double step);

  std::size_t parameter_count() const;
  /// Flat view in layer order: w (column-major) then b, per layer.
  double& parameter(std::size_t i);
  double parameter(std::size_t i) const;
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> values);
  std::vector<double> flat_gradients(const Gradients& g) const;

  bool all_finite() const;
  bool operator==(const Mlp& o) const;

 private:
  std::vector<int> sizes_;
  OutputActivation out_ = OutputActivation::kLinear;
  std::vector<Layer> layers_;
};

/// target <- (1 - tau) * target + tau * online.
void soft_update(Mlp& target, const Mlp& online, double tau);

}  // namespace amh
