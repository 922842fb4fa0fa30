#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "rplab/random.hpp"

namespace rplab {

enum class OutputHead {
  linear,
  tanh,
  // Q = V + A - mean(A) over a final linear layer of (actions + 1) units
  dueling,
};

// Small fully connected network with rectifier hidden layers and manual
// backpropagation. Batches are column-major: one sample per column.
class MlpNet {
 public:
  using Matrix = Eigen::MatrixXd;
  using Vector = Eigen::VectorXd;

  struct Layer {
    Matrix weight;  // out x in
    Vector bias;
    bool operator==(const Layer&) const = default;
  };

  MlpNet() = default;
  // `sizes` = {inputs, hidden..., outputs}. Weights and biases are drawn
  // uniformly from +-1/sqrt(fan_in).
  MlpNet(std::vector<int> sizes, OutputHead head, Rng& rng);
  // Rebuilds a network from stored parameters.
  MlpNet(std::vector<int> sizes, OutputHead head, std::vector<Layer> layers);

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }
  OutputHead head() const { return head_; }
  const std::vector<Layer>& layers() const { return layers_; }

  // Stateless evaluation.
  Matrix predict(const Matrix& inputs) const;
  std::vector<double> predict(std::span<const double> input) const;

  // Evaluation that caches activations for a following backward().
  const Matrix& forward(const Matrix& inputs);
  // Accumulates parameter gradients of sum(grad_out .* output) into the
  // gradient buffers and returns the gradient with respect to the inputs.
  Matrix backward(const Matrix& grad_out);

  void zero_grad();
  const std::vector<Layer>& gradients() const { return grads_; }
  std::vector<Layer>& mutable_layers() { return layers_; }

  // Mean over the batch of the summed squared output error; leaves the
  // analytic gradient of that loss in the gradient buffers.
  double mse_backprop(const Matrix& inputs, const Matrix& targets);

  // Flat parameter view (layer by layer, weights column-major then bias).
  std::size_t parameter_count() const;
  double& parameter(std::size_t i);
  double gradient(std::size_t i) const;

  // this <- (1 - tau) * this + tau * other
  void blend_from(const MlpNet& other, double tau);

  bool operator==(const MlpNet& other) const {
    return sizes_ == other.sizes_ && head_ == other.head_ && layers_ == other.layers_;
  }

 private:
  int last_width() const;
  Matrix apply_head(const Matrix& z) const;

  std::vector<int> sizes_;
  OutputHead head_ = OutputHead::linear;
  std::vector<Layer> layers_;
  std::vector<Layer> grads_;
  std::vector<Matrix> activations_;  // inputs to each layer
  std::vector<Matrix> preacts_;      // pre-activation of each layer
  Matrix output_;
};

// Adam update over every layer of a network.
class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  AdamOptimizer(const MlpNet& net, double learning_rate, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);
  void step(MlpNet& net);
  double learning_rate() const { return lr_; }

 private:
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  std::vector<MlpNet::Layer> m_, v_;
};

}  // namespace rplab
