#include "rplab/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "rplab/errors.hpp"

namespace rplab {

MlpNet::MlpNet(std::vector<int> sizes, OutputHead head, Rng& rng)
    : sizes_(std::move(sizes)), head_(head) {
  if (sizes_.size() < 2) throw ConfigError("network needs at least input and output sizes");
  for (int s : sizes_)
    if (s <= 0) throw ConfigError("layer sizes must be positive");
  if (head_ == OutputHead::dueling && sizes_.back() < 2)
    throw ConfigError("dueling head needs at least two outputs");
  const std::size_t n = sizes_.size() - 1;
  for (std::size_t l = 0; l < n; ++l) {
    const int in = sizes_[l];
    const int out = (l + 1 == n) ? last_width() : sizes_[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Layer layer{Matrix(out, in), Vector(out)};
    for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i)
        layer.weight(i, j) = rng.uniform(-bound, bound);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = rng.uniform(-bound, bound);
    layers_.push_back(std::move(layer));
  }
  zero_grad();
}

MlpNet::MlpNet(std::vector<int> sizes, OutputHead head, std::vector<Layer> layers)
    : sizes_(std::move(sizes)), head_(head), layers_(std::move(layers)) {
  if (sizes_.size() < 2 || layers_.size() != sizes_.size() - 1)
    throw ConfigError("layer list does not match the declared sizes");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const int out = (l + 1 == layers_.size()) ? last_width() : sizes_[l + 1];
    if (layers_[l].weight.rows() != out || layers_[l].weight.cols() != sizes_[l] ||
        layers_[l].bias.size() != out)
      throw ConfigError("stored layer shape does not match the declared sizes");
  }
  zero_grad();
}

int MlpNet::last_width() const {
  return head_ == OutputHead::dueling ? sizes_.back() + 1 : sizes_.back();
}

MlpNet::Matrix MlpNet::apply_head(const Matrix& z) const {
  switch (head_) {
    case OutputHead::linear:
      return z;
    case OutputHead::tanh:
      return z.array().tanh().matrix();
    case OutputHead::dueling: {
      const Eigen::Index n = z.rows() - 1;
      Matrix q(n, z.cols());
      for (Eigen::Index c = 0; c < z.cols(); ++c) {
        const double mean_adv = z.col(c).tail(n).mean();
        q.col(c) = z.col(c).tail(n).array() + (z(0, c) - mean_adv);
      }
      return q;
    }
  }
  return z;
}

MlpNet::Matrix MlpNet::predict(const Matrix& inputs) const {
  if (inputs.rows() != input_size()) throw DomainError("network input has the wrong size");
  Matrix a = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix z = layers_[l].weight * a;
    z.colwise() += layers_[l].bias;
    if (l + 1 == layers_.size()) return apply_head(z);
    a = z.cwiseMax(0.0);
  }
  return a;
}

std::vector<double> MlpNet::predict(std::span<const double> input) const {
  Matrix x = Eigen::Map<const Matrix>(input.data(), static_cast<Eigen::Index>(input.size()), 1);
  Matrix y = predict(x);
  return std::vector<double>(y.data(), y.data() + y.size());
}

const MlpNet::Matrix& MlpNet::forward(const Matrix& inputs) {
  if (inputs.rows() != input_size()) throw DomainError("network input has the wrong size");
  activations_.resize(layers_.size());
  preacts_.resize(layers_.size());
  activations_[0] = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    preacts_[l].noalias() = layers_[l].weight * activations_[l];
    preacts_[l].colwise() += layers_[l].bias;
    if (l + 1 < layers_.size()) activations_[l + 1] = preacts_[l].cwiseMax(0.0);
  }
  output_ = apply_head(preacts_.back());
  return output_;
}

MlpNet::Matrix MlpNet::backward(const Matrix& grad_out) {
  if (activations_.empty()) throw std::logic_error("backward() without a cached forward()");
  if (grad_out.rows() != output_.rows() || grad_out.cols() != output_.cols())
    throw DomainError("output gradient shape mismatch");

  Matrix dz;
  switch (head_) {
    case OutputHead::linear:
      dz = grad_out;
      break;
    case OutputHead::tanh:
      dz = grad_out.array() * (1.0 - output_.array().square());
      break;
    case OutputHead::dueling: {
      const Eigen::Index n = grad_out.rows();
      dz.resize(n + 1, grad_out.cols());
      for (Eigen::Index c = 0; c < grad_out.cols(); ++c) {
        const double total = grad_out.col(c).sum();
        dz(0, c) = total;
        dz.col(c).tail(n) = grad_out.col(c).array() - total / static_cast<double>(n);
      }
      break;
    }
  }

  for (std::size_t l = layers_.size(); l-- > 0;) {
    grads_[l].weight.noalias() += dz * activations_[l].transpose();
    grads_[l].bias += dz.rowwise().sum();
    Matrix da = layers_[l].weight.transpose() * dz;
    if (l == 0) return da;
    dz = (preacts_[l - 1].array() > 0.0).select(da, 0.0);
  }
  return {};
}

void MlpNet::zero_grad() {
  grads_.resize(layers_.size());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    grads_[l].weight.setZero(layers_[l].weight.rows(), layers_[l].weight.cols());
    grads_[l].bias.setZero(layers_[l].bias.size());
  }
}

double MlpNet::mse_backprop(const Matrix& inputs, const Matrix& targets) {
  zero_grad();
  const Matrix& out = forward(inputs);
  if (targets.rows() != out.rows() || targets.cols() != out.cols())
    throw DomainError("target batch shape mismatch");
  const double n = static_cast<double>(inputs.cols());
  const Matrix err = out - targets;
  const double loss = err.squaredNorm() / n;
  if (!std::isfinite(loss)) throw NumericError("non-finite loss in mse_backprop");
  backward((2.0 / n) * err);
  return loss;
}

std::size_t MlpNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

double& MlpNet::parameter(std::size_t i) {
  for (auto& l : layers_) {
    const auto w = static_cast<std::size_t>(l.weight.size());
    if (i < w) return l.weight.data()[i];
    i -= w;
    const auto b = static_cast<std::size_t>(l.bias.size());
    if (i < b) return l.bias.data()[i];
    i -= b;
  }
  throw std::out_of_range("parameter index");
}

double MlpNet::gradient(std::size_t i) const {
  for (const auto& l : grads_) {
    const auto w = static_cast<std::size_t>(l.weight.size());
    if (i < w) return l.weight.data()[i];
    i -= w;
    const auto b = static_cast<std::size_t>(l.bias.size());
    if (i < b) return l.bias.data()[i];
    i -= b;
  }
  throw std::out_of_range("gradient index");
}

void MlpNet::blend_from(const MlpNet& other, double tau) {
  if (other.sizes_ != sizes_ || other.head_ != head_) throw DomainError("blend between different architectures");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    layers_[l].weight = (1.0 - tau) * layers_[l].weight + tau * other.layers_[l].weight;
    layers_[l].bias = (1.0 - tau) * layers_[l].bias + tau * other.layers_[l].bias;
  }
}

AdamOptimizer::AdamOptimizer(const MlpNet& net, double learning_rate, double beta1, double beta2,
                             double eps)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& l : net.layers()) {
    m_.push_back({MlpNet::Matrix::Zero(l.weight.rows(), l.weight.cols()),
                  MlpNet::Vector::Zero(l.bias.size())});
  }
  v_ = m_;
}

void AdamOptimizer::step(MlpNet& net) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const double step = lr_ * std::sqrt(c2) / c1;
  auto& layers = net.mutable_layers();
  const auto& grads = net.gradients();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    m_[l].weight = beta1_ * m_[l].weight + (1.0 - beta1_) * grads[l].weight;
    v_[l].weight = beta2_ * v_[l].weight + (1.0 - beta2_) * grads[l].weight.cwiseAbs2();
    layers[l].weight.array() -= step * m_[l].weight.array() / (v_[l].weight.array().sqrt() + eps_);
    m_[l].bias = beta1_ * m_[l].bias + (1.0 - beta1_) * grads[l].bias;
    v_[l].bias = beta2_ * v_[l].bias + (1.0 - beta2_) * grads[l].bias.cwiseAbs2();
    layers[l].bias.array() -= step * m_[l].bias.array() / (v_[l].bias.array().sqrt() + eps_);
  }
}

}  // namespace rplab
