#include "allreduce/rl/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace allreduce::rl {

namespace {

using ConstMatrixMap = Eigen::Map<const Matrix>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstRowMap = Eigen::Map<const Eigen::RowVectorXd>;
using RowMap = Eigen::Map<Eigen::RowVectorXd>;

}  // namespace

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("Mlp needs at least two layer sizes");
  for (int s : sizes_) {
    if (s < 1) throw std::invalid_argument("Mlp layer sizes must be positive");
  }
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(num_params_);
    num_params_ += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
  }
}

void Mlp::init(std::span<double> params, Rng& rng, double output_scale) const {
  if (static_cast<int>(params.size()) != num_params_) {
    throw std::invalid_argument("Mlp::init: parameter size mismatch");
  }
  const std::size_t layers = offsets_.size();
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = sizes_[l], out = sizes_[l + 1];
    double limit = std::sqrt(6.0 / (in + out));
    if (l + 1 == layers) limit *= output_scale;
    double* w = params.data() + offsets_[l];
    for (int i = 0; i < in * out; ++i) w[i] = (2.0 * uniform01(rng) - 1.0) * limit;
    for (int i = 0; i < out; ++i) w[in * out + i] = 0.0;
  }
}

Matrix Mlp::forward(std::span<const double> params, const Matrix& x, Cache* cache) const {
  if (x.cols() != input_size()) throw std::invalid_argument("Mlp::forward: input width mismatch");
  if (static_cast<int>(params.size()) != num_params_) {
    throw std::invalid_argument("Mlp::forward: parameter size mismatch");
  }
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(x);
  }
  Matrix h = x;
  const std::size_t layers = offsets_.size();
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = sizes_[l], out = sizes_[l + 1];
    ConstMatrixMap w(params.data() + offsets_[l], out, in);
    ConstRowMap b(params.data() + offsets_[l] + in * out, out);
    Matrix z = h * w.transpose();
    z.rowwise() += b;
    if (l + 1 < layers) z = z.array().tanh().matrix();
    h = std::move(z);
    if (cache) cache->activations.push_back(h);
  }
  return h;
}

void Mlp::backward(std::span<const double> params, const Cache& cache, const Matrix& grad_out,
                   std::span<double> grads) const {
  if (static_cast<int>(grads.size()) != num_params_) {
    throw std::invalid_argument("Mlp::backward: gradient size mismatch");
  }
  const std::size_t layers = offsets_.size();
  if (cache.activations.size() != layers + 1) {
    throw std::invalid_argument("Mlp::backward: cache does not match network");
  }
  Matrix delta = grad_out;  // dLoss/dz of the current layer
  for (std::size_t l = layers; l-- > 0;) {
    const int in = sizes_[l], out = sizes_[l + 1];
    const Matrix& input = cache.activations[l];
    MatrixMap gw(grads.data() + offsets_[l], out, in);
    RowMap gb(grads.data() + offsets_[l] + in * out, out);
    gw.noalias() += delta.transpose() * input;
    gb += delta.colwise().sum();
    if (l == 0) break;
    ConstMatrixMap w(params.data() + offsets_[l], out, in);
    Matrix upstream = delta * w;
    // input is tanh output of the previous layer: d tanh = 1 - a^2.
    delta = upstream.array() * (1.0 - input.array().square());
  }
}

void Adam::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw std::invalid_argument("Adam::step: size mismatch");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

double clip_grad_norm(std::span<double> grads, double max_norm) {
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& g : grads) g *= scale;
  }
  return norm;
}

}  // namespace allreduce::rl
