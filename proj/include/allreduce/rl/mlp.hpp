#ifndef ALLREDUCE_RL_MLP_HPP_
#define ALLREDUCE_RL_MLP_HPP_

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "allreduce/rng.hpp"

namespace allreduce::rl {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Fully connected tanh network with a linear output layer. The network owns
// no weights: it reads and writes a caller-provided flat parameter span laid
// out layer by layer as W (out x in, row-major) followed by b (out).
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<int> sizes);

  const std::vector<int>& sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  int num_params() const { return num_params_; }

  // Uniform Glorot init for hidden layers; the output layer is scaled down
  // by output_scale so fresh policies start close to uniform.
  void init(std::span<double> params, Rng& rng, double output_scale) const;

  struct Cache {
    std::vector<Matrix> activations;  // input, then each layer's output
  };

  // x holds one sample per row.
  Matrix forward(std::span<const double> params, const Matrix& x, Cache* cache = nullptr) const;

  // Adds dLoss/dparams to grads given dLoss/doutput for the cached forward pass.
  void backward(std::span<const double> params, const Cache& cache, const Matrix& grad_out,
                std::span<double> grads) const;

 private:
  std::vector<int> sizes_;
  std::vector<int> offsets_;  // start of each layer's W
  int num_params_ = 0;
};

// Adam over a flat parameter vector.
class Adam {
 public:
  Adam() = default;
  explicit Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::span<double> params, std::span<const double> grads);
  double learning_rate() const { return lr_; }
  long long steps() const { return t_; }

 private:
  double lr_ = 3e-4;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long long t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

// Scales grads in place so their L2 norm is at most max_norm; returns the
// norm before clipping.
double clip_grad_norm(std::span<double> grads, double max_norm);

}  // namespace allreduce::rl

#endif  // ALLREDUCE_RL_MLP_HPP_
