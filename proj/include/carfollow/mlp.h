#pragma once

#include <random>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace carfollow {

enum class Activation { kLinear, kTanh };

std::string_view ToString(Activation activation);
Activation ParseActivation(std::string_view name);

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
  Activation activation = Activation::kLinear;
};

struct LayerGradient {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
};

using MlpGradients = std::vector<LayerGradient>;

// Fully connected network on column-major batches (one sample per column).
// The final activation output is multiplied by output_scale, which is how the
// actor maps tanh onto [-3, 3] m/s^2.
class Mlp {
 public:
  Mlp() = default;
  // Fan-in uniform initialisation; the last layer uses +/- final_init.
  Mlp(std::span<const int> sizes, Activation hidden, Activation output, double output_scale,
      std::mt19937_64& rng, double final_init = 3e-3);
  Mlp(std::vector<DenseLayer> layers, double output_scale);

  // Activations recorded by the taping forward pass.
  struct Tape {
    std::vector<Eigen::MatrixXd> values;  // values[0] = input, values[k] = layer k output
  };

  Eigen::MatrixXd Forward(const Eigen::MatrixXd& inputs) const;
  Eigen::MatrixXd Forward(const Eigen::MatrixXd& inputs, Tape& tape) const;

  // Gradients of a loss given dL/d(output); parameter gradients are summed
  // over the batch. When `input_grad` is non-null it receives dL/d(input).
  MlpGradients Backward(const Tape& tape, const Eigen::MatrixXd& output_grad,
                        Eigen::MatrixXd* input_grad = nullptr) const;

  // this <- tau * source + (1 - tau) * this
  void SoftUpdateFrom(const Mlp& source, double tau);

  int input_size() const;
  int output_size() const;
  std::vector<int> sizes() const;
  double output_scale() const { return output_scale_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }

  std::size_t num_parameters() const;
  Eigen::VectorXd FlatParameters() const;
  void SetFlatParameters(const Eigen::VectorXd& flat);

  // Throws ConfigError when shapes do not chain or an entry is non-finite.
  void Validate() const;

 private:
  std::vector<DenseLayer> layers_;
  double output_scale_ = 1.0;
};

Eigen::VectorXd FlattenGradients(const MlpGradients& grads);

// Adam on the parameters of one network (gradient descent direction).
class Adam {
 public:
  Adam() = default;
  Adam(const Mlp& net, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
       double epsilon = 1e-8);
  void Step(Mlp& net, const MlpGradients& grads);

 private:
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  MlpGradients m_, v_;
};

}  // namespace carfollow
