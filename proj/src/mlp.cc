#include "carfollow/mlp.h"

#include <cmath>
#include <string>

#include "carfollow/errors.h"

namespace carfollow {

std::string_view ToString(Activation activation) {
  return activation == Activation::kTanh ? "tanh" : "linear";
}

Activation ParseActivation(std::string_view name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "linear") return Activation::kLinear;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

Mlp::Mlp(std::span<const int> sizes, Activation hidden, Activation output, double output_scale,
         std::mt19937_64& rng, double final_init)
    : output_scale_(output_scale) {
  if (sizes.size() < 2) throw ConfigError("an MLP needs at least input and output sizes");
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    const int in = sizes[k];
    const int out = sizes[k + 1];
    if (in <= 0 || out <= 0) throw ConfigError("layer sizes must be positive");
    const bool last = k + 2 == sizes.size();
    const double bound = last ? final_init : 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> init(-bound, bound);
    DenseLayer layer;
    layer.weight.resize(out, in);
    layer.bias.resize(out);
    for (int c = 0; c < in; ++c) {
      for (int r = 0; r < out; ++r) layer.weight(r, c) = init(rng);
    }
    for (int r = 0; r < out; ++r) layer.bias(r) = init(rng);
    layer.activation = last ? output : hidden;
    layers_.push_back(std::move(layer));
  }
}

Mlp::Mlp(std::vector<DenseLayer> layers, double output_scale)
    : layers_(std::move(layers)), output_scale_(output_scale) {
  Validate();
}

void Mlp::Validate() const {
  if (layers_.empty()) throw ConfigError("MLP has no layers");
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& layer = layers_[k];
    if (layer.bias.size() != layer.weight.rows()) {
      throw ConfigError("layer " + std::to_string(k) + ": bias size does not match weight rows");
    }
    if (k > 0 && layer.weight.cols() != layers_[k - 1].weight.rows()) {
      throw ConfigError("layer " + std::to_string(k) + ": input size does not chain");
    }
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
      throw ConfigError("layer " + std::to_string(k) + " has non-finite parameters");
    }
  }
  if (!std::isfinite(output_scale_)) throw ConfigError("non-finite output scale");
}

int Mlp::input_size() const { return static_cast<int>(layers_.front().weight.cols()); }
int Mlp::output_size() const { return static_cast<int>(layers_.back().weight.rows()); }

std::vector<int> Mlp::sizes() const {
  std::vector<int> out{input_size()};
  for (const auto& layer : layers_) out.push_back(static_cast<int>(layer.weight.rows()));
  return out;
}

namespace {

void Apply(Activation activation, Eigen::MatrixXd& z) {
  if (activation == Activation::kTanh) z = z.array().tanh().matrix();
}

}  // namespace

Eigen::MatrixXd Mlp::Forward(const Eigen::MatrixXd& inputs) const {
  if (inputs.rows() != input_size()) {
    throw ConfigError("MLP input has " + std::to_string(inputs.rows()) + " rows, expected " +
                      std::to_string(input_size()));
  }
  Eigen::MatrixXd x = inputs;
  for (const auto& layer : layers_) {
    Eigen::MatrixXd z = layer.weight * x;
    z.colwise() += layer.bias;
    Apply(layer.activation, z);
    x = std::move(z);
  }
  return x * output_scale_;
}

Eigen::MatrixXd Mlp::Forward(const Eigen::MatrixXd& inputs, Tape& tape) const {
  if (inputs.rows() != input_size()) {
    throw ConfigError("MLP input has " + std::to_string(inputs.rows()) + " rows, expected " +
                      std::to_string(input_size()));
  }
  tape.values.clear();
  tape.values.reserve(layers_.size() + 1);
  tape.values.push_back(inputs);
  for (const auto& layer : layers_) {
    Eigen::MatrixXd z = layer.weight * tape.values.back();
    z.colwise() += layer.bias;
    Apply(layer.activation, z);
    tape.values.push_back(std::move(z));
  }
  return tape.values.back() * output_scale_;
}

MlpGradients Mlp::Backward(const Tape& tape, const Eigen::MatrixXd& output_grad,
                           Eigen::MatrixXd* input_grad) const {
  MlpGradients grads(layers_.size());
  // Gradient w.r.t. the unscaled output of the current layer.
  Eigen::MatrixXd delta = output_grad * output_scale_;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const auto& layer = layers_[k];
    const Eigen::MatrixXd& out = tape.values[k + 1];
    if (layer.activation == Activation::kTanh) {
      delta = (delta.array() * (1.0 - out.array().square())).matrix();
    }
    grads[k].weight = delta * tape.values[k].transpose();
    grads[k].bias = delta.rowwise().sum();
    if (k > 0 || input_grad != nullptr) {
      delta = layer.weight.transpose() * delta;
    }
  }
  if (input_grad != nullptr) *input_grad = std::move(delta);
  return grads;
}

void Mlp::SoftUpdateFrom(const Mlp& source, double tau) {
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    layers_[k].weight = tau * source.layers_[k].weight + (1.0 - tau) * layers_[k].weight;
    layers_[k].bias = tau * source.layers_[k].bias + (1.0 - tau) * layers_[k].bias;
  }
}

std::size_t Mlp::num_parameters() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return n;
}

Eigen::VectorXd Mlp::FlatParameters() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(num_parameters()));
  Eigen::Index offset = 0;
  for (const auto& layer : layers_) {
    flat.segment(offset, layer.weight.size()) = layer.weight.reshaped();
    offset += layer.weight.size();
    flat.segment(offset, layer.bias.size()) = layer.bias;
    offset += layer.bias.size();
  }
  return flat;
}

void Mlp::SetFlatParameters(const Eigen::VectorXd& flat) {
  if (flat.size() != static_cast<Eigen::Index>(num_parameters())) {
    throw ConfigError("flat parameter vector has the wrong size");
  }
  Eigen::Index offset = 0;
  for (auto& layer : layers_) {
    layer.weight.reshaped() = flat.segment(offset, layer.weight.size());
    offset += layer.weight.size();
    layer.bias = flat.segment(offset, layer.bias.size());
    offset += layer.bias.size();
  }
}

Eigen::VectorXd FlattenGradients(const MlpGradients& grads) {
  Eigen::Index n = 0;
  for (const auto& g : grads) n += g.weight.size() + g.bias.size();
  Eigen::VectorXd flat(n);
  Eigen::Index offset = 0;
  for (const auto& g : grads) {
    flat.segment(offset, g.weight.size()) = g.weight.reshaped();
    offset += g.weight.size();
    flat.segment(offset, g.bias.size()) = g.bias;
    offset += g.bias.size();
  }
  return flat;
}

Adam::Adam(const Mlp& net, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {
  for (const auto& layer : net.layers()) {
    LayerGradient zero{Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                       Eigen::VectorXd::Zero(layer.bias.size())};
    m_.push_back(zero);
    v_.push_back(std::move(zero));
  }
}

void Adam::Step(Mlp& net, const MlpGradients& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto& layers = net.mutable_layers();
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    param.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  };
  for (std::size_t k = 0; k < layers.size(); ++k) {
    update(layers[k].weight, m_[k].weight, v_[k].weight, grads[k].weight);
    update(layers[k].bias, m_[k].bias, v_[k].bias, grads[k].bias);
  }
}

}  // namespace carfollow
