#include <cmath>
#include <string>

#include "pbvf/numerics.hpp"

namespace pbvf {

namespace {

using ConstWeightMap = Eigen::Map<const RowMajorMatrix>;
using WeightMap = Eigen::Map<RowMajorMatrix>;

void check_params(const MlpShape& shape, const ConstVectorRef& params) {
  if (static_cast<std::size_t>(params.size()) != shape.num_params()) {
    throw ShapeError("mlp: expected " + std::to_string(shape.num_params()) + " parameters, got " +
                     std::to_string(params.size()));
  }
}

ConstWeightMap weights_of(const MlpShape& shape, const ConstVectorRef& params, int layer) {
  const auto& sizes = shape.layer_sizes();
  return ConstWeightMap(params.data() + shape.weight_offset(layer), sizes[layer + 1], sizes[layer]);
}

Eigen::Map<const Vector> bias_of(const MlpShape& shape, const ConstVectorRef& params, int layer) {
  return Eigen::Map<const Vector>(params.data() + shape.bias_offset(layer), shape.layer_sizes()[layer + 1]);
}

template <typename Derived>
void activate(Activation a, Eigen::MatrixBase<Derived>& z) {
  switch (a) {
    case Activation::identity:
      break;
    case Activation::relu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::tanh:
      z = z.array().tanh().matrix();
      break;
  }
}

// d(activation)/d(pre-activation), expressed through the post-activation value.
void scale_by_derivative(Activation a, const Matrix& post, Matrix& delta) {
  switch (a) {
    case Activation::identity:
      break;
    case Activation::relu:
      delta = (post.array() > 0.0).select(delta, 0.0);
      break;
    case Activation::tanh:
      delta.array() *= 1.0 - post.array().square();
      break;
  }
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::identity:
      return "identity";
    case Activation::relu:
      return "relu";
    case Activation::tanh:
      return "tanh";
  }
  return "identity";
}

Activation activation_from_string(std::string_view name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw InputError("unknown activation '" + std::string(name) + "'");
}

MlpShape::MlpShape(std::vector<int> layer_sizes, Activation hidden, Activation output)
    : layer_sizes_(std::move(layer_sizes)), hidden_(hidden), output_(output) {
  if (layer_sizes_.size() < 2) throw ShapeError("mlp: need at least input and output sizes");
  for (int s : layer_sizes_) {
    if (s <= 0) throw ShapeError("mlp: layer sizes must be positive");
  }
  offsets_.reserve(layer_sizes_.size() - 1);
  std::size_t offset = 0;
  for (std::size_t i = 0; i + 1 < layer_sizes_.size(); ++i) {
    offsets_.push_back(offset);
    const auto in = static_cast<std::size_t>(layer_sizes_[i]);
    const auto out = static_cast<std::size_t>(layer_sizes_[i + 1]);
    offset += in * out + out;
  }
  num_params_ = offset;
}

std::vector<LayerParams> unflatten(const MlpShape& shape, const ConstVectorRef& params) {
  check_params(shape, params);
  std::vector<LayerParams> layers;
  layers.reserve(shape.num_layers());
  for (int l = 0; l < shape.num_layers(); ++l) {
    layers.push_back({Matrix(weights_of(shape, params, l)), Vector(bias_of(shape, params, l))});
  }
  return layers;
}

Vector flatten(const MlpShape& shape, const std::vector<LayerParams>& layers) {
  if (static_cast<int>(layers.size()) != shape.num_layers()) throw ShapeError("flatten: layer count mismatch");
  Vector params(shape.num_params());
  const auto& sizes = shape.layer_sizes();
  for (int l = 0; l < shape.num_layers(); ++l) {
    const auto& layer = layers[l];
    if (layer.weights.rows() != sizes[l + 1] || layer.weights.cols() != sizes[l] || layer.bias.size() != sizes[l + 1]) {
      throw ShapeError("flatten: layer " + std::to_string(l) + " has the wrong dimensions");
    }
    WeightMap(params.data() + shape.weight_offset(l), sizes[l + 1], sizes[l]) = layer.weights;
    params.segment(static_cast<Eigen::Index>(shape.bias_offset(l)), sizes[l + 1]) = layer.bias;
  }
  return params;
}

Vector mlp_forward(const MlpShape& shape, const ConstVectorRef& params, const ConstVectorRef& x) {
  check_params(shape, params);
  if (x.size() != shape.input_dim()) {
    throw ShapeError("mlp_forward: input has " + std::to_string(x.size()) + " entries, expected " +
                     std::to_string(shape.input_dim()));
  }
  Vector a = x;
  for (int l = 0; l < shape.num_layers(); ++l) {
    Vector z = weights_of(shape, params, l) * a + bias_of(shape, params, l);
    activate(shape.activation_of(l), z);
    a = std::move(z);
  }
  return a;
}

Matrix mlp_forward_batch(const MlpShape& shape, const ConstVectorRef& params, const Matrix& inputs, MlpCache* cache) {
  check_params(shape, params);
  if (inputs.rows() != shape.input_dim()) {
    throw ShapeError("mlp_forward_batch: inputs have " + std::to_string(inputs.rows()) + " rows, expected " +
                     std::to_string(shape.input_dim()));
  }
  if (cache != nullptr) {
    cache->activations.clear();
    cache->activations.reserve(shape.num_layers() + 1);
    cache->activations.push_back(inputs);
  }
  Matrix a = inputs;
  for (int l = 0; l < shape.num_layers(); ++l) {
    Matrix z = weights_of(shape, params, l) * a;
    z.colwise() += bias_of(shape, params, l);
    activate(shape.activation_of(l), z);
    if (cache != nullptr) cache->activations.push_back(z);
    a = std::move(z);
  }
  return a;
}

void mlp_backward_batch(const MlpShape& shape, const ConstVectorRef& params, const MlpCache& cache,
                        const Matrix& upstream, Vector* grad_weights, Matrix* grad_input) {
  check_params(shape, params);
  const int layers = shape.num_layers();
  if (static_cast<int>(cache.activations.size()) != layers + 1) throw ShapeError("mlp_backward: stale cache");
  const Eigen::Index batch = cache.activations.front().cols();
  if (upstream.rows() != shape.output_dim() || upstream.cols() != batch) {
    throw ShapeError("mlp_backward: upstream must be " + std::to_string(shape.output_dim()) + " x " +
                     std::to_string(batch));
  }
  if (grad_weights != nullptr && static_cast<std::size_t>(grad_weights->size()) != shape.num_params()) {
    throw ShapeError("mlp_backward: gradient accumulator has the wrong length");
  }
  const auto& sizes = shape.layer_sizes();
  Matrix delta = upstream;
  scale_by_derivative(shape.activation_of(layers - 1), cache.activations[layers], delta);
  for (int l = layers - 1; l >= 0; --l) {
    const Matrix& a_in = cache.activations[l];
    if (grad_weights != nullptr) {
      WeightMap gw(grad_weights->data() + shape.weight_offset(l), sizes[l + 1], sizes[l]);
      gw.noalias() += delta * a_in.transpose();
      grad_weights->segment(static_cast<Eigen::Index>(shape.bias_offset(l)), sizes[l + 1]) += delta.rowwise().sum();
    }
    if (l == 0 && grad_input == nullptr) break;
    Matrix prev = weights_of(shape, params, l).transpose() * delta;
    if (l == 0) {
      *grad_input = std::move(prev);
    } else {
      scale_by_derivative(shape.activation_of(l - 1), a_in, prev);
      delta = std::move(prev);
    }
  }
}

MlpGradients mlp_backward(const MlpShape& shape, const ConstVectorRef& params, const ConstVectorRef& x,
                          const ConstVectorRef& upstream) {
  if (upstream.size() != shape.output_dim()) {
    throw ShapeError("mlp_backward: upstream has " + std::to_string(upstream.size()) + " entries, expected " +
                     std::to_string(shape.output_dim()));
  }
  MlpCache cache;
  mlp_forward_batch(shape, params, Matrix(x), &cache);
  MlpGradients g{Vector::Zero(static_cast<Eigen::Index>(shape.num_params())), Vector()};
  Matrix grad_input;
  mlp_backward_batch(shape, params, cache, Matrix(upstream), &g.weights, &grad_input);
  g.input = grad_input.col(0);
  return g;
}

MlpNet::MlpNet(MlpShape shape, Vector params) : shape_(std::move(shape)), params_(std::move(params)) {
  check_params(shape_, params_);
}

MlpNet MlpNet::zeros(MlpShape shape) {
  const auto n = static_cast<Eigen::Index>(shape.num_params());
  return MlpNet(std::move(shape), Vector::Zero(n));
}

}  // namespace pbvf
