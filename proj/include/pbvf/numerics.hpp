#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "pbvf/errors.hpp"

namespace pbvf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstVectorRef = Eigen::Ref<const Vector>;

enum class Activation { identity, relu, tanh };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

// Layer sizes plus activations of a feed-forward network.
//
// The flat parameter layout is fixed: for each layer i (input size n_i,
// output size n_{i+1}) the weight matrix is stored row-major (n_{i+1} x n_i)
// followed by the bias vector (n_{i+1}). Critics and policies both rely on
// this layout, so it must not change.
class MlpShape {
 public:
  MlpShape() = default;
  MlpShape(std::vector<int> layer_sizes, Activation hidden, Activation output);

  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  Activation hidden_activation() const { return hidden_; }
  Activation output_activation() const { return output_; }

  int input_dim() const { return layer_sizes_.front(); }
  int output_dim() const { return layer_sizes_.back(); }
  int num_layers() const { return static_cast<int>(layer_sizes_.size()) - 1; }
  std::size_t num_params() const { return num_params_; }

  std::size_t weight_offset(int layer) const { return offsets_[layer]; }
  std::size_t bias_offset(int layer) const {
    return offsets_[layer] + static_cast<std::size_t>(layer_sizes_[layer + 1]) * layer_sizes_[layer];
  }
  Activation activation_of(int layer) const { return layer + 1 == num_layers() ? output_ : hidden_; }

  friend bool operator==(const MlpShape&, const MlpShape&) = default;

 private:
  std::vector<int> layer_sizes_;
  Activation hidden_ = Activation::tanh;
  Activation output_ = Activation::identity;
  std::vector<std::size_t> offsets_;
  std::size_t num_params_ = 0;
};

struct LayerParams {
  Matrix weights;  // (out x in)
  Vector bias;     // (out)
};

std::vector<LayerParams> unflatten(const MlpShape& shape, const ConstVectorRef& params);
Vector flatten(const MlpShape& shape, const std::vector<LayerParams>& layers);

// Post-activation values of every layer from a batched forward pass; column j
// of every matrix belongs to sample j. activations[0] is the input itself.
struct MlpCache {
  std::vector<Matrix> activations;
};

Vector mlp_forward(const MlpShape& shape, const ConstVectorRef& params, const ConstVectorRef& x);

// Columns of `inputs` are samples. When `cache` is non-null it receives what
// mlp_backward_batch needs.
Matrix mlp_forward_batch(const MlpShape& shape, const ConstVectorRef& params, const Matrix& inputs,
                         MlpCache* cache = nullptr);

struct MlpGradients {
  Vector weights;  // upstream^T dy/dw, flat layout
  Vector input;    // upstream^T dy/dx
};

MlpGradients mlp_backward(const MlpShape& shape, const ConstVectorRef& params, const ConstVectorRef& x,
                          const ConstVectorRef& upstream);

// Batched vector-Jacobian products. `upstream` is (output_dim x batch). The
// weight gradient is summed over the batch and added into *grad_weights when
// non-null; *grad_input (input_dim x batch) is overwritten when non-null.
void mlp_backward_batch(const MlpShape& shape, const ConstVectorRef& params, const MlpCache& cache,
                        const Matrix& upstream, Vector* grad_weights, Matrix* grad_input);

// Owning pairing of a shape with its parameters.
class MlpNet {
 public:
  MlpNet() = default;
  MlpNet(MlpShape shape, Vector params);

  static MlpNet zeros(MlpShape shape);

  const MlpShape& shape() const { return shape_; }
  const Vector& params() const { return params_; }
  Vector& params() { return params_; }

  Vector forward(const ConstVectorRef& x) const { return mlp_forward(shape_, params_, x); }
  MlpGradients backward(const ConstVectorRef& x, const ConstVectorRef& upstream) const {
    return mlp_backward(shape_, params_, x, upstream);
  }

 private:
  MlpShape shape_;
  Vector params_;
};

// Adam with bias correction. Constants default to the usual 0.9 / 0.999 / 1e-8.
struct AdamState {
  AdamState() = default;
  AdamState(std::size_t num_params, double lr, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

  std::uint64_t step_count = 0;
  Vector m;
  Vector v;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Descent step: params -= lr * m_hat / (sqrt(v_hat) + eps). Negate the
// gradient for ascent.
void adam_step(AdamState& state, Eigen::Ref<Vector> params, const ConstVectorRef& grads);

// Deterministic per-seed random stream. split() derives an independent child
// stream, which is how runs, environments and evaluators get their own RNGs.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t uniform_index(std::size_t n);
  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();
  SeededRng split();

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);
// Mixes several integers into one seed; used to derive per-purpose seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

Vector gaussian_sample(SeededRng& rng, int dim, double sigma);

// Central differences (f(x + eps e_i) - f(x - eps e_i)) / (2 eps).
Vector finite_diff(const std::function<double(const Vector&)>& f, const Vector& x, double eps = 1e-5);

// max_i |a_i - b_i| / max(||a||_inf, ||b||_inf); 0 when both are zero.
double max_relative_error(const ConstVectorRef& a, const ConstVectorRef& b);

}  // namespace pbvf
