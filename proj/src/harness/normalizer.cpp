#include <cmath>

#include "pbvf/config.hpp"
#include "pbvf/errors.hpp"

namespace pbvf {

namespace {
constexpr double kStdFloor = 1e-8;
}

RunningNormalizer::RunningNormalizer(int dim) : mean_(Vector::Zero(dim)), m2_(Vector::Zero(dim)) {
  if (dim < 1) throw InputError("RunningNormalizer: dimension must be positive");
}

void RunningNormalizer::check_dim(Eigen::Index n) const {
  if (n != mean_.size()) {
    throw InputError("RunningNormalizer: observation has dimension " + std::to_string(n) + ", expected " +
                     std::to_string(mean_.size()));
  }
}

Vector RunningNormalizer::update_apply(const ConstVectorRef& obs) {
  check_dim(obs.size());
  ++count_;
  const Vector delta = obs - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_.array() += delta.array() * (obs - mean_).array();
  return apply(obs);
}

Vector RunningNormalizer::variance() const {
  if (count_ == 0) return Vector::Zero(mean_.size());
  return (m2_ / static_cast<double>(count_)).cwiseMax(0.0);
}

Vector RunningNormalizer::stddev() const { return variance().cwiseSqrt(); }

Vector RunningNormalizer::apply(const ConstVectorRef& obs) const {
  check_dim(obs.size());
  ++calls_;
  return ((obs - mean_).array() / stddev().array().max(kStdFloor)).matrix();
}

Matrix RunningNormalizer::apply_batch(const Matrix& obs) const {
  check_dim(obs.rows());
  ++calls_;
  const Vector inv = stddev().array().max(kStdFloor).inverse().matrix();
  return (obs.colwise() - mean_).array().colwise() * inv.array();
}

}  // namespace pbvf
