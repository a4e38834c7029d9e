#include <cmath>
#include <numbers>

#include "pbvf/numerics.hpp"

namespace pbvf {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(base) ^ a) ^ b);
}

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

std::size_t SeededRng::uniform_index(std::size_t n) {
  if (n == 0) throw InputError("uniform_index: empty range");
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

double SeededRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // 1 - uniform() lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

SeededRng SeededRng::split() { return SeededRng(splitmix64(engine_())); }

Vector gaussian_sample(SeededRng& rng, int dim, double sigma) {
  if (dim < 1) throw InputError("gaussian_sample: dim must be >= 1");
  if (!(sigma >= 0.0)) throw InputError("gaussian_sample: sigma must be >= 0");
  Vector out(dim);
  for (int i = 0; i < dim; ++i) out[i] = sigma * rng.normal();
  return out;
}

}  // namespace pbvf
