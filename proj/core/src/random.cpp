#include "feval/random.hpp"

namespace feval {

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng Rng::substream(std::uint64_t root_seed, std::uint64_t index) {
  return Rng(mix_seed(mix_seed(root_seed) ^ mix_seed(index + 0x632be59bd9b4e019ULL)));
}

double Rng::uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

double Rng::normal() { return normal_(engine_); }

std::size_t Rng::index(std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

Eigen::VectorXd Rng::flat_dirichlet(Eigen::Index dim) {
  std::exponential_distribution<double> expo(1.0);
  Eigen::VectorXd w(dim);
  double total = 0.0;
  for (Eigen::Index i = 0; i < dim; ++i) {
    w[i] = expo(engine_);
    total += w[i];
  }
  return w / total;
}

}  // namespace feval
