#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace feval {

// Seedable random stream. Every Monte Carlo loop in the library derives one
// stream per iteration index from a root seed, so results do not depend on
// thread count or scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Independent stream `index` of the family rooted at `root_seed`.
  static Rng substream(std::uint64_t root_seed, std::uint64_t index);

  double uniform();  // [0, 1)
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  // Uniform integer in [0, n).
  std::size_t index(std::size_t n);

  // Dir(1, ..., 1) of the given dimension; entries sum to 1.
  Eigen::VectorXd flat_dirichlet(Eigen::Index dim);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// SplitMix64 finalizer; used to decorrelate derived seeds.
std::uint64_t mix_seed(std::uint64_t x);

}  // namespace feval
