#pragma once

// Independent reference computations used only by tests. Nothing here calls
// into the library's numerical routines.

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/LU>

namespace feval::testing {

// Phi(x) = 1/2 + integral_0^x phi(t) dt by composite Simpson.
inline double quadrature_normal_cdf(double x) {
  const auto pdf = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); };
  const int panels = 20000;
  const double h = x / panels;
  double acc = pdf(0.0) + pdf(x);
  for (int i = 1; i < panels; ++i) acc += (i % 2 ? 4.0 : 2.0) * pdf(i * h);
  return 0.5 + acc * h / 3.0;
}

// Phi^{-1}(p) by bisection on the quadrature CDF.
inline double bisection_normal_quantile(double p) {
  double lo = -12.0;
  double hi = 12.0;
  for (int i = 0; i < 200 && hi - lo > 1e-14; ++i) {
    const double mid = 0.5 * (lo + hi);
    (quadrature_normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Log marginal density of y ~ N(m 1, Sigma + tau2 I) by a dense Cholesky.
inline double dense_log_marginal(const Eigen::VectorXd& y, const Eigen::MatrixXd& sigma, double m,
                                 double tau2) {
  const Eigen::Index k = y.size();
  Eigen::MatrixXd v = sigma;
  v.diagonal().array() += tau2;
  const Eigen::LLT<Eigen::MatrixXd> llt(v);
  const Eigen::VectorXd r = y - Eigen::VectorXd::Constant(k, m);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * (logdet + r.dot(llt.solve(r)) + k * std::log(2.0 * std::numbers::pi));
}

// Brute-force maximizer of the marginal likelihood over a (m, tau2) grid,
// refined by successive zooming.
struct GridMaximum {
  double m;
  double tau2;
  double value;
};

inline GridMaximum grid_marginal_maximum(const Eigen::VectorXd& y, const Eigen::MatrixXd& sigma,
                                         double tau2_max) {
  double m_lo = y.minCoeff(), m_hi = y.maxCoeff();
  double t_lo = 0.0, t_hi = tau2_max;
  GridMaximum best{0.5 * (m_lo + m_hi), 0.0, -INFINITY};
  for (int round = 0; round < 12; ++round) {
    const int n = 60;
    for (int i = 0; i <= n; ++i) {
      const double m = m_lo + (m_hi - m_lo) * i / n;
      for (int j = 0; j <= n; ++j) {
        const double t = t_lo + (t_hi - t_lo) * j / n;
        const double v = dense_log_marginal(y, sigma, m, t);
        if (v > best.value) best = {m, t, v};
      }
    }
    const double dm = 2.0 * (m_hi - m_lo) / n;
    const double dt = 2.0 * (t_hi - t_lo) / n;
    m_lo = best.m - dm;
    m_hi = best.m + dm;
    t_lo = std::max(0.0, best.tau2 - dt);
    t_hi = best.tau2 + dt;
  }
  return best;
}

// NPMLE on a fixed grid by a primal log-barrier interior-point method:
// maximize sum_k log (L w)_k over the simplex. Returns the log-likelihood
// (including the normal density constants) at the final iterate; the barrier
// duality gap at exit is below G / t_final.
inline double interior_point_npmle(const Eigen::VectorXd& y, const Eigen::VectorXd& se,
                                   const Eigen::VectorXd& grid) {
  const Eigen::Index k = y.size();
  const Eigen::Index g = grid.size();
  Eigen::MatrixXd lik(k, g);
  Eigen::VectorXd offset(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < g; ++j) {
      const double z = (y[i] - grid[j]) / se[i];
      lik(i, j) = -0.5 * z * z - std::log(se[i]) - 0.5 * std::log(2.0 * std::numbers::pi);
    }
    offset[i] = lik.row(i).maxCoeff();
    lik.row(i) = (lik.row(i).array() - offset[i]).exp();
  }
  Eigen::VectorXd w = Eigen::VectorXd::Constant(g, 1.0 / g);
  const auto objective = [&](const Eigen::VectorXd& v, double t) {
    return t * (lik * v).array().log().sum() + v.array().log().sum();
  };
  for (double t = 1.0; t < 1e12; t *= 8.0) {
    for (int it = 0; it < 200; ++it) {
      const Eigen::VectorXd f = lik * w;
      const Eigen::VectorXd grad =
          t * lik.transpose() * f.cwiseInverse() + w.cwiseInverse();
      Eigen::MatrixXd hess = -t * lik.transpose() * f.array().square().inverse().matrix().asDiagonal() * lik;
      hess.diagonal() -= w.array().square().inverse().matrix();
      Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(g + 1, g + 1);
      kkt.topLeftCorner(g, g) = hess;
      kkt.block(0, g, g, 1).setOnes();
      kkt.block(g, 0, 1, g).setOnes();
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(g + 1);
      rhs.head(g) = -grad;
      const Eigen::VectorXd sol = kkt.partialPivLu().solve(rhs);
      const Eigen::VectorXd step = sol.head(g);
      const double decrement = -step.dot(hess * step);
      if (decrement / 2.0 < 1e-12) break;
      double a = 1.0;
      while (((w + a * step).array() <= 0.0).any()) a *= 0.5;
      const double base = objective(w, t);
      while (objective(w + a * step, t) < base + 0.25 * a * grad.dot(step) && a > 1e-16) a *= 0.5;
      w += a * step;
      w /= w.sum();
    }
  }
  return ((lik * w).array().log().matrix() + offset).sum();
}

}  // namespace feval::testing
