#include "feval/empirical_bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <boost/math/tools/roots.hpp>

#include "feval/errors.hpp"
#include "feval/normal.hpp"

namespace feval {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr int kPolishRounds = 500;
constexpr double kEmHandoff = 1e-6;
constexpr double kGapWarning = 1e-6;

// Sigma = Q diag(lambda) Q^T, so Sigma + tau2 I is diagonal in the same basis
// and the profile likelihood costs O(K) per evaluation.
struct SpectralMarginal {
  Eigen::VectorXd lambda;
  Eigen::VectorXd y_rot;
  Eigen::VectorXd ones_rot;

  explicit SpectralMarginal(const EffectEstimates& data) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(data.covariance());
    const double floor = 1e-12 * std::max(1.0, eig.eigenvalues().maxCoeff());
    lambda = eig.eigenvalues().cwiseMax(floor);
    y_rot = eig.eigenvectors().transpose() * data.estimates();
    ones_rot = eig.eigenvectors().transpose() * Eigen::VectorXd::Ones(data.size());
  }

  double profiled_mean(double tau2) const {
    const Eigen::ArrayXd inv = (lambda.array() + tau2).inverse();
    return (y_rot.array() * ones_rot.array() * inv).sum() / (ones_rot.array().square() * inv).sum();
  }

  double log_likelihood(double mean, double tau2) const {
    const Eigen::ArrayXd v = lambda.array() + tau2;
    const Eigen::ArrayXd r = y_rot.array() - mean * ones_rot.array();
    return -0.5 * (v.log().sum() + (r.square() / v).sum() + lambda.size() * kLog2Pi);
  }

  double profile(double tau2) const { return log_likelihood(profiled_mean(tau2), tau2); }

  // d profile / d tau2; the profiled mean drops out by the envelope theorem.
  double score(double tau2) const {
    const Eigen::ArrayXd inv = (lambda.array() + tau2).inverse();
    const Eigen::ArrayXd r = y_rot.array() - profiled_mean(tau2) * ones_rot.array();
    return 0.5 * ((r.square() * inv.square()).sum() - inv.sum());
  }
};

}  // namespace

double log_marginal_likelihood(const EffectEstimates& data, double prior_mean,
                               double prior_variance) {
  if (prior_variance < 0.0) throw DomainError("prior variance must be >= 0");
  return SpectralMarginal(data).log_likelihood(prior_mean, prior_variance);
}

ParametricEBFit conjugate_posterior(const EffectEstimates& data, double prior_mean,
                                    double prior_variance) {
  if (!(prior_variance >= 0.0)) throw DomainError("prior variance must be >= 0");
  const Eigen::Index k = data.size();
  ParametricEBFit fit;
  fit.prior_mean = prior_mean;
  fit.prior_variance = prior_variance;
  fit.log_marginal_likelihood = log_marginal_likelihood(data, prior_mean, prior_variance);
  const Eigen::VectorXd prior = Eigen::VectorXd::Constant(k, prior_mean);
  if (prior_variance == 0.0) {
    fit.posterior_mean = prior;
    fit.posterior_covariance = Eigen::MatrixXd::Zero(k, k);
    return fit;
  }
  // Written against V = Sigma + tau2 I so that a singular Sigma is fine:
  // mean = m + tau2 V^{-1} (Y - m), cov = tau2 (I - tau2 V^{-1}).
  Eigen::MatrixXd v = data.covariance();
  v.diagonal().array() += prior_variance;
  const Eigen::LDLT<Eigen::MatrixXd> solver(v);
  fit.posterior_mean = prior + prior_variance * solver.solve(data.estimates() - prior);
  Eigen::MatrixXd cov = prior_variance * (Eigen::MatrixXd::Identity(k, k) -
                                          prior_variance * solver.solve(Eigen::MatrixXd::Identity(k, k)));
  fit.posterior_covariance = 0.5 * (cov + cov.transpose());
  return fit;
}

ParametricEBFit fit_parametric_eb(const EffectEstimates& data, const ParametricEBOptions& options) {
  if (data.size() < 2) throw DomainError("parametric empirical Bayes needs K >= 2 treatments");
  const SpectralMarginal marginal(data);
  const double spread =
      (data.estimates().array() - data.estimates().mean()).square().mean();
  double upper = std::max({4.0 * spread, 4.0 * marginal.lambda.maxCoeff(), 1e-8});

  // Coarse scan over {0} and a geometric ladder brackets the maximum before
  // golden-section refinement.
  constexpr int kScan = 64;
  std::vector<double> ts{0.0};
  for (int i = 0; i < kScan; ++i) {
    ts.push_back(upper * std::pow(1e-10, 1.0 - static_cast<double>(i) / (kScan - 1)));
  }
  while (marginal.profile(ts.back()) > marginal.profile(ts[ts.size() - 2]) && ts.size() < 200) {
    ts.push_back(ts.back() * 2.0);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < ts.size(); ++i) {
    if (marginal.profile(ts[i]) > marginal.profile(ts[best])) best = i;
  }
  double lo = best == 0 ? 0.0 : ts[best - 1];
  double hi = best + 1 < ts.size() ? ts[best + 1] : ts[best];

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - inv_phi * (hi - lo);
  double b = lo + inv_phi * (hi - lo);
  double fa = marginal.profile(a);
  double fb = marginal.profile(b);
  int iter = 0;
  while (hi - lo > options.tolerance * std::max(1.0, hi)) {
    if (++iter > options.max_iterations) {
      throw ConvergenceError("parametric EB: golden-section search did not converge",
                             0.5 * (lo + hi));
    }
    if (fa >= fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - inv_phi * (hi - lo);
      fa = marginal.profile(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + inv_phi * (hi - lo);
      fb = marginal.profile(b);
    }
  }
  double tau2 = 0.5 * (lo + hi);
  if (marginal.profile(0.0) >= marginal.profile(tau2)) tau2 = 0.0;

  // Comparing profile values cannot resolve the flat top below ~sqrt(eps);
  // finish on the sign change of the score.
  if (tau2 > 0.0) {
    double a = tau2;
    double b = tau2;
    for (int i = 0; i < 60 && marginal.score(a) <= 0.0 && a > 0.0; ++i) a = std::max(0.0, a - std::max(1e-6 * tau2, 2.0 * (tau2 - a)));
    for (int i = 0; i < 60 && marginal.score(b) >= 0.0; ++i) b += std::max(1e-6 * tau2, 2.0 * (b - tau2));
    if (marginal.score(a) > 0.0 && marginal.score(b) < 0.0) {
      const auto root = boost::math::tools::bisect([&](double t) { return marginal.score(t); }, a,
                                                   b, boost::math::tools::eps_tolerance<double>());
      const double polished = 0.5 * (root.first + root.second);
      if (marginal.profile(polished) >= marginal.profile(tau2)) tau2 = polished;
    }
  }

  ParametricEBFit fit = conjugate_posterior(data, marginal.profiled_mean(tau2), tau2);
  fit.log_marginal_likelihood = marginal.profile(tau2);
  fit.iterations = iter;
  return fit;
}

// ---------------------------------------------------------------------------
// NPMLE

Eigen::VectorXd default_npmle_grid(const EffectEstimates& data, int grid_size) {
  if (grid_size < 2) throw DomainError("NPMLE grid needs at least 2 points");
  const double max_se = data.standard_errors().maxCoeff();
  const double lo = data.estimates().minCoeff() - 3.0 * max_se;
  const double hi = data.estimates().maxCoeff() + 3.0 * max_se;
  if (hi == lo) return Eigen::VectorXd::Constant(grid_size, lo);
  return Eigen::VectorXd::LinSpaced(grid_size, lo, hi);
}

namespace {

// Row-scaled likelihoods L(k, g) = exp(log phi_kg - rowmax_k); the scale is
// added back through `row_offset` when forming the log-likelihood.
struct ScaledLikelihood {
  Eigen::MatrixXd values;
  Eigen::VectorXd row_offset;
};

ScaledLikelihood scaled_likelihood(const Eigen::VectorXd& y, const Eigen::VectorXd& se,
                                   const Eigen::VectorXd& grid) {
  const Eigen::Index k = y.size();
  const Eigen::Index g = grid.size();
  ScaledLikelihood out{Eigen::MatrixXd(k, g), Eigen::VectorXd(k)};
  for (Eigen::Index i = 0; i < k; ++i) {
    double row_max = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < g; ++j) {
      const double v = normal_log_pdf((y[i] - grid[j]) / se[i]) - std::log(se[i]);
      out.values(i, j) = v;
      row_max = std::max(row_max, v);
    }
    out.values.row(i) = (out.values.row(i).array() - row_max).exp();
    out.row_offset[i] = row_max;
  }
  return out;
}

}  // namespace

double npmle_log_likelihood(const Eigen::VectorXd& estimates, const Eigen::VectorXd& standard_errors,
                            const Eigen::VectorXd& grid, const Eigen::VectorXd& weights) {
  const ScaledLikelihood lik = scaled_likelihood(estimates, standard_errors, grid);
  return ((lik.values * weights).array().log().matrix() + lik.row_offset).sum();
}

namespace {

// Lawson-Hanson non-negative least squares: argmin_{x >= 0} |A x - b|.
// A column whose coefficient comes out non-positive right after it enters is
// blocked until the solution next moves; this stops cycling on the
// near-collinear columns of a fine grid.
Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  const Eigen::Index n = a.cols();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<char> passive(static_cast<std::size_t>(n), 0);
  std::vector<char> blocked(static_cast<std::size_t>(n), 0);
  const auto at = [](std::vector<char>& v, Eigen::Index j) -> char& { return v[static_cast<std::size_t>(j)]; };
  const double eps = 1e-12 * std::max(1.0, (a.transpose() * b).cwiseAbs().maxCoeff());
  const auto solve_passive = [&]() {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (at(passive, j)) cols.push_back(j);
    }
    Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = a.col(cols[c]);
    const Eigen::VectorXd zs = sub.colPivHouseholderQr().solve(b);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    for (std::size_t c = 0; c < cols.size(); ++c) z[cols[c]] = zs[static_cast<Eigen::Index>(c)];
    return z;
  };
  for (Eigen::Index outer = 0; outer < 2 * n + 10; ++outer) {
    const Eigen::VectorXd grad = a.transpose() * (b - a * x);
    Eigen::Index best = -1;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!at(passive, j) && !at(blocked, j) && grad[j] > eps && (best < 0 || grad[j] > grad[best])) best = j;
    }
    if (best < 0) break;
    at(passive, best) = 1;
    for (Eigen::Index inner = 0; inner < n + 1; ++inner) {
      const Eigen::VectorXd z = solve_passive();
      if (inner == 0 && z[best] <= 0.0) {
        at(passive, best) = 0;
        at(blocked, best) = 1;
        break;
      }
      double step = 1.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (at(passive, j) && z[j] <= 0.0) step = std::min(step, x[j] / (x[j] - z[j]));
      }
      if (step >= 1.0) {
        x = z;
        break;
      }
      x += step * (z - x);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (at(passive, j) && x[j] <= 1e-15) {
          at(passive, j) = 0;
          x[j] = 0.0;
        }
      }
    }
    // x moved, so earlier rejections may no longer hold.
    if (at(passive, best)) std::fill(blocked.begin(), blocked.end(), 0);
  }
  return x;
}


// Least squares |S_P q - 2| over the columns P with sum(q) = 1 imposed
// exactly by eliminating the last coefficient.
Eigen::VectorXd simplex_least_squares(const Eigen::MatrixXd& scaled,
                                      const std::vector<Eigen::Index>& cols) {
  const Eigen::Index k = scaled.rows();
  const Eigen::Index m = static_cast<Eigen::Index>(cols.size());
  Eigen::VectorXd out(m);
  if (m == 1) {
    out[0] = 1.0;
    return out;
  }
  const Eigen::VectorXd last = scaled.col(cols.back());
  Eigen::MatrixXd reduced(k, m - 1);
  for (Eigen::Index c = 0; c + 1 < m; ++c) {
    reduced.col(c) = scaled.col(cols[static_cast<std::size_t>(c)]) - last;
  }
  const Eigen::VectorXd q = reduced.colPivHouseholderQr().solve(Eigen::VectorXd::Constant(k, 2.0) - last);
  out.head(m - 1) = q;
  out[m - 1] = 1.0 - q.sum();
  return out;
}

// Newton target from dense weights: NNLS with the simplex constraint as a
// heavy penalty row. Only used to find a sparse support; the penalty limits
// its precision.
Eigen::VectorXd sparse_newton_target(const Eigen::MatrixXd& scaled, const Eigen::VectorXd& w,
                                     const Eigen::VectorXd& ratio) {
  const Eigen::Index k = scaled.rows();
  const Eigen::Index g = scaled.cols();
  const double w_max = w.maxCoeff();
  std::vector<Eigen::Index> cols;
  for (Eigen::Index j = 0; j < g; ++j) {
    if (w[j] > 1e-10 * w_max || ratio[j] > 1.0) cols.push_back(j);
  }
  const double rho = 1e3 * std::sqrt(static_cast<double>(k));
  Eigen::MatrixXd design(k + 1, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) design.col(static_cast<Eigen::Index>(c)) << scaled.col(cols[c]), rho;
  Eigen::VectorXd rhs = Eigen::VectorXd::Constant(k + 1, 2.0);
  rhs[k] = rho;
  const Eigen::VectorXd coef = nnls(design, rhs);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(g);
  if (!(coef.sum() > 0.0)) return w;
  for (std::size_t c = 0; c < cols.size(); ++c) out[cols[c]] = coef[static_cast<Eigen::Index>(c)];
  return out / out.sum();
}

// Support reduction step: add the grid point with the largest D_g, solve the
// simplex-constrained model on the support exactly, and whenever a weight
// would turn negative move to the boundary and drop that point.
Eigen::VectorXd support_reduction_target(const Eigen::MatrixXd& scaled, const Eigen::VectorXd& w,
                                         const Eigen::VectorXd& ratio) {
  const Eigen::Index g = scaled.cols();
  std::vector<Eigen::Index> support;
  for (Eigen::Index j = 0; j < g; ++j) {
    if (w[j] > 0.0) support.push_back(j);
  }
  Eigen::Index best = 0;
  ratio.maxCoeff(&best);
  if (ratio[best] > 1.0 && w[best] == 0.0) support.push_back(best);
  Eigen::VectorXd u = w;
  const std::size_t max_drops = support.size();
  for (std::size_t drop = 0; drop <= max_drops; ++drop) {
    const Eigen::VectorXd v = simplex_least_squares(scaled, support);
    if ((v.array() > 0.0).all()) {
      Eigen::VectorXd out = Eigen::VectorXd::Zero(g);
      for (std::size_t c = 0; c < support.size(); ++c) out[support[c]] = v[static_cast<Eigen::Index>(c)];
      return out;
    }
    double t = 1.0;
    std::size_t leaving = 0;
    for (std::size_t c = 0; c < support.size(); ++c) {
      const double vc = v[static_cast<Eigen::Index>(c)];
      const double uc = u[support[c]];
      if (vc <= 0.0 && uc / (uc - vc) < t) {
        t = uc / (uc - vc);
        leaving = c;
      }
    }
    for (std::size_t c = 0; c < support.size(); ++c) {
      u[support[c]] += t * (v[static_cast<Eigen::Index>(c)] - u[support[c]]);
    }
    u[support[leaving]] = 0.0;
    support.erase(support.begin() + static_cast<std::ptrdiff_t>(leaving));
  }
  return u / u.sum();
}

}  // namespace

NonparametricEBFit fit_nonparametric_eb(const EffectEstimates& data,
                                        const NonparametricEBOptions& options) {
  if (!data.is_diagonal()) {
    throw DomainError(
        "nonparametric empirical Bayes assumes independent estimates (diagonal covariance); "
        "use the parametric fit for correlated errors");
  }
  const Eigen::VectorXd se = data.standard_errors();
  if ((se.array() <= 0.0).any()) {
    throw DomainError("nonparametric empirical Bayes needs strictly positive standard errors");
  }
  NonparametricEBFit fit;
  if (data.size() < 10) {
    fit.warnings.push_back("nonparametric empirical Bayes with only " +
                           std::to_string(data.size()) +
                           " treatments; K >= 10 is recommended");
  }
  fit.grid = options.grid ? *options.grid : default_npmle_grid(data, options.grid_size);
  const Eigen::Index g = fit.grid.size();
  const Eigen::Index k = data.size();
  const ScaledLikelihood lik = scaled_likelihood(data.estimates(), se, fit.grid);
  const double offset = lik.row_offset.sum();

  const double kd = static_cast<double>(k);
  const auto log_lik = [&](const Eigen::VectorXd& f) { return f.array().log().sum() + offset; };
  // One EM map w -> w * (L^T (1 / Lw)) / K.
  const auto em_step = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    const Eigen::VectorXd f = lik.values * v;
    Eigen::VectorXd next = v.cwiseProduct(lik.values.transpose() * f.cwiseInverse()) / kd;
    return next / next.sum();
  };

  // EM accelerated by SQUAREM extrapolation. An extrapolated point is kept
  // only when it beats the plain double EM step, so the log-likelihood is
  // monotone. Stopping uses the concavity bound
  //   max_w l(w) - l(w_t) <= K (max_g D_g - 1),  D_g = mean_k L(k, g) / (L w_t)_k,
  // which certifies the gap to the grid optimum instead of trusting a small step.
  Eigen::VectorXd w = Eigen::VectorXd::Constant(g, 1.0 / static_cast<double>(g));
  Eigen::VectorXd marginal = lik.values * w;
  double ll = log_lik(marginal);
  fit.log_likelihood_trace.push_back(ll);
  int iter = 0;
  double gap = std::numeric_limits<double>::infinity();
  const auto tolerance_at = [&](double value) { return options.tolerance * std::max(1.0, std::abs(value)); };
  while (true) {
    const Eigen::VectorXd ratio = lik.values.transpose() * marginal.cwiseInverse() / kd;
    gap = std::max(0.0, kd * (ratio.maxCoeff() - 1.0));
    if (gap <= tolerance_at(ll) || iter >= options.max_iterations) break;
    ++iter;
    Eigen::VectorXd w1 = w.cwiseProduct(ratio);
    w1 /= w1.sum();
    Eigen::VectorXd w2 = em_step(w1);
    Eigen::VectorXd f2 = lik.values * w2;
    double ll2 = log_lik(f2);
    const Eigen::VectorXd r = w1 - w;
    const Eigen::VectorXd v = w2 - w1 - r;
    const double v_norm = v.norm();
    if (v_norm > 0.0) {
      const double alpha = std::min(-1.0, -r.norm() / v_norm);
      // Floor at 1% of the current weight so no support point is zeroed for good.
      Eigen::VectorXd x = (w - 2.0 * alpha * r + alpha * alpha * v).cwiseMax(0.01 * w);
      x = em_step(x / x.sum());
      const Eigen::VectorXd fx = lik.values * x;
      const double llx = log_lik(fx);
      if (std::isfinite(llx) && llx >= ll2) {
        w2 = x;
        f2 = fx;
        ll2 = llx;
      }
    }
    const double change = ll2 - ll;
    w = std::move(w2);
    marginal = std::move(f2);
    ll = ll2;
    fit.log_likelihood_trace.push_back(ll);
    if (change <= kEmHandoff * std::max(1.0, std::abs(ll))) break;
  }

  // EM slows to a crawl when neighbouring grid points trade mass. Finish with
  // constrained Newton steps on the quadratic model of l over the simplex,
  //   minimize |S p - 2|^2,  S = diag(1 / Lw) L,  p >= 0,  sum(p) = 1,
  // followed by an Armijo line search so the log-likelihood stays monotone.
  for (int round = 0; round < kPolishRounds; ++round) {
    const Eigen::VectorXd ratio = lik.values.transpose() * marginal.cwiseInverse() / kd;
    gap = std::max(0.0, kd * (ratio.maxCoeff() - 1.0));
    if (gap <= tolerance_at(ll)) break;
    const Eigen::MatrixXd scaled = marginal.cwiseInverse().asDiagonal() * lik.values;
    // EM leaves every grid point with some mass; the first step sparsifies.
    const bool dense = round == 0 || (w.array() > 0.0).count() > k + 1;
    const Eigen::VectorXd proposal =
        dense ? sparse_newton_target(scaled, w, ratio) : support_reduction_target(scaled, w, ratio);
    const Eigen::VectorXd direction = proposal - w;
    const double slope = kd * ratio.dot(direction);
    // No ascent direction left: stationary to working precision.
    if (!(slope > 0.0)) break;
    bool moved = false;
    for (double step = 1.0; step > 1e-12; step *= 0.5) {
      const Eigen::VectorXd trial = (w + step * direction).cwiseMax(0.0);
      const Eigen::VectorXd ft = lik.values * trial;
      const double llt = log_lik(ft);
      if (std::isfinite(llt) && llt >= ll + 1e-4 * step * slope) {
        w = trial;
        marginal = ft;
        ll = llt;
        moved = true;
        break;
      }
    }
    if (!moved) break;
    ++iter;
    fit.log_likelihood_trace.push_back(ll);
  }
  {
    const Eigen::VectorXd ratio = lik.values.transpose() * marginal.cwiseInverse() / kd;
    gap = std::max(0.0, kd * (ratio.maxCoeff() - 1.0));
  }
  fit.optimality_gap = gap;
  fit.iterations = iter;
  // Near-collinear neighbouring grid columns put a floor of roughly 1e-8 on
  // D_g - 1, so a stationary fit may certify only slightly above tolerance.
  if (gap > kGapWarning * std::max(1.0, std::abs(ll))) {
    fit.warnings.push_back("NPMLE stopped with certified optimality gap " + std::to_string(gap));
  }
  fit.prior_weights = w;
  fit.log_likelihood = ll;
  fit.posterior_weights = lik.values * w.asDiagonal();
  fit.posterior_weights.array().colwise() /= marginal.array();
  return fit;
}

// ---------------------------------------------------------------------------
// Sampler

PosteriorSampler PosteriorSampler::parametric(const ParametricEBFit& fit, std::uint64_t seed) {
  PosteriorSampler s;
  s.kind_ = Kind::parametric;
  s.seed_ = seed;
  s.mean_ = fit.posterior_mean;
  s.marginal_variance_ = fit.posterior_covariance.diagonal().cwiseMax(0.0);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fit.posterior_covariance);
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  s.factor_ = eig.eigenvectors() * root.asDiagonal();
  s.degenerate_ = (root.array() == 0.0).all();
  return s;
}

PosteriorSampler PosteriorSampler::nonparametric(const NonparametricEBFit& fit, std::uint64_t seed) {
  PosteriorSampler s;
  s.kind_ = Kind::nonparametric;
  s.seed_ = seed;
  s.grid_ = fit.grid;
  s.posterior_weights_ = fit.posterior_weights;
  s.mean_ = fit.posterior_mean();
  s.cumulative_ = fit.posterior_weights;
  for (Eigen::Index j = 1; j < s.cumulative_.cols(); ++j) {
    s.cumulative_.col(j) += s.cumulative_.col(j - 1);
  }
  return s;
}

PosteriorSampler PosteriorSampler::point_mass(const Eigen::VectorXd& mu, std::uint64_t seed) {
  ParametricEBFit fit;
  fit.posterior_mean = mu;
  fit.posterior_covariance = Eigen::MatrixXd::Zero(mu.size(), mu.size());
  return parametric(fit, seed);
}

PosteriorSampler PosteriorSampler::with_replication_link(const Eigen::VectorXi& n,
                                                         const Eigen::VectorXd& alpha) const {
  if (n.size() != dimension() || alpha.size() != dimension()) {
    throw DomainError("replication link dimensions do not match the posterior");
  }
  PosteriorSampler s = *this;
  Link link{n.cast<double>().cwiseSqrt(), Eigen::VectorXd(alpha.size())};
  for (Eigen::Index i = 0; i < alpha.size(); ++i) link.critical[i] = critical_value(alpha[i]);
  s.link_ = std::move(link);
  return s;
}

void PosteriorSampler::apply_link(Eigen::Ref<Eigen::VectorXd> values) const {
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    values[i] = normal_cdf(link_->sqrt_n[i] * values[i] - link_->critical[i]);
  }
}

void PosteriorSampler::draw(Rng& rng, Eigen::Ref<Eigen::VectorXd> out) const {
  const Eigen::Index k = dimension();
  if (kind_ == Kind::parametric) {
    if (degenerate_) {
      out = mean_;
    } else {
      Eigen::VectorXd z(k);
      for (Eigen::Index i = 0; i < k; ++i) z[i] = rng.normal();
      out = mean_ + factor_ * z;
    }
  } else {
    for (Eigen::Index i = 0; i < k; ++i) {
      const double u = rng.uniform();
      const auto row = cumulative_.row(i);
      Eigen::Index lo = 0;
      Eigen::Index hi = row.size() - 1;
      while (lo < hi) {
        const Eigen::Index mid = (lo + hi) / 2;
        if (row[mid] > u) {
          hi = mid;
        } else {
          lo = mid + 1;
        }
      }
      out[i] = grid_[lo];
    }
  }
  if (link_) apply_link(out);
}

Eigen::MatrixXd PosteriorSampler::sample(Eigen::Index count) const {
  Eigen::MatrixXd out(count, dimension());
  Eigen::VectorXd row(dimension());
  for (Eigen::Index s = 0; s < count; ++s) {
    Rng rng = Rng::substream(seed_, static_cast<std::uint64_t>(s));
    draw(rng, row);
    out.row(s) = row.transpose();
  }
  return out;
}

Eigen::VectorXd PosteriorSampler::posterior_mean() const {
  if (!link_) return mean_;
  const Eigen::Index k = dimension();
  Eigen::VectorXd out(k);
  if (kind_ == Kind::parametric) {
    // E[Phi(a + b Z)] = Phi(a / sqrt(1 + b^2))
    for (Eigen::Index i = 0; i < k; ++i) {
      const double a = link_->sqrt_n[i] * mean_[i] - link_->critical[i];
      const double b2 = link_->sqrt_n[i] * link_->sqrt_n[i] * marginal_variance_[i];
      out[i] = normal_cdf(a / std::sqrt(1.0 + b2));
    }
  } else {
    for (Eigen::Index i = 0; i < k; ++i) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < grid_.size(); ++j) {
        acc += posterior_weights_(i, j) *
               normal_cdf(link_->sqrt_n[i] * grid_[j] - link_->critical[i]);
      }
      out[i] = acc;
    }
  }
  return out;
}

Eigen::VectorXd oracle_predictions(const PosteriorSampler& sampler, LossKind kind) {
  if (kind == LossKind::brier) {
    const Eigen::VectorXd mean = sampler.posterior_mean();
    if ((mean.array() < 0.0).any() || (mean.array() > 1.0).any()) {
      throw DomainError("brier oracle needs a posterior over probabilities");
    }
    return mean;
  }
  return sampler.posterior_mean();
}

}  // namespace feval
