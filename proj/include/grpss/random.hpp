#pragma once

// Seeded RNG streams and the variate transforms the samplers need.
//
// Raw bits come from std::mt19937_64, whose output sequence is pinned by the
// standard, so a (seed, stream) pair reproduces draws exactly. Transforms are
// written out here rather than taken from std::<distribution> types, whose
// sequences are implementation defined.

#include <cmath>
#include <cstdint>
#include <random>

#include "grpss/errors.hpp"
#include "grpss/special.hpp"

namespace grpss {

inline std::uint64_t splitmix64(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0) {
    // splitmix64 decorrelates nearby (seed, stream) pairs before the MT seed
    std::uint64_t s = seed ^ (0xd1342543de82ef95ULL * (stream + 1));
    gen_.seed(splitmix64(s));
  }

  std::uint64_t next_raw() { return gen_(); }

  // uniform on (0,1); 53-bit mantissa, never returns 0 or 1
  double uniform() {
    double u = (gen_() >> 11) * 0x1.0p-53;
    while (u <= 0.0) u = (gen_() >> 11) * 0x1.0p-53;
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller, spare value cached
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mu, double sd) { return mu + sd * normal(); }

  double exponential(double rate) {
    if (!(rate > 0.0)) throw InvalidParameter("exponential: rate must be > 0");
    return -std::log(uniform()) / rate;
  }

  // Gamma(shape, rate), Marsaglia-Tsang squeeze; shape < 1 boosted via U^{1/shape}
  double gamma(double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0))
      throw InvalidParameter("gamma: shape and rate must be > 0");
    if (shape < 1.0) {
      double u = uniform();
      return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      double u = uniform();
      double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v / rate;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
  }

  // InverseGamma(shape, scale): 1/X ~ Gamma(shape, rate=scale)
  double inv_gamma(double shape, double scale) { return 1.0 / gamma(shape, scale); }

  double chi_sq(double df) { return gamma(0.5 * df, 0.5); }

  double beta(double a, double b) {
    double g1 = gamma(a, 1.0);
    double g2 = gamma(b, 1.0);
    return g1 / (g1 + g2);
  }

  // InverseGaussian(mu, lambda) by Michael, Schucany and Haas. The small root
  // is computed in product form, stable when mu*y/lambda is huge.
  double inv_gaussian(double mu, double lambda) {
    if (!(mu > 0.0) || !(lambda > 0.0))
      throw InvalidParameter("inv_gaussian: mu and lambda must be > 0");
    double nu = normal();
    double y = nu * nu;
    double w = mu * y / lambda;
    double x_small = mu / (1.0 + 0.5 * w + 0.5 * std::sqrt(w * (w + 4.0)));
    if (uniform() <= mu / (mu + x_small)) return x_small;
    return mu * mu / x_small;
  }

  // N(mu, sd^2) truncated to (0, inf). Resampling while the cut is within
  // 4 sd of the mean, Robert's translated-exponential rejection beyond.
  double trunc_normal_pos(double mu, double sd) {
    if (!(sd > 0.0)) throw InvalidParameter("trunc_normal_pos: sd must be > 0");
    double alpha = -mu / sd;  // standardized lower bound
    if (alpha <= 4.0) {
      for (;;) {
        double z = normal(mu, sd);
        if (z > 0.0) return z;
      }
    }
    double lam = 0.5 * (alpha + std::sqrt(alpha * alpha + 4.0));
    for (;;) {
      double z = alpha - std::log(uniform()) / lam;
      double diff = z - lam;
      if (uniform() <= std::exp(-0.5 * diff * diff)) return mu + sd * z;
    }
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace grpss

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace grpss {

inline Eigen::VectorXd draw_mvnormal(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                     RngStream& rng) {
  if (cov.rows() != cov.cols() || cov.rows() != mean.size())
    throw DimensionMismatch("draw_mvnormal: mean/cov shapes disagree");
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("draw_mvnormal: covariance is not positive definite");
  Eigen::VectorXd z(mean.size());
  for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean + llt.matrixL() * z;
}

}  // namespace grpss
