#pragma once

#include <cstddef>
#include <vector>

namespace dtdcva {

/// Standard normal density.
double norm_pdf(double x);

/// Standard normal CDF, absolute error below 1e-15. Saturates at the
/// subnormal floor on the left tail and at 1.0 on the right.
double norm_cdf(double x);

/// Inverse standard normal CDF on (0,1). Rational minimax seed refined by
/// one Halley step; |norm_cdf(norm_inv(p)) - p| <= 1e-12.
/// Throws std::domain_error for p <= 0 or p >= 1.
double norm_inv(double p);

/// Probabilities are pinned to [1e-16, 1 - 1e-16] before any inverse-normal
/// transform so deep-tail market inputs cannot produce infinities.
double clamp_probability(double p);

/// Deep-tail inverse-normal asymptotic sqrt(a - (1 - 1/a) ln a) with
/// a = q^2 - 2 ln(2u/q). Approximates -norm_inv(2 u Phi(-q)) for q >= 8;
/// relative error stays below 1e-3 (measured: < 3e-5) on q in [8, 30].
/// Throws std::domain_error for q < 8, u outside (0, 1], or a non-positive
/// log argument.
double tail_inv_asymptotic(double q, double u);

/// Bivariate standard normal CDF P(X <= a, Y <= b) with correlation rho,
/// absolute error below 1e-7. Throws std::domain_error for |rho| > 1.
double bivar_norm_cdf(double a, double b, double rho);

/// Row-major lower-triangular matrix. Strictly upper entries are zero and
/// the diagonal is strictly positive.
class LowerTriangular {
  public:
    explicit LowerTriangular(std::size_t n) : n_(n), entries_(n * n, 0.0) {}

    std::size_t dim() const { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return entries_[i * n_ + j]; }
    double& at(std::size_t i, std::size_t j) { return entries_[i * n_ + j]; }

    /// L * L^T, row-major.
    std::vector<double> multiply_transpose() const;

  private:
    std::size_t n_;
    std::vector<double> entries_;
};

/// Cholesky factorization of a symmetric positive-definite matrix given in
/// row-major order. Throws NotPositiveDefiniteError with the failing pivot
/// index, and std::invalid_argument on an asymmetric input.
LowerTriangular cholesky(const std::vector<double>& sigma, std::size_t n);

} // namespace dtdcva
