#pragma once

#include "dtdcva/mathkit.hpp"
#include "dtdcva/rng.hpp"

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace dtdcva {

/// Factor loadings a_k of every name onto the s market indices.
/// Name 0 is the counterparty, name 1 the investor, names 2.. the
/// reference names.
struct FactorLoadings {
    std::vector<std::vector<double>> a;

    std::size_t n_names() const { return a.size(); }
};

/// Joint correlation structure: index correlation Sigma_M, the assembled
/// (s+2)x(s+2) block matrix over (counterparty, investor, indices), its
/// Cholesky factor, and the idiosyncratic weights sqrt(1 - a_k^T a_k).
struct CorrelationStructure {
    std::size_t n_indices = 0;
    std::size_t n_names = 0;
    std::vector<double> sigma_m; // s x s row-major
    FactorLoadings loadings;
    std::vector<double> sigma; // (s+2) x (s+2) row-major
    LowerTriangular chol{1};
    std::vector<double> idio_weight;    // per name
    std::vector<std::string> warnings;  // non-fatal input diagnostics

    double l21() const { return chol(1, 0); }
};

/// One unconditional copula draw.
struct JointDraw {
    double y1 = 0.0;
    double y2 = 0.0;
    std::vector<double> m;      // market indices
    std::vector<double> eps;    // idiosyncratic components, names 2..n-1
    std::vector<double> y_refs; // reference-name variables, names 2..n-1
};

/// Assembles and validates the block correlation matrix and its Cholesky
/// factor. Requires sigma_m symmetric PD with unit diagonal and, for every
/// name k, a_k^T Sigma_M a_k <= 1 (strict for the two parties) and
/// a_k^T a_k <= 1. A correlated Sigma_M makes Var(y_k) != 1 for reference
/// names; that discrepancy is reported as a warning, not an error.
CorrelationStructure build_structure(const std::vector<double>& sigma_m, std::size_t s,
                                     const FactorLoadings& loadings);

/// Deterministic assembly from the independent normals K (size s+2) and the
/// idiosyncratic draws eps (size n-2):
///   y1 = K1, y2 = L21 K1 + L22 K2, M_k = sum_j L_{k+2,j} K_j,
///   y_ref_k = a_k^T M + sqrt(1 - a_k^T a_k) eps_k.
JointDraw assemble_draw(const CorrelationStructure& st, const std::vector<double>& k,
                        const std::vector<double>& eps);

JointDraw sample_unconditional(const CorrelationStructure& st, RandomStream& rng);

/// Unilateral case I (counterparty defaults in the bucket, investor
/// survives) from explicit uniforms:
///   eps1 = -N^{-1}(u1 (1 - p_S1)),  eps2 = N^{-1}(u2 N(z)),
///   z = (N^{-1}(p_S2) - eps1 L21) / sqrt(1 - L21^2),
/// with the deep-tail kernel substituted when q1 >= 8, q2 >= 8, or z <= -8.
std::pair<double, double> case_one_from_uniforms(double l21, double p_s1, double p_s2,
                                                 double q1, double q2, double u1, double u2);

/// Unilateral case II (investor defaults, counterparty survives), mirrored:
///   eps1 = N^{-1}(u1 p_S1),  eps2 = -N^{-1}(u2 N(-z)),
/// kernel substituted when q2 >= 8 or z >= 8.
std::pair<double, double> case_two_from_uniforms(double l21, double p_s1, double p_s2,
                                                 double q1, double q2, double u1, double u2);

/// Exact draw from the bivariate normal conditioned on
/// {counterparty defaults, investor survives}: the closed-form scheme above
/// proposes, and an acceptance step with the investor's conditional survival
/// weight corrects the eps1 marginal (no-op for L21 = 0). Region invariants
/// hold for every returned draw.
std::pair<double, double> sample_case_I(const CorrelationStructure& st, double p_s1,
                                        double p_s2, double q1, double q2, RandomStream& rng);

/// Mirrored: exact draw conditioned on {investor defaults, counterparty
/// survives}.
std::pair<double, double> sample_case_II(const CorrelationStructure& st, double p_s1,
                                         double p_s2, double q1, double q2, RandomStream& rng);

} // namespace dtdcva
