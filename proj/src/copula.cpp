#include "dtdcva/copula.hpp"

#include "dtdcva/dtd_core.hpp"
#include "dtdcva/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dtdcva {

CorrelationStructure build_structure(const std::vector<double>& sigma_m, std::size_t s,
                                     const FactorLoadings& loadings) {
    if (s == 0 || sigma_m.size() != s * s) {
        throw ValidationError("build_structure: index correlation matrix size mismatch");
    }
    if (loadings.n_names() < 2) {
        throw ValidationError("build_structure: need at least counterparty and investor loadings");
    }
    for (std::size_t i = 0; i < s; ++i) {
        if (std::fabs(sigma_m[i * s + i] - 1.0) > 1e-12) {
            throw ValidationError("build_structure: Sigma_M diagonal must be 1");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (std::fabs(sigma_m[i * s + j] - sigma_m[j * s + i]) > 1e-12) {
                throw ValidationError("build_structure: Sigma_M must be symmetric");
            }
        }
    }

    CorrelationStructure st;
    st.n_indices = s;
    st.n_names = loadings.n_names();
    st.sigma_m = sigma_m;
    st.loadings = loadings;
    st.idio_weight.resize(st.n_names);

    auto sigma_m_dot = [&](const std::vector<double>& x, const std::vector<double>& y) {
        double acc = 0.0;
        for (std::size_t i = 0; i < s; ++i) {
            for (std::size_t j = 0; j < s; ++j) {
                acc += x[i] * sigma_m[i * s + j] * y[j];
            }
        }
        return acc;
    };

    for (std::size_t k = 0; k < st.n_names; ++k) {
        const auto& ak = loadings.a[k];
        if (ak.size() != s) {
            std::ostringstream msg;
            msg << "build_structure: name " << k << " has " << ak.size()
                << " loadings, expected " << s;
            throw ValidationError(msg.str());
        }
        const double var_m = sigma_m_dot(ak, ak);
        double norm_sq = 0.0;
        for (double v : ak) {
            norm_sq += v * v;
        }
        const bool party = k < 2;
        if (var_m > 1.0 + 1e-12 || (party && var_m >= 1.0)) {
            std::ostringstream msg;
            msg << "build_structure: name " << k << " violates a^T Sigma_M a "
                << (party ? "< 1" : "<= 1") << " (got " << var_m << ")";
            throw ValidationError(msg.str());
        }
        if (norm_sq > 1.0 + 1e-12) {
            std::ostringstream msg;
            msg << "build_structure: name " << k << " violates a^T a <= 1 (got " << norm_sq
                << ")";
            throw ValidationError(msg.str());
        }
        st.idio_weight[k] = std::sqrt(std::max(0.0, 1.0 - norm_sq));
        if (!party && std::fabs(var_m - norm_sq) > 1e-12) {
            std::ostringstream msg;
            msg << "reference name " << k << ": correlated indices make Var(y) = "
                << 1.0 + var_m - norm_sq << " instead of 1 under the sqrt(1 - a^T a) weight";
            st.warnings.push_back(msg.str());
        }
    }

    const std::size_t dim = s + 2;
    st.sigma.assign(dim * dim, 0.0);
    const auto& a1 = loadings.a[0];
    const auto& a2 = loadings.a[1];
    st.sigma[0 * dim + 0] = 1.0;
    st.sigma[1 * dim + 1] = 1.0;
    const double cross = sigma_m_dot(a1, a2);
    st.sigma[0 * dim + 1] = cross;
    st.sigma[1 * dim + 0] = cross;
    for (std::size_t j = 0; j < s; ++j) {
        double b1 = 0.0;
        double b2 = 0.0;
        for (std::size_t i = 0; i < s; ++i) {
            b1 += a1[i] * sigma_m[i * s + j];
            b2 += a2[i] * sigma_m[i * s + j];
        }
        st.sigma[0 * dim + (2 + j)] = b1;
        st.sigma[(2 + j) * dim + 0] = b1;
        st.sigma[1 * dim + (2 + j)] = b2;
        st.sigma[(2 + j) * dim + 1] = b2;
        for (std::size_t i = 0; i < s; ++i) {
            st.sigma[(2 + i) * dim + (2 + j)] = sigma_m[i * s + j];
        }
    }

    st.chol = cholesky(st.sigma, dim);
    return st;
}

JointDraw assemble_draw(const CorrelationStructure& st, const std::vector<double>& k,
                        const std::vector<double>& eps) {
    const std::size_t s = st.n_indices;
    if (k.size() != s + 2) {
        throw std::invalid_argument("assemble_draw: K must have s+2 entries");
    }
    if (eps.size() + 2 != st.n_names) {
        throw std::invalid_argument("assemble_draw: eps must have n-2 entries");
    }
    JointDraw draw;
    draw.y1 = k[0];
    draw.y2 = st.chol(1, 0) * k[0] + st.chol(1, 1) * k[1];
    draw.m.resize(s);
    for (std::size_t i = 0; i < s; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j <= i + 2; ++j) {
            acc += st.chol(i + 2, j) * k[j];
        }
        draw.m[i] = acc;
    }
    draw.eps = eps;
    draw.y_refs.resize(st.n_names - 2);
    for (std::size_t r = 0; r + 2 < st.n_names; ++r) {
        const auto& ar = st.loadings.a[r + 2];
        double acc = 0.0;
        for (std::size_t i = 0; i < s; ++i) {
            acc += ar[i] * draw.m[i];
        }
        draw.y_refs[r] = acc + st.idio_weight[r + 2] * eps[r];
    }
    return draw;
}

JointDraw sample_unconditional(const CorrelationStructure& st, RandomStream& rng) {
    std::vector<double> k(st.n_indices + 2);
    for (double& v : k) {
        v = rng.next_normal();
    }
    std::vector<double> eps(st.n_names - 2);
    for (double& v : eps) {
        v = rng.next_normal();
    }
    return assemble_draw(st, k, eps);
}

namespace {

void check_case_inputs(double l21, double p_s1, double p_s2, double u1, double u2) {
    if (!(std::fabs(l21) < 1.0)) {
        throw std::domain_error("conditional sampler: |L21| must be < 1");
    }
    if (!(p_s1 > 0.0) || !(p_s1 < 1.0) || !(p_s2 > 0.0) || !(p_s2 < 1.0)) {
        throw std::domain_error("conditional sampler: survival probabilities outside (0,1)");
    }
    if (!(u1 > 0.0) || !(u1 < 1.0) || !(u2 > 0.0) || !(u2 < 1.0)) {
        throw std::domain_error("conditional sampler: uniforms outside (0,1)");
    }
}

// The deep-tail kernel approximates eps2 to ~1e-6 relative, which can put it
// a hair on the wrong side of the region boundary z. Pin it a few ulps
// inside so the reconstructed y2 respects the region at double precision.
double boundary_margin(double z) {
    return 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(z));
}

// eps2 given eps1, per the closed-form conditional scheme with the deep-tail
// substitution and the region pin.
double eps2_given_eps1(bool case_one, double l21, double nq2, double eps1, double u2) {
    const double z = (nq2 - eps1 * l21) / std::sqrt(1.0 - l21 * l21);
    double eps2;
    if (case_one) {
        // deep-tail branch of the truncated draw
        if (z <= -8.0) {
            eps2 = -tail_inv_asymptotic(-z, u2 / 2.0);
        } else {
            eps2 = norm_inv(clamp_probability(u2 * norm_cdf(z)));
        }
        return std::min(eps2, z - boundary_margin(z));
    }
    // deep-tail branch of the truncated draw
    if (z >= 8.0) {
        eps2 = tail_inv_asymptotic(z, u2 / 2.0);
    } else {
        eps2 = -norm_inv(clamp_probability(u2 * norm_cdf(-z)));
    }
    return std::max(eps2, z + boundary_margin(z));
}

} // namespace

std::pair<double, double> case_one_from_uniforms(double l21, double p_s1, double p_s2,
                                                 double q1, double q2, double u1, double u2) {
    check_case_inputs(l21, p_s1, p_s2, u1, u2);

    // deep-tail substitution for the defaulted party's draw
    double eps1;
    if (q1 >= 8.0) {
        eps1 = tail_inv_asymptotic(q1, u1);
    } else {
        eps1 = -norm_inv(clamp_probability(u1 * (2.0 * norm_cdf(-q1))));
    }

    // survival quantile and conditional step carry their own tail handling
    const double nq2 = survival_quantile(q2);
    return {eps1, eps2_given_eps1(true, l21, nq2, eps1, u2)};
}

std::pair<double, double> case_two_from_uniforms(double l21, double p_s1, double p_s2,
                                                 double q1, double q2, double u1, double u2) {
    check_case_inputs(l21, p_s1, p_s2, u1, u2);
    (void)q1; // case II's eps1 needs no deep-tail substitution

    const double eps1 = norm_inv(clamp_probability(u1 * p_s1));

    // survival quantile and conditional step carry their own tail handling
    const double nq2 = survival_quantile(q2);
    return {eps1, eps2_given_eps1(false, l21, nq2, eps1, u2)};
}

namespace {

// The closed-form scheme draws eps1 from the plain truncated normal, but
// under the joint law conditioned on {default_1, survive_2} the eps1 density
// carries the partner's conditional survival (case I) or default (case II)
// probability given eps1. Drawing eps1 by numeric inversion of the exact
// region CDF (a bivariate-normal identity) restores the joint law; the
// conditional eps2 step is the closed form already. Cells whose region
// probability is below the floor contribute nothing measurable and keep the
// closed-form path, whose deep-tail substitutions still apply.
constexpr double kRegionFloor = 1e-12;

std::pair<double, double> sample_case(const CorrelationStructure& st, bool case_one,
                                      double p_s1, double p_s2, double q1, double q2,
                                      RandomStream& rng) {
    const double l21 = st.l21();
    if (l21 == 0.0) {
        // weight is constant: the closed form is already exact
        const double u1 = rng.next_uniform();
        const double u2 = rng.next_uniform();
        return case_one ? case_one_from_uniforms(l21, p_s1, p_s2, q1, q2, u1, u2)
                        : case_two_from_uniforms(l21, p_s1, p_s2, q1, q2, u1, u2);
    }
    const double nq1 = survival_quantile(q1);
    const double nq2 = survival_quantile(q2);
    const double w = std::sqrt(1.0 - l21 * l21);

    // region probability and the eps1 region CDF numerator
    const double base = bivar_norm_cdf(nq1, nq2, l21);
    const double region = case_one ? norm_cdf(nq2) - base       // y1 >= nq1, y2 <= nq2
                                   : norm_cdf(nq1) - base;      // y1 <= nq1, y2 >= nq2
    if (!(region > kRegionFloor)) {
        const double u1 = rng.next_uniform();
        const double u2 = rng.next_uniform();
        return case_one ? case_one_from_uniforms(l21, p_s1, p_s2, q1, q2, u1, u2)
                        : case_two_from_uniforms(l21, p_s1, p_s2, q1, q2, u1, u2);
    }

    const double u1 = rng.next_uniform();
    const double u2 = rng.next_uniform();
    const double target = u1 * region;

    auto cdf_num = [&](double y) {
        // P(Y1 <= y, region side of Y2) minus the region's lower edge
        return case_one ? bivar_norm_cdf(y, nq2, l21) - base
                        : norm_cdf(y) - bivar_norm_cdf(y, nq2, l21);
    };
    auto density = [&](double y) {
        const double z = (nq2 - y * l21) / w;
        return norm_pdf(y) * (case_one ? norm_cdf(z) : norm_cdf(-z));
    };

    double lo = case_one ? nq1 : std::min(nq1, 0.0) - 40.0;
    double hi = case_one ? std::max(nq1, 0.0) + 40.0 : nq1;
    double y = case_one ? std::max(nq1, norm_inv(clamp_probability(u1)))
                        : std::min(nq1, norm_inv(clamp_probability(u1)));
    double resid = cdf_num(y) - target;
    for (int it = 0; it < 200; ++it) {
        if (std::fabs(resid) <= 1e-11 * region || hi - lo <= 1e-13 * std::max(1.0, std::fabs(y))) {
            break;
        }
        (resid < 0.0 ? lo : hi) = y;
        const double deriv = density(y);
        double next = y - resid / deriv;
        if (!(deriv > 0.0) || !(next > lo) || !(next < hi)) {
            next = 0.5 * (lo + hi);
        }
        y = next;
        resid = cdf_num(y) - target;
    }
    // pin inside the region regardless of root-solve rounding
    const double eps1 = case_one ? std::max(y, nq1) : std::min(y, nq1);
    return {eps1, eps2_given_eps1(case_one, l21, nq2, eps1, u2)};
}

} // namespace

std::pair<double, double> sample_case_I(const CorrelationStructure& st, double p_s1,
                                        double p_s2, double q1, double q2, RandomStream& rng) {
    return sample_case(st, true, p_s1, p_s2, q1, q2, rng);
}

std::pair<double, double> sample_case_II(const CorrelationStructure& st, double p_s1,
                                         double p_s2, double q1, double q2, RandomStream& rng) {
    return sample_case(st, false, p_s1, p_s2, q1, q2, rng);
}

} // namespace dtdcva
