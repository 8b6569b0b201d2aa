#include "dtdcva/mathkit.hpp"

#include "dtdcva/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dtdcva {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343818684758586311649;
constexpr double kSqrt2Pi = 2.5066282746310005024157652848110452530069867406099;
constexpr double kTwoPi = 6.2831853071795864769252867665590057683943387987502;

} // namespace

double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double norm_cdf(double x) {
    const double p = 0.5 * std::erfc(-x * M_SQRT1_2);
    if (p == 0.0 && x > -1e10) {
        return std::numeric_limits<double>::denorm_min();
    }
    return p;
}

double clamp_probability(double p) {
    return std::clamp(p, 1e-16, 1.0 - 1e-16);
}

double norm_inv(double p) {
    if (!(p > 0.0) || !(p < 1.0)) {
        std::ostringstream msg;
        msg << "norm_inv: p = " << p << " outside (0,1)";
        throw std::domain_error(msg.str());
    }

    // Acklam's rational minimax approximation, relative error < 1.15e-9.
    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // One Halley step; the density stays representable for |x| < ~38.
    const double pdf = norm_pdf(x);
    if (pdf > 0.0) {
        const double err = norm_cdf(x) - p;
        const double u = err / pdf;
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

double tail_inv_asymptotic(double q, double u) {
    if (!(q >= 8.0)) {
        throw std::domain_error("tail_inv_asymptotic: requires q >= 8");
    }
    if (!(u > 0.0) || u > 1.0) {
        throw std::domain_error("tail_inv_asymptotic: u outside (0,1]");
    }
    const double arg = 2.0 * u / q;
    if (!(arg > 0.0)) {
        throw std::domain_error("tail_inv_asymptotic: non-positive log argument");
    }
    const double a = q * q - 2.0 * std::log(arg);
    return std::sqrt(a - (1.0 - 1.0 / a) * std::log(a));
}

namespace {

// Gauss-Legendre abscissas and weights used by Genz's bivariate algorithm.
const double kGlX[3][10] = {
    {-0.9324695142031521, -0.6612093864662645, -0.2386191860831969, 0, 0, 0, 0, 0, 0, 0},
    {-0.9815606342467192, -0.9041172563704749, -0.7699026741943047, -0.5873179542866175,
     -0.3678314989981802, -0.1252334085114689, 0, 0, 0, 0},
    {-0.9931285991850949, -0.9639719272779138, -0.9122344282513259, -0.8391169718222188,
     -0.7463319064601508, -0.6360536807265150, -0.5108670019508271, -0.3737060887154195,
     -0.2277858511416451, -0.07652652113349734}};
const double kGlW[3][10] = {
    {0.1713244923791704, 0.3607615730481386, 0.4679139345726910, 0, 0, 0, 0, 0, 0, 0},
    {0.04717533638651183, 0.1069393259953184, 0.1600783285433462, 0.2031674267230659,
     0.2334925365383548, 0.2491470458134028, 0, 0, 0, 0},
    {0.01761400713915212, 0.04060142980038694, 0.06267204833410907, 0.08327674157670475,
     0.1019301198172404, 0.1181945319615184, 0.1316886384491766, 0.1420961093183820,
     0.1491729864726037, 0.1527533871307258}};

// Genz (2004): P(X > dh, Y > dk) for standard bivariate normal correlation r.
double bvnd_upper(double dh, double dk, double r) {
    int ng, lg;
    const double ar = std::fabs(r);
    if (ar < 0.3) {
        ng = 0;
        lg = 3;
    } else if (ar < 0.75) {
        ng = 1;
        lg = 6;
    } else {
        ng = 2;
        lg = 10;
    }

    double h = dh;
    double k = dk;
    double hk = h * k;
    double bvn = 0.0;

    if (ar < 0.925) {
        if (ar > 0.0) {
            const double hs = (h * h + k * k) / 2.0;
            const double asr = std::asin(r);
            for (int i = 0; i < lg; ++i) {
                for (int is = -1; is <= 1; is += 2) {
                    const double sn = std::sin(asr * (is * kGlX[ng][i] + 1.0) / 2.0);
                    bvn += kGlW[ng][i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
                }
            }
            bvn = bvn * asr / (2.0 * kTwoPi);
        }
        bvn += norm_cdf(-h) * norm_cdf(-k);
    } else {
        if (r < 0.0) {
            k = -k;
            hk = -hk;
        }
        if (ar < 1.0) {
            const double as = (1.0 - r) * (1.0 + r);
            double aa = std::sqrt(as);
            const double bs = (h - k) * (h - k);
            const double cc = (4.0 - hk) / 8.0;
            const double dd = (12.0 - hk) / 16.0;
            double asr = -(bs / as + hk) / 2.0;
            if (asr > -100.0) {
                bvn = aa * std::exp(asr) *
                      (1.0 - cc * (bs - as) * (1.0 - dd * bs / 5.0) / 3.0 + cc * dd * as * as / 5.0);
            }
            if (-hk < 100.0) {
                const double bb = std::sqrt(bs);
                bvn -= std::exp(-hk / 2.0) * kSqrt2Pi * norm_cdf(-bb / aa) * bb *
                       (1.0 - cc * bs * (1.0 - dd * bs / 5.0) / 3.0);
            }
            aa /= 2.0;
            for (int i = 0; i < lg; ++i) {
                for (int is = -1; is <= 1; is += 2) {
                    double xs = aa * (is * kGlX[ng][i] + 1.0);
                    xs = xs * xs;
                    const double rs = std::sqrt(1.0 - xs);
                    asr = -(bs / xs + hk) / 2.0;
                    if (asr > -100.0) {
                        bvn += aa * kGlW[ng][i] * std::exp(asr) *
                               (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs -
                                (1.0 + cc * xs * (1.0 + dd * xs)));
                    }
                }
            }
            bvn = -bvn / kTwoPi;
        }
        if (r > 0.0) {
            bvn += norm_cdf(-std::max(h, k));
        } else {
            bvn = -bvn;
            if (k > h) {
                bvn += norm_cdf(k) - norm_cdf(h);
            }
        }
    }
    return bvn;
}

} // namespace

double bivar_norm_cdf(double a, double b, double rho) {
    if (!(std::fabs(rho) <= 1.0)) {
        throw std::domain_error("bivar_norm_cdf: |rho| > 1");
    }
    if (rho == 1.0) {
        return norm_cdf(std::min(a, b));
    }
    if (rho == -1.0) {
        return std::max(0.0, norm_cdf(a) + norm_cdf(b) - 1.0);
    }
    const double p = bvnd_upper(-a, -b, rho);
    return std::clamp(p, 0.0, 1.0);
}

std::vector<double> LowerTriangular::multiply_transpose() const {
    std::vector<double> out(n_ * n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k <= j; ++k) {
                s += entries_[i * n_ + k] * entries_[j * n_ + k];
            }
            out[i * n_ + j] = s;
            out[j * n_ + i] = s;
        }
    }
    return out;
}

LowerTriangular cholesky(const std::vector<double>& sigma, std::size_t n) {
    if (sigma.size() != n * n) {
        throw std::invalid_argument("cholesky: matrix size does not match dimension");
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::fabs(sigma[i * n + j] - sigma[j * n + i]) > 1e-12) {
                throw std::invalid_argument("cholesky: matrix is not symmetric");
            }
        }
    }
    LowerTriangular chol(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = sigma[i * n + j];
            for (std::size_t k = 0; k < j; ++k) {
                s -= chol(i, k) * chol(j, k);
            }
            if (i == j) {
                if (!(s > 0.0)) {
                    std::ostringstream msg;
                    msg << "cholesky: non-positive pivot " << s << " at index " << i;
                    throw NotPositiveDefiniteError(msg.str(), i);
                }
                chol.at(i, i) = std::sqrt(s);
            } else {
                chol.at(i, j) = s / chol(j, j);
            }
        }
    }
    return chol;
}

} // namespace dtdcva
