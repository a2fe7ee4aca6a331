#pragma once

#include <cmath>

#include "afree/common.hpp"

namespace afree {

/**
 * Radial constitutive law sigma = mu(|eps|) eps with potential W.
 *
 * power-law:    mu(s) = mu0 (kappa + s)^(p-2)        (Ostwald-De Waele)
 * carreau-like: mu(s) = mu0 (kappa^2 + s^2)^((p-2)/2)
 *
 * An optional regularization term eta^{rp} s^{rp} / rp is carried along so
 * the regularized family shares all evaluators.
 */
struct ConstitutiveLaw {
    enum class Family { PowerLaw, CarreauLike };
    Family family = Family::PowerLaw;
    double mu0 = 1.0;
    double kappa = 0.0;
    double p = 2.0;
    double eta = 0.0;   // regularization scale; 0 = plain law
    double rp = 0.0;    // regularization exponent r' > max(p, 2)

    double q() const { return p / (p - 1.0); }

    void validate() const {
        if (mu0 <= 0) throw invalid_argument("ConstitutiveLaw: mu0 must be positive");
        if (kappa < 0) throw invalid_argument("ConstitutiveLaw: kappa must be non-negative");
        if (p <= 1) throw invalid_argument("ConstitutiveLaw: p must exceed 1");
        if (eta < 0) throw invalid_argument("ConstitutiveLaw: eta must be non-negative");
        if (eta > 0 && rp <= std::max(p, 2.0))
            throw invalid_argument("ConstitutiveLaw: regularization exponent must exceed max(p, 2)");
    }

    /// Radial potential w(s) with W(eps) = w(|eps|).
    double w_radial(double s) const {
        double base;
        if (family == Family::PowerLaw) {
            if (kappa == 0.0) {
                base = mu0 * std::pow(s, p) / p;
            } else {
                double ks = kappa + s;
                base = mu0 * ((std::pow(ks, p) - std::pow(kappa, p)) / p -
                              kappa * (std::pow(ks, p - 1.0) - std::pow(kappa, p - 1.0)) / (p - 1.0));
            }
        } else {
            base = mu0 * (std::pow(kappa * kappa + s * s, p / 2.0) - std::pow(kappa, p)) / p;
        }
        if (eta > 0) base += std::pow(eta, rp) * std::pow(s, rp) / rp;
        return base;
    }

    /// dw/ds, the radial stress magnitude; strictly increasing for p > 1.
    double dw_radial(double s) const {
        double base;
        if (family == Family::PowerLaw)
            base = mu0 * std::pow(kappa + s, p - 2.0) * s;
        else
            base = mu0 * std::pow(kappa * kappa + s * s, (p - 2.0) / 2.0) * s;
        if (eta > 0) base += std::pow(eta, rp) * std::pow(s, rp - 1.0);
        return base;
    }

    /// Solve dw(s) = t; monotone bisection after bracket expansion.
    double dw_inverse(double t) const {
        if (t <= 0) return 0.0;
        double hi = 1.0;
        int guard = 0;
        while (dw_radial(hi) < t) {
            hi *= 2.0;
            if (++guard > 400) throw no_convergence("ConstitutiveLaw: conjugate bracket expansion failed", t);
        }
        double lo = 0.0;
        for (int i = 0; i < 128; ++i) {
            double mid = 0.5 * (lo + hi);
            (dw_radial(mid) < t ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

    /// Convex conjugate w*(t) = sup_s (s t - w(s)); closed forms where cheap.
    double conjugate_radial(double t) const {
        t = std::abs(t);
        if (t == 0.0) return 0.0;
        if (eta == 0.0 && family == Family::PowerLaw) {
            if (p == 2.0) return t * t / (2.0 * mu0);
            if (kappa == 0.0) {
                double qq = q();
                return std::pow(mu0, 1.0 - qq) * std::pow(t, qq) / qq;
            }
        }
        double s = dw_inverse(t);
        return s * t - w_radial(s);
    }

    /// d w*/dt = argmax s (envelope theorem).
    double conjugate_derivative_radial(double t) const { return dw_inverse(std::abs(t)); }
};

inline ConstitutiveLaw power_law(double p, double mu0 = 1.0, double kappa = 0.0) {
    ConstitutiveLaw law{ConstitutiveLaw::Family::PowerLaw, mu0, kappa, p};
    law.validate();
    return law;
}

inline ConstitutiveLaw carreau_law(double p, double mu0 = 1.0, double kappa = 1.0) {
    ConstitutiveLaw law{ConstitutiveLaw::Family::CarreauLike, mu0, kappa, p};
    law.validate();
    return law;
}

/// W_eta = W + eta^{r'} |.|^{r'} / r'; the conjugate is the inf-convolution.
inline ConstitutiveLaw regularize(const ConstitutiveLaw& law, double eta, double r_prime) {
    if (law.eta != 0.0) throw invalid_argument("regularize: law is already regularized");
    if (eta <= 0) throw invalid_argument("regularize: eta must be positive");
    ConstitutiveLaw out = law;
    out.eta = eta;
    out.rp = r_prime;
    out.validate();
    return out;
}

inline double W_eval(const ConstitutiveLaw& law, const RealVector& eps) { return law.w_radial(eps.norm()); }

inline RealVector DW_eval(const ConstitutiveLaw& law, const RealVector& eps) {
    double s = eps.norm();
    if (s == 0.0) return RealVector::Zero(eps.size());
    return (law.dw_radial(s) / s) * eps;
}

inline double conjugate_eval(const ConstitutiveLaw& law, const RealVector& sigma) {
    return law.conjugate_radial(sigma.norm());
}

inline RealVector conjugate_gradient_eval(const ConstitutiveLaw& law, const RealVector& sigma) {
    double t = sigma.norm();
    if (t == 0.0) return RealVector::Zero(sigma.size());
    return (law.conjugate_derivative_radial(t) / t) * sigma;
}

/// Fenchel-Young gap W(eps) + W*(sigma) - eps . sigma; zero iff sigma = DW(eps).
inline double f_constitutive(const ConstitutiveLaw& law, const RealVector& eps, const RealVector& sigma) {
    return W_eval(law, eps) + conjugate_eval(law, sigma) - eps.dot(sigma);
}

}  // namespace afree
