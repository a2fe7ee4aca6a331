#pragma once

#include "afree/grid.hpp"
#include "afree/multiplier.hpp"

namespace afree {

/**
 * Minimal decomposition chi = d_t eps' + (grad^{2k})* sigma' realizing the
 * norm of the parabolic equation space. eps' has the m channels of chi,
 * sigma' carries d^{2k} tensor slots per channel (slot-major layout).
 */
struct Decomposition {
    SpaceTimeField eps_part;
    SpaceTimeField sigma_part;
    double norm = 0.0;        // sqrt(|eps'|_p^2 + |sigma'|_q^2)
    double residual = 0.0;    // reconstruction defect, relative
    double p = 2.0, q = 2.0;
    int iterations = 0;
    bool converged = true;
};

namespace detail {

/// Tensor power d^(2k) (number of sigma' slots per channel).
inline int sigma_slots(const TorusGrid& g) {
    int s = 1;
    for (int i = 0; i < 2 * g.k(); ++i) s *= g.d();
    return s;
}

/// Row of the per-mode constraint: a * eps'_c + sum_j b_j sigma'_{j,c} = chi_c.
struct ModeRow {
    Complex a;
    RealVector b;
    double denom;  // |a|^2 + |b|^2
};

inline ModeRow mode_row(const TorusGrid& g, std::int64_t flat) {
    ModeRow row;
    RealVector xi = g.symbol_freq(flat);
    row.a = two_pi_i * xi(0);
    const int d = g.d();
    const int slots = sigma_slots(g);
    row.b = RealVector::Ones(slots);
    // symbol of (grad^{2k})*: (2 pi i)^{2k} xi^{j_1} ... xi^{j_2k}
    double scale = std::pow(-4.0 * pi * pi, g.k());
    for (int s = 0; s < slots; ++s) {
        int rest = s;
        double mono = 1.0;
        for (int rep = 0; rep < 2 * g.k(); ++rep) {
            mono *= xi(1 + rest % d);
            rest /= d;
        }
        row.b(s) = scale * mono;
    }
    row.denom = std::norm(row.a) + row.b.squaredNorm();
    return row;
}

inline double lp_norm(const SpaceTimeField& f, double p) {
    const std::int64_t n = f.grid().points();
    double acc = 0;
    for (std::int64_t z = 0; z < n; ++z) {
        double a2 = 0;
        for (int c = 0; c < f.components(); ++c) a2 += std::norm(f.at(c, z));
        acc += std::pow(a2, p / 2.0);
    }
    return std::pow(acc / static_cast<double>(n), 1.0 / p);
}

/// Gradient of 1/2 |f|_p^2 in the mean-weighted inner product.
inline SpaceTimeField lp_sq_gradient(const SpaceTimeField& f, double p, double norm_p) {
    SpaceTimeField grad(f.grid_ptr(), f.components(), Space::Physical, f.real_valued());
    if (norm_p <= 0) return grad;
    const double outer = std::pow(norm_p, 2.0 - p);
    for (std::int64_t z = 0; z < f.grid().points(); ++z) {
        double a2 = 0;
        for (int c = 0; c < f.components(); ++c) a2 += std::norm(f.at(c, z));
        double a = std::sqrt(a2);
        double w = a > 1e-300 ? outer * std::pow(a, p - 2.0) : 0.0;
        for (int c = 0; c < f.components(); ++c) grad.at(c, z) = w * f.at(c, z);
    }
    return grad;
}

}  // namespace detail

/**
 * For p = q = 2 the per-frequency least-squares solution in closed form;
 * otherwise projected gradient descent on the uniformly convex objective,
 * initialized from the p = q = 2 solution. Input must be zero-mean (the
 * scalar summand of the equation space is handled by neg_norm).
 */
inline Decomposition minimal_decomposition(const SpaceTimeField& chi, double p, double q,
                                           int max_iters = 600, double tol = 1e-6) {
    if (p <= 1 || q <= 1) throw invalid_argument("minimal_decomposition: exponents must exceed 1");
    const TorusGrid& g = chi.grid();
    const int m = chi.components();
    const int slots = detail::sigma_slots(g);
    SpaceTimeField hat = to_frequency(chi);

    double max_abs = 0;
    for (const auto& z : hat.raw()) max_abs = std::max(max_abs, std::abs(z));
    if (hat.value(0).norm() > 1e-10 * (1.0 + max_abs))
        throw invalid_argument("minimal_decomposition: input must have zero mean");

    Decomposition dec;
    dec.p = p;
    dec.q = q;
    dec.eps_part = SpaceTimeField(chi.grid_ptr(), m, Space::Frequency, chi.real_valued());
    dec.sigma_part = SpaceTimeField(chi.grid_ptr(), slots * m, Space::Frequency, chi.real_valued());

    // least-norm r = 2 solution, also the initializer for general exponents
    double unreachable = 0.0, total = 0.0;
    for (std::int64_t flat = 1; flat < g.points(); ++flat) {
        detail::ModeRow row = detail::mode_row(g, flat);
        for (int c = 0; c < m; ++c) {
            Complex rhs = hat.at(c, flat);
            total += std::norm(rhs);
            if (row.denom < 1e-28) {
                unreachable += std::norm(rhs);
                continue;
            }
            dec.eps_part.at(c, flat) = std::conj(row.a) * rhs / row.denom;
            for (int s = 0; s < slots; ++s) dec.sigma_part.at(s * m + c, flat) = row.b(s) * rhs / row.denom;
        }
    }
    dec.residual = total > 0 ? std::sqrt(unreachable / total) : 0.0;

    if (p == 2.0 && q == 2.0) {
        double ne = dec.eps_part.norm2(), ns = dec.sigma_part.norm2();
        dec.norm = std::sqrt(ne * ne + ns * ns);
        return dec;
    }

    // general exponents: minimize 1/2(|eps|_p^2 + |sigma|_q^2) over the affine set
    auto project = [&](SpaceTimeField& eps_hat, SpaceTimeField& sig_hat) {
        for (std::int64_t flat = 1; flat < g.points(); ++flat) {
            detail::ModeRow row = detail::mode_row(g, flat);
            if (row.denom < 1e-28) {
                for (int c = 0; c < m; ++c) {
                    eps_hat.at(c, flat) = 0;
                    for (int s = 0; s < slots; ++s) sig_hat.at(s * m + c, flat) = 0;
                }
                continue;
            }
            for (int c = 0; c < m; ++c) {
                Complex val = row.a * eps_hat.at(c, flat);
                for (int s = 0; s < slots; ++s) val += row.b(s) * sig_hat.at(s * m + c, flat);
                Complex defect = (val - hat.at(c, flat)) / row.denom;
                eps_hat.at(c, flat) -= std::conj(row.a) * defect;
                for (int s = 0; s < slots; ++s) sig_hat.at(s * m + c, flat) -= row.b(s) * defect;
            }
        }
        for (int c = 0; c < m; ++c) eps_hat.at(c, 0) = 0;
        for (int c = 0; c < slots * m; ++c) sig_hat.at(c, 0) = 0;
    };

    SpaceTimeField eps_hat = dec.eps_part, sig_hat = dec.sigma_part;
    auto objective = [&](const SpaceTimeField& e_hat, const SpaceTimeField& s_hat, double& np, double& nq) {
        np = detail::lp_norm(inverse_transform(e_hat), p);
        nq = detail::lp_norm(inverse_transform(s_hat), q);
        return 0.5 * (np * np + nq * nq);
    };

    double np, nq;
    double obj = objective(eps_hat, sig_hat, np, nq);
    double step = 0.5;
    int it = 0;
    bool stalled = false;
    for (; it < max_iters; ++it) {
        SpaceTimeField eps_phys = inverse_transform(eps_hat), sig_phys = inverse_transform(sig_hat);
        SpaceTimeField ge = transform(detail::lp_sq_gradient(eps_phys, p, np));
        SpaceTimeField gs = transform(detail::lp_sq_gradient(sig_phys, q, nq));

        bool accepted = false;
        for (int back = 0; back < 40 && !accepted; ++back) {
            SpaceTimeField te = eps_hat, ts = sig_hat;
            for (std::size_t i = 0; i < te.raw().size(); ++i) te.raw()[i] -= step * ge.raw()[i];
            for (std::size_t i = 0; i < ts.raw().size(); ++i) ts.raw()[i] -= step * gs.raw()[i];
            project(te, ts);
            double tn_p, tn_q;
            double cand = objective(te, ts, tn_p, tn_q);
            if (cand <= obj) {
                if (obj - cand < 1e-12 * (1.0 + obj)) stalled = true;
                eps_hat = std::move(te);
                sig_hat = std::move(ts);
                obj = cand;
                np = tn_p;
                nq = tn_q;
                step *= 1.3;
                accepted = true;
            } else {
                step *= 0.5;
            }
        }
        if (!accepted || stalled) break;
    }
    dec.iterations = it;
    dec.converged = stalled || it < max_iters;
    if (!dec.converged)
        throw no_convergence("minimal_decomposition: iteration budget exhausted", dec.residual);
    dec.eps_part = std::move(eps_hat);
    dec.sigma_part = std::move(sig_hat);
    dec.norm = std::sqrt(np * np + nq * nq);
    if (dec.residual > tol)
        throw no_convergence("minimal_decomposition: unreachable modes in input", dec.residual);
    return dec;
}

/// Computable surrogate for the negative-space norm: |||(eps',sigma')||| + |mean|.
inline double neg_norm(const SpaceTimeField& chi, double p, double q) {
    SpaceTimeField hat = to_frequency(chi);
    Vector mean0 = hat.value(0);
    SpaceTimeField centered = hat;
    for (int c = 0; c < chi.components(); ++c) centered.at(c, 0) = 0;
    Decomposition dec = minimal_decomposition(centered, p, q);
    return dec.norm + mean0.norm();
}

}  // namespace afree
