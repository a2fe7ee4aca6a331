#pragma once

#include "afree/multiplier.hpp"
#include "afree/neg_norm.hpp"
#include "afree/parabolic.hpp"

namespace afree {

/**
 * Frequency-wise orthogonal projection onto ker op[xi_x] (identity at
 * xi_x = 0). Idempotent; op must be spatial-homogeneous constant rank.
 */
inline SpaceTimeField project_kernel_isotropic(const SpaceTimeField& f, const OperatorSpec& op) {
    if (op.kind != OperatorKind::SpatialHomogeneous)
        throw invalid_argument("project_kernel_isotropic: operator must be spatial-homogeneous");
    if (op.in_channels != f.components())
        throw invalid_argument("project_kernel_isotropic: channel mismatch");
    const TorusGrid& g = f.grid();
    const int m = f.components();

    std::vector<RealMatrix> proj(g.spatial_points());
    for (std::int64_t sx = 0; sx < g.spatial_points(); ++sx) {
        RealVector xi(g.d());
        std::int64_t rest = sx;
        for (int a = g.d() - 1; a >= 0; --a) {
            xi(a) = g.freq_x(static_cast<int>(rest % g.Nx()));
            rest /= g.Nx();
        }
        if (xi.squaredNorm() == 0.0) {
            proj[sx] = RealMatrix::Identity(m, m);
        } else {
            RealMatrix A = eval_symbol_real(op, xi);
            Matrix Apinv = moore_penrose(A.cast<Complex>());
            proj[sx] = (Matrix::Identity(m, m) - Apinv * A.cast<Complex>()).real();
        }
    }

    SpaceTimeField hat = to_frequency(f);
    SpaceTimeField out(f.grid_ptr(), m, Space::Frequency, f.real_valued());
    parallel_for(g.points(), [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t flat = lo; flat < hi; ++flat) {
            std::int64_t sx = flat % g.spatial_points();
            out.set_value(flat, proj[sx].cast<Complex>() * hat.value(flat));
        }
    });
    return f.space() == Space::Physical ? inverse_transform(out) : out;
}

/// Leray projection: specialization to S = div on d-vector fields.
inline SpaceTimeField leray_project(const SpaceTimeField& f) {
    return project_kernel_isotropic(f, op_divergence(f.grid().d()));
}

/// First component of A(eps, sigma): d_t eps - Q* Pi_S Q sigma, in frequency space.
inline SpaceTimeField compute_chi(const PairCache& cache, const SpaceTimeField& eps,
                                  const SpaceTimeField& sigma) {
    const TorusGrid& g = cache.grid();
    const int m = cache.pair().m();
    SpaceTimeField ehat = to_frequency(eps), shat = to_frequency(sigma);
    SpaceTimeField chi(cache.grid_ptr(), m, Space::Frequency, eps.real_valued() && sigma.real_valued());
    parallel_for(g.points(), [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t flat = lo; flat < hi; ++flat) {
            std::int64_t sx = flat % g.spatial_points();
            Complex a = two_pi_i * g.symbol_freq(flat)(0);
            Vector v = a * ehat.value(flat) - cache.M(sx).cast<Complex>() * shat.value(flat);
            chi.set_value(flat, v);
        }
    });
    return chi;
}

/// Second component of A(eps, sigma): the strain annihilator, in frequency space.
inline SpaceTimeField apply_eps_annihilator(const PairCache& cache, const SpaceTimeField& eps) {
    const TorusGrid& g = cache.grid();
    const auto& annih = cache.pair().eps_annihilator();
    const Complex scalar = std::pow(two_pi_i, annih.order);
    SpaceTimeField ehat = to_frequency(eps);
    SpaceTimeField out(cache.grid_ptr(), annih.out_channels, Space::Frequency, eps.real_valued());
    parallel_for(g.points(), [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t flat = lo; flat < hi; ++flat) {
            std::int64_t sx = flat % g.spatial_points();
            out.set_value(flat, scalar * (cache.annihilator_real(sx).cast<Complex>() * ehat.value(flat)));
        }
    });
    return out;
}

/// Surrogate norm of A(eps, sigma) in the product negative space.
inline double parabolic_residual(const PairCache& cache, const SpaceTimeField& eps,
                                 const SpaceTimeField& sigma, double p = 2.0, double q = 2.0) {
    double eqn = neg_norm(compute_chi(cache, eps, sigma), p, q);
    const auto& annih = cache.pair().eps_annihilator();
    SpaceTimeField res = apply_eps_annihilator(cache, eps);
    return eqn + sobolev_norm(res, 0.0, -annih.order / 2.0);
}

struct ProjectedPair {
    SpaceTimeField eps;
    SpaceTimeField sigma;
};

/**
 * Linear parabolic projection (integrability 2) via the splitter route:
 * the temporal part of chi corrects the strain through d_t^{-1}, the
 * spatial part corrects the stress through (Q* Pi_S Q)^{-1}. On the lattice
 * the temporal weight is forced to zero on {xi_t = 0} where d_t^{-1}
 * vanishes; the complementary weight then rides on the stress correction,
 * which annihilates exactly.
 */
inline ProjectedPair project_parabolic_linear(const PairCache& cache, const SpaceTimeField& eps,
                                              const SpaceTimeField& sigma) {
    const TorusGrid& g = cache.grid();
    const int m = cache.pair().m();
    CutoffProfile phi;
    const double gamma = 2.0 * g.k();

    SpaceTimeField ehat = to_frequency(eps), shat = to_frequency(sigma);
    SpaceTimeField chi = compute_chi(cache, ehat, shat);

    ProjectedPair out{SpaceTimeField(cache.grid_ptr(), m, Space::Frequency, eps.real_valued()),
                      SpaceTimeField(cache.grid_ptr(), m, Space::Frequency, sigma.real_valued())};
    parallel_for(g.points(), [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t flat = lo; flat < hi; ++flat) {
            std::int64_t sx = flat % g.spatial_points();
            if (flat == 0) {
                out.eps.set_value(flat, ehat.value(flat));
                out.sigma.set_value(flat, shat.value(flat));
                continue;
            }
            RealVector xi = g.symbol_freq(flat);
            const RealMatrix& PiK = cache.kernel_projector(sx);
            Vector c = chi.value(flat);
            double ratio = std::sqrt(1.0 + xi(0) * xi(0)) / std::pow(1.0 + xi.tail(g.d()).squaredNorm(), gamma / 2.0);
            double wt = xi(0) != 0.0 ? phi(ratio) : 0.0;

            Vector ebar = PiK.cast<Complex>() * ehat.value(flat);
            if (wt != 0.0) {
                Complex inv_a = 1.0 / (two_pi_i * xi(0));
                ebar -= (wt * inv_a) * (PiK.cast<Complex>() * c);
            }
            Vector sbar = shat.value(flat);
            if (wt != 1.0) {
                Vector corr = cache.M_pinv(sx).cast<Complex>() * c;
                sbar += (1.0 - wt) * (PiK.cast<Complex>() * corr);
            }
            out.eps.set_value(flat, ebar);
            out.sigma.set_value(flat, sbar);
        }
    });
    if (eps.space() == Space::Physical) {
        out.eps = inverse_transform(out.eps);
        out.sigma = inverse_transform(out.sigma);
    }
    return out;
}

/**
 * Non-linear parabolic projection for general exponents. The correction is
 * driven by the minimal decomposition of chi: the temporal part adjusts the
 * strain, the spatial part is pushed through (Q* Pi_S Q)^{-1} (grad^{2k})*
 * onto the stress. Mean preserved; output is A-free.
 */
inline ProjectedPair project_parabolic_nonlinear(const PairCache& cache, const SpaceTimeField& eps,
                                                 const SpaceTimeField& sigma, double p, double q) {
    const TorusGrid& g = cache.grid();
    const int m = cache.pair().m();

    SpaceTimeField ehat = to_frequency(eps), shat = to_frequency(sigma);
    SpaceTimeField chi = compute_chi(cache, ehat, shat);
    Decomposition dec = minimal_decomposition(chi, p, q);
    SpaceTimeField eps_chi = to_frequency(dec.eps_part), sig_chi = to_frequency(dec.sigma_part);
    const int slots = detail::sigma_slots(g);

    ProjectedPair out{SpaceTimeField(cache.grid_ptr(), m, Space::Frequency, eps.real_valued()),
                      SpaceTimeField(cache.grid_ptr(), m, Space::Frequency, sigma.real_valued())};
    parallel_for(g.points(), [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t flat = lo; flat < hi; ++flat) {
            std::int64_t sx = flat % g.spatial_points();
            if (flat == 0) {
                out.eps.set_value(flat, ehat.value(flat));
                out.sigma.set_value(flat, shat.value(flat));
                continue;
            }
            RealVector xi = g.symbol_freq(flat);
            const RealMatrix& PiK = cache.kernel_projector(sx);

            Vector etil = PiK.cast<Complex>() * ehat.value(flat);
            if (xi(0) != 0.0) etil -= PiK.cast<Complex>() * eps_chi.value(flat);

            detail::ModeRow row = detail::mode_row(g, flat);
            Vector grad_part = Vector::Zero(m);
            for (int c = 0; c < m; ++c)
                for (int s = 0; s < slots; ++s) grad_part(c) += row.b(s) * sig_chi.at(s * m + c, flat);
            Vector stil = shat.value(flat) + PiK.cast<Complex>() * (cache.M_pinv(sx).cast<Complex>() * grad_part);

            out.eps.set_value(flat, etil);
            out.sigma.set_value(flat, stil);
        }
    });
    if (eps.space() == Space::Physical) {
        out.eps = inverse_transform(out.eps);
        out.sigma = inverse_transform(out.sigma);
    }
    return out;
}

}  // namespace afree
